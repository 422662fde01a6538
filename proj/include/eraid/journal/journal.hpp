#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "eraid/common.hpp"
#include "eraid/czdev/device.hpp"
#include "eraid/czdev/parity_model.hpp"
#include "eraid/layout/geometry.hpp"

namespace eraid {

// Out-of-band header of a journal data block (32 bytes, little endian):
//   u32 magic 'EJR1' | u8 kind | u8 column | u16 stored-length hint
//   u64 seq | u64 user_lba | u32 crc32(payload, bytes 0..23) | u32 row
// The parity block of a row carries the XOR of its data blocks' headers.
inline constexpr std::uint32_t kJournalMagic = 0x31524a45;  // "EJR1"
inline constexpr std::uint8_t kJournalKindData = 1;

struct JournalHeader {
  std::uint8_t kind = kJournalKindData;
  std::uint8_t column = 0;
  std::uint16_t hint_len = 0;
  std::uint64_t seq = 0;
  std::uint64_t user_lba = 0;
  std::uint32_t row = 0;
};

BlockMeta encode_journal_header(const JournalHeader& h, ConstBlockSpan payload);
// nullopt when the magic or checksum does not match.
std::optional<JournalHeader> decode_journal_header(const BlockMeta& meta, ConstBlockSpan payload);

struct JournalRecord {
  std::uint64_t seq = 0;
  std::uint64_t user_lba = 0;
  std::uint32_t hint_len = 0;  // 0: no size hint
  std::uint64_t row = 0;
  Location loc;
  std::shared_ptr<const Block> payload;
};

struct JournalStats {
  std::uint64_t appends = 0;
  std::uint64_t data_writes = 0;
  std::uint64_t parity_writes = 0;
  std::uint64_t rows_freed = 0;
  std::uint64_t superseded = 0;
};

// Append-only journal over the tail rows of every device. Row r holds n data
// blocks and one parity block; the parity device rotates with r. Rows are
// reclaimed strictly in FIFO order, so any record still on disk is followed by
// every newer record.
class WriteJournal {
 public:
  WriteJournal(const ArrayGeometry& g, std::vector<DevicePtr> devices, ParityPolicy policy,
               std::uint64_t first_seq = 1);

  bool enabled() const { return rows_ > 0; }
  std::uint64_t capacity_records() const { return rows_ * static_cast<std::uint64_t>(n_); }

  // Throws JournalFull when no row is free.
  std::uint64_t append(std::uint64_t user_lba, ConstBlockSpan payload, std::uint32_t hint_len);
  // Closes a partially filled head row by writing its parity.
  void seal();

  std::optional<JournalRecord> lookup(std::uint64_t user_lba) const;
  // Oldest unclaimed records, up to max.
  std::vector<JournalRecord> claim(std::size_t max);
  bool is_current(const JournalRecord& r) const;
  // Record is done: applied to its stripe or superseded. Frees rows when possible.
  void retire(const JournalRecord& r, bool applied);
  // Migration failed; the record goes back to the unclaimed queue.
  void unclaim(const JournalRecord& r);

  std::size_t pending() const;
  std::size_t rows_in_use() const;
  std::uint64_t next_seq() const;
  JournalStats stats() const;

  // Trims the whole region and forgets all state (after recovery redo).
  void reset_region(std::uint64_t next_seq);

  // Valid records on disk, sorted by seq. Columns on an offline device are
  // rebuilt from the row parity when possible.
  static std::vector<JournalRecord> replay(const ArrayGeometry& g,
                                           const std::vector<DevicePtr>& devices);

 private:
  struct Row {
    std::uint64_t index = 0;   // physical row
    int next_col = 0;
    bool closed = false;
    std::uint32_t live = 0;    // appended and not yet retired
    Block parity{};
    BlockMeta parity_meta{};
    std::vector<std::uint32_t> lens;
  };

  Row& open_row();
  void close_row(Row& row);
  void free_rows();
  Row* find_row(std::uint64_t index);

  const ArrayGeometry& g_;
  std::vector<DevicePtr> devices_;
  ParityPolicy policy_;
  int n_;
  std::uint64_t rows_;

  mutable std::mutex mu_;
  std::deque<Row> active_;
  std::uint64_t next_row_ = 0;
  std::uint64_t next_seq_;
  std::unordered_map<std::uint64_t, JournalRecord> index_;  // user_lba -> newest
  std::deque<JournalRecord> unclaimed_;
  std::size_t outstanding_ = 0;
  JournalStats stats_;
};

}  // namespace eraid
