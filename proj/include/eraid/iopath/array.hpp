#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <utility>
#include <vector>

#include "eraid/common.hpp"
#include "eraid/czdev/device.hpp"
#include "eraid/czdev/parity_model.hpp"
#include "eraid/journal/journal.hpp"
#include "eraid/layout/bitmap.hpp"
#include "eraid/layout/geometry.hpp"
#include "eraid/util/worker_pool.hpp"

namespace eraid {

struct ArrayConfig {
  GeometryConfig geometry;
  CompressMode mode = CompressMode::modeled;
  ParityPolicy parity_policy = ParityPolicy::linkage;
  // Journal size as a fraction of each device's segment space. 0 disables the
  // journal and user writes update stripes synchronously.
  double journal_fraction = 0.01;
  std::size_t migration_workers = 4;
  std::size_t migration_batch = 64;
  // Pending records that trigger a migration batch after an append; 0 picks
  // half the journal capacity.
  std::size_t migrate_threshold = 0;

  // Fills in geometry.journal_rows from journal_fraction.
  GeometryConfig resolved_geometry() const;
};

struct AmpCounters {
  std::uint64_t user_reads = 0;
  std::uint64_t user_writes = 0;
  std::uint64_t device_reads = 0;         // read path
  std::uint64_t device_writes = 0;        // write path, journal included
  std::uint64_t write_path_reads = 0;     // RMW reads charged to user writes
  std::uint64_t journal_writes = 0;
  double wa() const;
  double ra() const;
  double write_ra() const;
};

struct ArrayMode {
  std::optional<int> degraded_device;
  bool degraded() const { return degraded_device.has_value(); }
};

struct ScrubReport {
  std::uint64_t segments_checked = 0;
  std::uint64_t segments_skipped = 0;
  std::uint64_t parity_mismatches = 0;
  std::uint64_t mirror_mismatches = 0;
  std::uint64_t stale_positions = 0;   // mapped blocks at positions the level leaves empty
  std::vector<std::uint64_t> bad_segments;
  bool clean() const { return parity_mismatches == 0 && mirror_mismatches == 0; }
};

// Checks stripe consistency straight from device contents: R5 parity equals
// the XOR of its data strips, R10 copies agree. Positions on offline devices
// are skipped.
ScrubReport scrub_devices(const ArrayGeometry& g, const std::vector<DevicePtr>& devices,
                          const LevelBitmap& levels);

struct SegmentRatios {
  std::uint64_t data_bytes = 0;     // stored bytes of the data strips (copy A)
  std::uint64_t parity_bytes = 0;   // stored bytes of the parity strip (R5)
  std::uint64_t data_blocks = 0;    // mapped data blocks
  double alpha_usr() const;
  double alpha_pty() const;
};

class ElasticArray {
 public:
  using AccessObserver = std::function<void(std::uint64_t seg, Level level, bool is_write)>;

  // Formats fresh devices: every segment starts as R5 and is trimmed.
  static std::unique_ptr<ElasticArray> create(const ArrayConfig& cfg,
                                              std::vector<DevicePtr> devices);
  // Crash recovery: loads the newest bitmap replica, redoes the journal and
  // reclaims positions left behind by interrupted conversions.
  static std::unique_ptr<ElasticArray> open(const ArrayConfig& cfg,
                                            std::vector<DevicePtr> devices);
  // Devices sized for cfg, one per geometry device.
  static std::vector<DevicePtr> make_devices_for(const ArrayConfig& cfg);

  ~ElasticArray();

  const ArrayConfig& config() const { return cfg_; }
  const ArrayGeometry& geometry() const { return g_; }
  const std::vector<DevicePtr>& devices() const { return devices_; }
  WriteJournal& journal() { return *journal_; }
  const LevelBitmap& levels() const { return bitmap_; }

  void write(std::uint64_t user_lba, ConstBlockSpan payload,
             std::optional<SizeHint> hint = std::nullopt);
  Block read(std::uint64_t user_lba);
  void read_into(std::uint64_t user_lba, BlockSpan out);

  // Applies up to `max` journal records to their stripes; returns records retired.
  std::size_t migrate_batch(std::size_t max);
  // Migrates everything, seals the head row and frees the journal.
  void drain_journal();

  ArrayMode mode() const;
  void fail_device(int device);
  // Brings a device back and rebuilds every position it holds.
  void restore_device(int device);

  Level level(std::uint64_t seg) const { return bitmap_.get(seg); }
  double coverage() const;
  std::uint64_t r10_segments() const { return bitmap_.count_r10(); }
  std::shared_mutex& segment_lock(std::uint64_t seg) const {
    return seg_locks_[seg % seg_locks_.size()];
  }
  // Sets the level bit and persists the bitmap to every online device. The
  // caller holds the segment's exclusive lock.
  void commit_level(std::uint64_t seg, Level level);
  std::uint64_t bitmap_seq() const;

  // Contents of `device`'s slot-1 block at `offset` rebuilt from the other n
  // slot-1 blocks (n device reads).
  Block reconstruct_strip(std::uint64_t seg, int device, std::uint32_t offset,
                          IoClass cls = IoClass::user_read);
  // Device serving a read of an R10 strip: an online copy with fewer
  // in-flight operations, ties to the lower id.
  int mirror_read_select(std::uint64_t seg, std::uint32_t strip) const;
  // Trims positions the segment's level leaves empty. Idempotent.
  void cleanup_segment(std::uint64_t seg);

  ScrubReport scrub() const;

  SizeHint parity_hint_for(std::span<const std::uint32_t> data_lens) const {
    return parity_hint(data_lens, cfg_.parity_policy);
  }
  SegmentRatios segment_ratios(std::uint64_t seg) const;

  void set_access_observer(AccessObserver obs) { observer_ = std::move(obs); }

  AmpCounters amp() const;
  void reset_amp();

  // Sum of physical usage over devices, and the per-device vector.
  std::uint64_t physical_used() const;
  std::vector<std::uint64_t> device_usage() const;

  // Shared while any I/O or conversion runs; exclusive for fail/restore.
  std::shared_mutex& array_lock() const { return array_mu_; }

 private:
  ElasticArray(const ArrayConfig& cfg, std::vector<DevicePtr> devices);

  bool online(int device) const { return devices_[device]->online(); }
  std::optional<int> offline_device() const;
  void apply_record(const JournalRecord& rec);
  void stripe_update(std::uint64_t user_lba, ConstBlockSpan payload, std::uint32_t hint_len,
                     bool reconstruct_write);
  void update_r5(const MappedLba& m, ConstBlockSpan payload, std::uint32_t hint_len,
                 bool reconstruct_write);
  void update_r10(const MappedLba& m, ConstBlockSpan payload, std::uint32_t hint_len);
  std::uint32_t write_block(const Location& loc, ConstBlockSpan data, std::uint32_t hint_len,
                            IoClass cls);
  std::uint32_t projected_len(ConstBlockSpan data, std::uint32_t hint_len) const;
  void ensure_room(const std::vector<std::pair<Location, std::uint32_t>>& writes) const;
  std::size_t migrate_locked(std::size_t max);
  void drain_locked();
  void recover();
  void rebuild_device(int device);
  std::vector<std::uint32_t> stripe_lens(std::uint64_t seg, std::uint32_t offset,
                                         std::optional<std::uint32_t> replace_strip,
                                         std::uint32_t replace_len) const;

  ArrayConfig cfg_;
  ArrayGeometry g_;
  std::vector<DevicePtr> devices_;
  LevelBitmap bitmap_;
  std::unique_ptr<WriteJournal> journal_;
  std::unique_ptr<WorkerPool> pool_;
  mutable std::vector<std::shared_mutex> seg_locks_;
  mutable std::shared_mutex array_mu_;
  mutable std::mutex bitmap_mu_;
  std::mutex migrate_mu_;
  std::uint64_t bitmap_seq_ = 0;
  std::size_t migrate_threshold_ = 0;
  AccessObserver observer_;

  std::atomic<std::uint64_t> user_reads_{0};
  std::atomic<std::uint64_t> user_writes_{0};
  std::array<ClassCounters, kIoClassCount> base_{};
};

}  // namespace eraid
