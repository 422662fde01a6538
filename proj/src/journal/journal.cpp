#include "eraid/journal/journal.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <map>

#include "eraid/error.hpp"
#include "eraid/simd/xor_kernels.hpp"

namespace eraid {

namespace {

void put16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}
void put32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint16_t get16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t header_crc(const BlockMeta& m, ConstBlockSpan payload) {
  uLong c = crc32(0L, Z_NULL, 0);
  c = crc32(c, payload.data(), static_cast<uInt>(payload.size()));
  c = crc32(c, m.data(), 24);
  return static_cast<std::uint32_t>(c);
}

void xor_meta(BlockMeta& dst, const BlockMeta& src) {
  for (std::size_t i = 0; i < kMetaSize; ++i) dst[i] ^= src[i];
}

}  // namespace

BlockMeta encode_journal_header(const JournalHeader& h, ConstBlockSpan payload) {
  BlockMeta m{};
  put32(&m[0], kJournalMagic);
  m[4] = h.kind;
  m[5] = h.column;
  put16(&m[6], h.hint_len);
  put64(&m[8], h.seq);
  put64(&m[16], h.user_lba);
  put32(&m[28], h.row);
  put32(&m[24], header_crc(m, payload));
  return m;
}

std::optional<JournalHeader> decode_journal_header(const BlockMeta& m, ConstBlockSpan payload) {
  if (get32(&m[0]) != kJournalMagic || m[4] != kJournalKindData) return std::nullopt;
  if (get32(&m[24]) != header_crc(m, payload)) return std::nullopt;
  JournalHeader h;
  h.kind = m[4];
  h.column = m[5];
  h.hint_len = get16(&m[6]);
  h.seq = get64(&m[8]);
  h.user_lba = get64(&m[16]);
  h.row = get32(&m[28]);
  return h;
}

WriteJournal::WriteJournal(const ArrayGeometry& g, std::vector<DevicePtr> devices,
                           ParityPolicy policy, std::uint64_t first_seq)
    : g_(g),
      devices_(std::move(devices)),
      policy_(policy),
      n_(g.n()),
      rows_(g.journal_rows()),
      next_seq_(first_seq) {}

WriteJournal::Row& WriteJournal::open_row() {
  for (;;) {
    if (!active_.empty() && !active_.back().closed) {
      Row& row = active_.back();
      while (row.next_col < n_ &&
             !devices_[g_.journal_data(row.index, row.next_col).device]->online()) {
        ++row.next_col;
      }
      if (row.next_col < n_) return row;
      close_row(row);
      continue;
    }
    if (active_.size() >= rows_) raise(Errc::journal_full, "no free journal row");
    Row row;
    row.index = next_row_++ % rows_;
    active_.push_back(std::move(row));
  }
}

void WriteJournal::close_row(Row& row) {
  const Location p = g_.journal_parity(row.index);
  auto& dev = *devices_[p.device];
  if (dev.online()) {
    WriteOptions opt;
    opt.io_class = IoClass::journal;
    opt.hint = parity_hint(row.lens, policy_);
    opt.meta = &row.parity_meta;
    dev.write(p.lba, row.parity, opt);
    ++stats_.parity_writes;
  }
  row.closed = true;
}

std::uint64_t WriteJournal::append(std::uint64_t user_lba, ConstBlockSpan payload,
                                   std::uint32_t hint_len) {
  std::lock_guard lk(mu_);
  Row& row = open_row();
  const int col = row.next_col;
  const Location loc = g_.journal_data(row.index, col);
  const std::uint64_t seq = next_seq_;

  JournalHeader h;
  h.column = static_cast<std::uint8_t>(col);
  h.hint_len = static_cast<std::uint16_t>(hint_len);
  h.seq = seq;
  h.user_lba = user_lba;
  h.row = static_cast<std::uint32_t>(row.index);
  const BlockMeta meta = encode_journal_header(h, payload);

  WriteOptions opt;
  opt.io_class = IoClass::journal;
  if (hint_len != 0) opt.hint = SizeHint::of_len(hint_len);
  opt.meta = &meta;
  const std::uint32_t stored = devices_[loc.device]->write(loc.lba, payload, opt);
  ++stats_.data_writes;
  ++stats_.appends;
  ++next_seq_;

  simd::xor_into(row.parity, payload);
  xor_meta(row.parity_meta, meta);
  row.lens.push_back(stored);
  ++row.live;
  ++row.next_col;

  JournalRecord rec;
  rec.seq = seq;
  rec.user_lba = user_lba;
  rec.hint_len = hint_len;
  rec.row = row.index;
  rec.loc = loc;
  auto copy = std::make_shared<Block>();
  std::memcpy(copy->data(), payload.data(), kBlockSize);
  rec.payload = std::move(copy);
  index_[user_lba] = rec;
  unclaimed_.push_back(rec);

  if (row.next_col == n_) close_row(row);
  return seq;
}

void WriteJournal::seal() {
  std::lock_guard lk(mu_);
  if (active_.empty() || active_.back().closed) return;
  Row& row = active_.back();
  if (row.live == 0 && row.lens.empty()) {
    active_.pop_back();
    --next_row_;
    return;
  }
  close_row(row);
  free_rows();
}

std::optional<JournalRecord> WriteJournal::lookup(std::uint64_t user_lba) const {
  std::lock_guard lk(mu_);
  auto it = index_.find(user_lba);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<JournalRecord> WriteJournal::claim(std::size_t max) {
  std::lock_guard lk(mu_);
  std::vector<JournalRecord> out;
  while (out.size() < max && !unclaimed_.empty()) {
    out.push_back(std::move(unclaimed_.front()));
    unclaimed_.pop_front();
    ++outstanding_;
  }
  return out;
}

bool WriteJournal::is_current(const JournalRecord& r) const {
  std::lock_guard lk(mu_);
  auto it = index_.find(r.user_lba);
  return it != index_.end() && it->second.seq == r.seq;
}

WriteJournal::Row* WriteJournal::find_row(std::uint64_t index) {
  if (active_.empty()) return nullptr;
  const std::uint64_t off = (index + rows_ - active_.front().index) % rows_;
  if (off >= active_.size()) return nullptr;
  return &active_[off];
}

void WriteJournal::retire(const JournalRecord& r, bool applied) {
  std::lock_guard lk(mu_);
  if (applied) {
    auto it = index_.find(r.user_lba);
    if (it != index_.end() && it->second.seq == r.seq) index_.erase(it);
  } else {
    ++stats_.superseded;
  }
  if (Row* row = find_row(r.row)) --row->live;
  --outstanding_;
  free_rows();
}

void WriteJournal::unclaim(const JournalRecord& r) {
  std::lock_guard lk(mu_);
  unclaimed_.push_front(r);
  --outstanding_;
}

void WriteJournal::free_rows() {
  while (!active_.empty() && active_.front().closed && active_.front().live == 0) {
    // Oldest column first and parity last: a crash part way through leaves a
    // suffix of the row, so a superseded record never outlives its successor.
    const std::uint64_t row = active_.front().index;
    for (int c = 0; c < n_; ++c) {
      const Location l = g_.journal_data(row, c);
      if (devices_[l.device]->online()) devices_[l.device]->trim(l.lba, 1, IoClass::journal);
    }
    const Location p = g_.journal_parity(row);
    if (devices_[p.device]->online()) devices_[p.device]->trim(p.lba, 1, IoClass::journal);
    active_.pop_front();
    ++stats_.rows_freed;
  }
}

std::size_t WriteJournal::pending() const {
  std::lock_guard lk(mu_);
  return unclaimed_.size() + outstanding_;
}

std::size_t WriteJournal::rows_in_use() const {
  std::lock_guard lk(mu_);
  return active_.size();
}

std::uint64_t WriteJournal::next_seq() const {
  std::lock_guard lk(mu_);
  return next_seq_;
}

JournalStats WriteJournal::stats() const {
  std::lock_guard lk(mu_);
  return stats_;
}

void WriteJournal::reset_region(std::uint64_t next_seq) {
  std::lock_guard lk(mu_);
  if (rows_ > 0) {
    for (const auto& dev : devices_) {
      if (dev->online()) dev->trim(g_.journal_base(), rows_, IoClass::maintenance);
    }
  }
  active_.clear();
  index_.clear();
  unclaimed_.clear();
  outstanding_ = 0;
  next_row_ = 0;
  next_seq_ = next_seq;
}

std::vector<JournalRecord> WriteJournal::replay(const ArrayGeometry& g,
                                                const std::vector<DevicePtr>& devices) {
  std::map<std::uint64_t, JournalRecord> found;
  const int n = g.n();
  Block buf;
  for (std::uint64_t row = 0; row < g.journal_rows(); ++row) {
    // Offline column to rebuild from the other n blocks of the row, if any.
    int missing_col = -1;
    for (int c = 0; c < n; ++c) {
      const Location loc = g.journal_data(row, c);
      auto& dev = *devices[loc.device];
      if (!dev.online()) {
        missing_col = c;
        continue;
      }
      const auto meta = dev.read_meta(loc.lba);
      if (!meta) continue;
      dev.read_into(loc.lba, buf, IoClass::maintenance);
      const auto h = decode_journal_header(*meta, buf);
      if (!h || h->row != static_cast<std::uint32_t>(row) || h->column != c) continue;
      JournalRecord rec{h->seq, h->user_lba, h->hint_len, row, loc,
                        std::make_shared<Block>(buf)};
      found[h->seq] = std::move(rec);
    }
    if (missing_col < 0) continue;
    const Location ploc = g.journal_parity(row);
    if (!devices[ploc.device]->online()) continue;
    auto pmeta = devices[ploc.device]->read_meta(ploc.lba);
    if (!pmeta) continue;
    Block acc = devices[ploc.device]->read(ploc.lba, IoClass::maintenance);
    BlockMeta macc = *pmeta;
    for (int c = 0; c < n; ++c) {
      if (c == missing_col) continue;
      const Location loc = g.journal_data(row, c);
      auto& dev = *devices[loc.device];
      dev.read_into(loc.lba, buf, IoClass::maintenance);
      simd::xor_into(acc, buf);
      if (auto m = dev.read_meta(loc.lba)) xor_meta(macc, *m);
    }
    const auto h = decode_journal_header(macc, acc);
    if (!h || h->row != static_cast<std::uint32_t>(row) || h->column != missing_col) continue;
    const Location loc = g.journal_data(row, missing_col);
    found[h->seq] = JournalRecord{h->seq, h->user_lba, h->hint_len, row, loc,
                                  std::make_shared<Block>(acc)};
  }
  std::vector<JournalRecord> out;
  out.reserve(found.size());
  for (auto& [seq, rec] : found) out.push_back(std::move(rec));
  return out;
}

}  // namespace eraid
