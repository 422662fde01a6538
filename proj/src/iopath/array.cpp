#include "eraid/iopath/array.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "eraid/czdev/compressor.hpp"
#include "eraid/error.hpp"
#include "eraid/simd/xor_kernels.hpp"

namespace eraid {

namespace {

constexpr std::size_t kSegLockStripes = 1024;

std::uint32_t hint_len_for(CompressMode mode, const std::optional<SizeHint>& hint) {
  if (mode != CompressMode::modeled || !hint) return 0;
  return modeled_len(*hint);
}

}  // namespace

GeometryConfig ArrayConfig::resolved_geometry() const {
  GeometryConfig gc = geometry;
  gc.journal_rows = 0;
  if (journal_fraction > 0.0) {
    const ArrayGeometry base(gc);
    const auto rows = static_cast<std::uint64_t>(
        std::floor(journal_fraction * static_cast<double>(base.device_logical_blocks())));
    gc.journal_rows = std::max<std::uint64_t>(rows, 2);
  }
  return gc;
}

double AmpCounters::wa() const {
  return user_writes == 0 ? 0.0
                          : static_cast<double>(device_writes) / static_cast<double>(user_writes);
}
double AmpCounters::ra() const {
  return user_reads == 0 ? 0.0
                         : static_cast<double>(device_reads) / static_cast<double>(user_reads);
}
double AmpCounters::write_ra() const {
  return user_writes == 0
             ? 0.0
             : static_cast<double>(write_path_reads) / static_cast<double>(user_writes);
}

double SegmentRatios::alpha_usr() const {
  if (data_bytes == 0) return 0.0;
  return static_cast<double>(data_blocks * kBlockSize) / static_cast<double>(data_bytes);
}

double SegmentRatios::alpha_pty() const {
  if (parity_bytes == 0) return 0.0;
  const std::uint64_t blocks = (parity_bytes + kBlockSize - 1) / kBlockSize;
  return static_cast<double>(std::max<std::uint64_t>(blocks, 1) * kBlockSize) /
         static_cast<double>(parity_bytes);
}

ElasticArray::ElasticArray(const ArrayConfig& cfg, std::vector<DevicePtr> devices)
    : cfg_(cfg),
      g_(cfg.resolved_geometry()),
      devices_(std::move(devices)),
      bitmap_(g_.segment_count()),
      pool_(std::make_unique<WorkerPool>(cfg.migration_workers)),
      seg_locks_(kSegLockStripes) {
  if (static_cast<int>(devices_.size()) != g_.devices()) {
    raise(Errc::config_invalid, "expected " + std::to_string(g_.devices()) + " devices, got " +
                                    std::to_string(devices_.size()));
  }
  for (const auto& d : devices_) {
    if (d->logical_blocks() < g_.device_logical_blocks()) {
      raise(Errc::config_invalid, "device " + std::to_string(d->id()) +
                                      " logical space too small for the geometry");
    }
    if (d->config().flash_capacity_bytes != g_.flash_capacity_bytes()) {
      raise(Errc::config_invalid, "device flash capacity differs from the array config");
    }
  }
  journal_ = std::make_unique<WriteJournal>(g_, devices_, cfg_.parity_policy);
  migrate_threshold_ = cfg_.migrate_threshold != 0
                           ? cfg_.migrate_threshold
                           : static_cast<std::size_t>(journal_->capacity_records() / 2);
  if (migrate_threshold_ == 0) migrate_threshold_ = 1;
}

ElasticArray::~ElasticArray() = default;

std::vector<DevicePtr> ElasticArray::make_devices_for(const ArrayConfig& cfg) {
  const ArrayGeometry g(cfg.resolved_geometry());
  return make_devices(g.devices(), g.device_config(cfg.mode));
}

std::unique_ptr<ElasticArray> ElasticArray::create(const ArrayConfig& cfg,
                                                   std::vector<DevicePtr> devices) {
  std::unique_ptr<ElasticArray> a(new ElasticArray(cfg, std::move(devices)));
  for (const auto& d : a->devices_) {
    if (d->online()) d->trim(0, a->g_.device_logical_blocks(), IoClass::maintenance);
  }
  a->bitmap_seq_ = 1;
  persist_bitmap(a->devices_, a->g_, a->bitmap_, a->bitmap_seq_);
  a->reset_amp();
  return a;
}

std::unique_ptr<ElasticArray> ElasticArray::open(const ArrayConfig& cfg,
                                                 std::vector<DevicePtr> devices) {
  std::unique_ptr<ElasticArray> a(new ElasticArray(cfg, std::move(devices)));
  a->recover();
  return a;
}

void ElasticArray::recover() {
  int offline = 0;
  for (const auto& d : devices_) offline += d->online() ? 0 : 1;
  if (offline > 1) raise(Errc::data_loss, "more than one device offline");

  const auto img = load_bitmap(devices_, g_);
  if (!img) raise(Errc::corrupt_image, "no valid level bitmap replica on any online device");
  bitmap_.assign_bytes(img->bits);
  // Skipping a sequence number keeps a stale replica on a device that was
  // offline during recovery from ever tying with the state written now.
  bitmap_seq_ = img->seq + 2;
  persist_bitmap(devices_, g_, bitmap_, bitmap_seq_);

  const auto records = WriteJournal::replay(g_, devices_);
  std::uint64_t max_seq = 0;
  for (const auto& rec : records) {
    stripe_update(rec.user_lba, *rec.payload, rec.hint_len, true);
    max_seq = std::max(max_seq, rec.seq);
  }
  journal_->reset_region(max_seq + 1);

  for (std::uint64_t seg = 0; seg < g_.segment_count(); ++seg) cleanup_segment(seg);
  reset_amp();
}

std::optional<int> ElasticArray::offline_device() const {
  for (const auto& d : devices_) {
    if (!d->online()) return d->id();
  }
  return std::nullopt;
}

ArrayMode ElasticArray::mode() const { return ArrayMode{offline_device()}; }

double ElasticArray::coverage() const {
  if (g_.segment_count() == 0) return 0.0;
  return static_cast<double>(bitmap_.count_r10()) / static_cast<double>(g_.segment_count());
}

std::uint64_t ElasticArray::bitmap_seq() const {
  std::lock_guard lk(bitmap_mu_);
  return bitmap_seq_;
}

void ElasticArray::commit_level(std::uint64_t seg, Level level) {
  std::lock_guard lk(bitmap_mu_);
  const Level before = bitmap_.get(seg);
  bitmap_.set(seg, level);
  try {
    persist_bitmap(devices_, g_, bitmap_, bitmap_seq_ + 1);
  } catch (const Error&) {
    bitmap_.set(seg, before);
    throw;
  }
  ++bitmap_seq_;
}

std::uint32_t ElasticArray::write_block(const Location& loc, ConstBlockSpan data,
                                        std::uint32_t hint_len, IoClass cls) {
  WriteOptions opt;
  opt.io_class = cls;
  if (hint_len != 0) opt.hint = SizeHint::of_len(hint_len);
  return devices_[loc.device]->write(loc.lba, data, opt);
}

std::vector<std::uint32_t> ElasticArray::stripe_lens(std::uint64_t seg, std::uint32_t offset,
                                                     std::optional<std::uint32_t> replace_strip,
                                                     std::uint32_t replace_len) const {
  std::vector<std::uint32_t> lens;
  const std::uint64_t base = g_.slot_lba(seg, 0) + offset;
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(g_.n()); ++i) {
    if (replace_strip && *replace_strip == i) {
      lens.push_back(replace_len);
    } else {
      lens.push_back(devices_[g_.data_device(seg, i)]->stored_len(base));
    }
  }
  return lens;
}

void ElasticArray::update_r5(const MappedLba& m, ConstBlockSpan payload, std::uint32_t hint_len,
                             bool reconstruct_write) {
  const IoClass cls = IoClass::user_write;
  const auto off = offline_device();
  const Location d = m.copy_a;
  const Location p = *m.parity;
  const std::uint32_t new_len =
      cfg_.mode == CompressMode::modeled ? modeled_len(SizeHint::of_len(hint_len)) : 0;

  if (off && *off == p.device) {
    write_block(d, payload, hint_len, cls);
    return;
  }

  Block parity;
  // Recomputing parity needs every other data strip. With some other device
  // offline, redo falls back to read-modify-write.
  if ((reconstruct_write && !off) || (off && *off == d.device)) {
    // Parity from scratch: new data XOR every other data strip of the row.
    std::memcpy(parity.data(), payload.data(), kBlockSize);
    Block tmp;
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(g_.n()); ++i) {
      if (i == m.strip) continue;
      devices_[g_.data_device(m.seg, i)]->read_into(d.lba, tmp, cls);
      simd::xor_into(parity, tmp);
    }
    const bool write_data = !(off && *off == d.device);
    const std::uint32_t data_len = write_data ? projected_len(payload, hint_len) : new_len;
    const std::uint32_t parity_len =
        modeled_len(parity_hint_for(stripe_lens(m.seg, m.offset, m.strip, data_len)));
    if (write_data) {
      ensure_room({{d, data_len}, {p, projected_len(parity, parity_len)}});
      write_block(d, payload, hint_len, cls);
    } else {
      ensure_room({{p, projected_len(parity, parity_len)}});
    }
    write_block(p, parity, parity_len, cls);
    return;
  }

  // Read-modify-write: P' = P ^ D ^ D'.
  Block old_d;
  devices_[d.device]->read_into(d.lba, old_d, cls);
  devices_[p.device]->read_into(p.lba, parity, cls);
  simd::xor_into(parity, old_d);
  simd::xor_into(parity, payload);
  const std::uint32_t data_len = projected_len(payload, hint_len);
  const std::uint32_t parity_len =
      modeled_len(parity_hint_for(stripe_lens(m.seg, m.offset, m.strip, data_len)));
  ensure_room({{d, data_len}, {p, projected_len(parity, parity_len)}});
  write_block(d, payload, hint_len, cls);
  write_block(p, parity, parity_len, cls);
}

void ElasticArray::update_r10(const MappedLba& m, ConstBlockSpan payload,
                              std::uint32_t hint_len) {
  const bool a = online(m.copy_a.device);
  const bool b = online(m.copy_b->device);
  const std::uint32_t len = projected_len(payload, hint_len);
  std::vector<std::pair<Location, std::uint32_t>> need;
  if (a) need.emplace_back(m.copy_a, len);
  if (b) need.emplace_back(*m.copy_b, len);
  ensure_room(need);
  if (a) write_block(m.copy_a, payload, hint_len, IoClass::user_write);
  if (b) write_block(*m.copy_b, payload, hint_len, IoClass::user_write);
}

std::uint32_t ElasticArray::projected_len(ConstBlockSpan data, std::uint32_t hint_len) const {
  if (cfg_.mode == CompressMode::real) return deflate_len(data);
  return modeled_len(SizeHint::of_len(hint_len));
}

// Refuses a multi-block update up front when any device would run out of
// flash, so OutOfSpace never leaves a stripe half written.
void ElasticArray::ensure_room(
    const std::vector<std::pair<Location, std::uint32_t>>& writes) const {
  std::vector<std::int64_t> grow(devices_.size(), 0);
  for (const auto& [loc, len] : writes) {
    grow[loc.device] += static_cast<std::int64_t>(len) -
                        static_cast<std::int64_t>(devices_[loc.device]->stored_len(loc.lba));
  }
  for (std::size_t d = 0; d < devices_.size(); ++d) {
    if (grow[d] <= 0) continue;
    const auto& dev = *devices_[d];
    if (dev.physical_used() + static_cast<std::uint64_t>(grow[d]) >
        dev.config().flash_capacity_bytes) {
      raise(Errc::out_of_space, "device " + std::to_string(d) + " has no room for the stripe update");
    }
  }
}

void ElasticArray::stripe_update(std::uint64_t user_lba, ConstBlockSpan payload,
                                 std::uint32_t hint_len, bool reconstruct_write) {
  const std::uint64_t seg = user_lba / (static_cast<std::uint64_t>(g_.n()) * g_.strip_blocks());
  const MappedLba m = g_.map_user_lba(user_lba, bitmap_.get(seg));
  if (m.level == Level::r5) {
    update_r5(m, payload, hint_len, reconstruct_write);
  } else {
    update_r10(m, payload, hint_len);
  }
}

void ElasticArray::write(std::uint64_t user_lba, ConstBlockSpan payload,
                         std::optional<SizeHint> hint) {
  std::shared_lock al(array_mu_);
  const std::uint64_t seg = g_.map_user_lba(user_lba, Level::r5).seg;
  const Level lvl = bitmap_.get(seg);
  if (observer_) observer_(seg, lvl, true);
  if (lvl == Level::r5 && offline_device()) {
    raise(Errc::degraded_reject, "RAID-5 segment " + std::to_string(seg) +
                                     " is read-only while a device is offline");
  }
  user_writes_.fetch_add(1, std::memory_order_relaxed);
  const std::uint32_t hint_len = hint_len_for(cfg_.mode, hint);

  if (!journal_->enabled()) {
    std::unique_lock sl(segment_lock(seg));
    stripe_update(user_lba, payload, hint_len, false);
    return;
  }

  try {
    journal_->append(user_lba, payload, hint_len);
  } catch (const Error& e) {
    if (e.code() != Errc::journal_full) throw;
    // Back-pressure: the writer waits for migration to free rows.
    drain_locked();
    journal_->append(user_lba, payload, hint_len);
  }
  if (journal_->pending() >= migrate_threshold_) migrate_locked(cfg_.migration_batch);
}

Block ElasticArray::read(std::uint64_t user_lba) {
  Block b;
  read_into(user_lba, b);
  return b;
}

void ElasticArray::read_into(std::uint64_t user_lba, BlockSpan out) {
  std::shared_lock al(array_mu_);
  const std::uint64_t seg = g_.map_user_lba(user_lba, Level::r5).seg;
  std::shared_lock sl(segment_lock(seg));
  const MappedLba m = g_.map_user_lba(user_lba, bitmap_.get(seg));
  if (observer_) observer_(seg, m.level, false);
  user_reads_.fetch_add(1, std::memory_order_relaxed);

  if (journal_->enabled()) {
    if (auto rec = journal_->lookup(user_lba)) {
      if (online(rec->loc.device)) {
        devices_[rec->loc.device]->read_into(rec->loc.lba, out, IoClass::user_read);
      } else {
        std::memcpy(out.data(), rec->payload->data(), kBlockSize);
      }
      return;
    }
  }

  if (m.level == Level::r5) {
    if (online(m.copy_a.device)) {
      devices_[m.copy_a.device]->read_into(m.copy_a.lba, out, IoClass::user_read);
    } else {
      const Block b = reconstruct_strip(m.seg, m.copy_a.device, m.offset, IoClass::user_read);
      std::memcpy(out.data(), b.data(), kBlockSize);
    }
    return;
  }
  const int dev = mirror_read_select(m.seg, m.strip);
  const Location loc = dev == m.copy_a.device ? m.copy_a : *m.copy_b;
  devices_[loc.device]->read_into(loc.lba, out, IoClass::user_read);
}

Block ElasticArray::reconstruct_strip(std::uint64_t seg, int device, std::uint32_t offset,
                                      IoClass cls) {
  const std::uint64_t lba = g_.slot_lba(seg, 0) + offset;
  Block acc{};
  Block tmp;
  for (int d = 0; d < g_.devices(); ++d) {
    if (d == device) continue;
    if (!online(d)) {
      raise(Errc::data_loss, "second device offline while rebuilding segment " +
                                 std::to_string(seg));
    }
    devices_[d]->read_into(lba, tmp, cls);
    simd::xor_into(acc, tmp);
  }
  return acc;
}

int ElasticArray::mirror_read_select(std::uint64_t seg, std::uint32_t strip) const {
  const int a = g_.data_device(seg, strip);
  const int b = g_.mirror_device(seg, strip);
  if (!online(a)) return b;
  if (!online(b)) return a;
  const int fa = devices_[a]->in_flight();
  const int fb = devices_[b]->in_flight();
  if (fa != fb) return fa < fb ? a : b;
  return std::min(a, b);
}

void ElasticArray::cleanup_segment(std::uint64_t seg) {
  const PlacementPlan plan = g_.segment_locations(seg, bitmap_.get(seg));
  for (const auto& t : plan.trimmed) {
    auto& dev = *devices_[t.device];
    if (!dev.online()) continue;
    bool any = false;
    for (std::uint32_t o = 0; o < g_.strip_blocks() && !any; ++o) any = dev.mapped(t.lba + o);
    if (any) dev.trim(t.lba, g_.strip_blocks(), IoClass::maintenance);
  }
}

void ElasticArray::apply_record(const JournalRecord& rec) {
  const std::uint64_t seg = g_.map_user_lba(rec.user_lba, Level::r5).seg;
  std::unique_lock sl(segment_lock(seg));
  if (!journal_->is_current(rec)) {
    journal_->retire(rec, false);
    return;
  }
  try {
    stripe_update(rec.user_lba, *rec.payload, rec.hint_len, false);
  } catch (const Error&) {
    journal_->unclaim(rec);
    throw;
  }
  journal_->retire(rec, true);
}

std::size_t ElasticArray::migrate_locked(std::size_t max) {
  std::lock_guard ml(migrate_mu_);
  auto recs = journal_->claim(max);
  if (recs.empty()) return 0;
  std::vector<std::function<void()>> jobs;
  jobs.reserve(recs.size());
  for (auto& rec : recs) jobs.emplace_back([this, rec] { apply_record(rec); });
  pool_->run_all(std::move(jobs));
  return recs.size();
}

std::size_t ElasticArray::migrate_batch(std::size_t max) {
  std::shared_lock al(array_mu_);
  return migrate_locked(max);
}

void ElasticArray::drain_locked() {
  if (!journal_->enabled()) return;
  journal_->seal();
  while (journal_->pending() > 0) {
    if (migrate_locked(std::max<std::size_t>(cfg_.migration_batch, 1)) == 0) break;
  }
  journal_->seal();
}

void ElasticArray::drain_journal() {
  std::shared_lock al(array_mu_);
  drain_locked();
}

void ElasticArray::fail_device(int device) {
  std::unique_lock al(array_mu_);
  if (device < 0 || device >= g_.devices()) raise(Errc::out_of_range, "no such device");
  const auto off = offline_device();
  if (off && *off != device) {
    raise(Errc::data_loss, "device " + std::to_string(*off) +
                               " is already offline; a second failure loses data");
  }
  devices_[device]->set_online(false);
}

void ElasticArray::restore_device(int device) {
  std::unique_lock al(array_mu_);
  if (device < 0 || device >= g_.devices()) raise(Errc::out_of_range, "no such device");
  if (devices_[device]->online()) return;
  drain_locked();
  devices_[device]->set_online(true);
  if (g_.journal_rows() > 0) {
    devices_[device]->trim(g_.journal_base(), g_.journal_rows(), IoClass::maintenance);
  }
  rebuild_device(device);
  std::lock_guard lk(bitmap_mu_);
  // Both slots, so the returning device holds two valid replicas.
  persist_bitmap(devices_, g_, bitmap_, ++bitmap_seq_);
  persist_bitmap(devices_, g_, bitmap_, ++bitmap_seq_);
}

void ElasticArray::rebuild_device(int device) {
  auto& dev = *devices_[device];
  const std::uint32_t sb = g_.strip_blocks();
  const int n = g_.n();
  Block buf;
  for (std::uint64_t seg = 0; seg < g_.segment_count(); ++seg) {
    std::unique_lock sl(segment_lock(seg));
    const Level lvl = bitmap_.get(seg);
    const std::uint64_t s1 = g_.slot_lba(seg, 0);
    const std::uint64_t s2 = g_.slot_lba(seg, 1);
    const int pdev = g_.parity_device(seg);
    for (std::uint32_t o = 0; o < sb; ++o) {
      if (lvl == Level::r5) {
        // Slot 1: rebuild from the other n positions of the row.
        bool any = false;
        std::vector<std::uint32_t> lens;
        for (int d = 0; d < g_.devices(); ++d) {
          if (d == device) continue;
          const std::uint32_t len = devices_[d]->stored_len(s1 + o);
          any = any || len != 0;
          if (d != pdev) lens.push_back(len);
        }
        if (!any) {
          dev.trim(s1 + o, 1, IoClass::maintenance);
        } else {
          buf = reconstruct_strip(seg, device, o, IoClass::maintenance);
          if (simd::all_zero(buf)) {
            dev.trim(s1 + o, 1, IoClass::maintenance);
            dev.trim(s2 + o, 1, IoClass::maintenance);
            continue;
          }
          std::uint32_t hint;
          if (device == pdev) {
            hint = modeled_len(parity_hint_for(lens));
          } else {
            // The lost block's own size is gone; use the mean of its row.
            std::uint64_t sum = 0;
            std::uint64_t cnt = 0;
            for (auto l : lens) {
              if (l != 0) {
                sum += l;
                ++cnt;
              }
            }
            hint = cnt == 0 ? kBlockSize : static_cast<std::uint32_t>(sum / cnt);
          }
          write_block({device, s1 + o}, buf, hint, IoClass::maintenance);
        }
        dev.trim(s2 + o, 1, IoClass::maintenance);
        continue;
      }
      // R10: copy each strip this device should hold from its mirror.
      auto copy_from = [&](Location src, Location dst) {
        const std::uint32_t len = devices_[src.device]->stored_len(src.lba);
        if (len == 0) {
          dev.trim(dst.lba, 1, IoClass::maintenance);
          return;
        }
        devices_[src.device]->read_into(src.lba, buf, IoClass::maintenance);
        write_block(dst, buf, len, IoClass::maintenance);
      };
      if (device == pdev) {
        dev.trim(s1 + o, 1, IoClass::maintenance);
      }
      for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n); ++i) {
        const int a = g_.data_device(seg, i);
        const int b = g_.mirror_device(seg, i);
        if (a == device) copy_from({b, s2 + o}, {a, s1 + o});
        if (b == device) copy_from({a, s1 + o}, {b, s2 + o});
      }
      if (device == g_.data_device(seg, 0)) dev.trim(s2 + o, 1, IoClass::maintenance);
    }
  }
}

ScrubReport scrub_devices(const ArrayGeometry& g, const std::vector<DevicePtr>& devices,
                          const LevelBitmap& levels) {
  ScrubReport rep;
  Block acc;
  Block tmp;
  const std::uint32_t sb = g.strip_blocks();
  for (std::uint64_t seg = 0; seg < g.segment_count(); ++seg) {
    const Level lvl = levels.get(seg);
    const PlacementPlan plan = g.segment_locations(seg, lvl);
    bool bad = false;
    bool skipped = false;
    for (std::uint32_t o = 0; o < sb; ++o) {
      if (lvl == Level::r5) {
        bool all_online = true;
        for (const auto& d : devices) all_online = all_online && d->online();
        if (!all_online) {
          skipped = true;
          continue;
        }
        acc.fill(0);
        for (const auto& l : plan.copy_a) {
          devices[l.device]->read_into(l.lba + o, tmp, IoClass::maintenance);
          simd::xor_into(acc, tmp);
        }
        devices[plan.parity->device]->read_into(plan.parity->lba + o, tmp, IoClass::maintenance);
        simd::xor_into(acc, tmp);
        if (!simd::all_zero(acc)) {
          ++rep.parity_mismatches;
          bad = true;
        }
      } else {
        for (std::size_t i = 0; i < plan.copy_a.size(); ++i) {
          const Location a = plan.copy_a[i];
          const Location b = plan.copy_b[i];
          if (!devices[a.device]->online() || !devices[b.device]->online()) {
            skipped = true;
            continue;
          }
          devices[a.device]->read_into(a.lba + o, acc, IoClass::maintenance);
          devices[b.device]->read_into(b.lba + o, tmp, IoClass::maintenance);
          if (acc != tmp) {
            ++rep.mirror_mismatches;
            bad = true;
          }
        }
      }
      for (const auto& t : plan.trimmed) {
        if (devices[t.device]->online() && devices[t.device]->mapped(t.lba + o)) {
          ++rep.stale_positions;
        }
      }
    }
    if (bad) rep.bad_segments.push_back(seg);
    if (skipped) {
      ++rep.segments_skipped;
    } else {
      ++rep.segments_checked;
    }
  }
  return rep;
}

ScrubReport ElasticArray::scrub() const {
  std::unique_lock al(array_mu_);
  return scrub_devices(g_, devices_, bitmap_);
}

SegmentRatios ElasticArray::segment_ratios(std::uint64_t seg) const {
  SegmentRatios r;
  const Level lvl = bitmap_.get(seg);
  const std::uint64_t s1 = g_.slot_lba(seg, 0);
  for (std::uint32_t o = 0; o < g_.strip_blocks(); ++o) {
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(g_.n()); ++i) {
      const std::uint32_t len = devices_[g_.data_device(seg, i)]->stored_len(s1 + o);
      if (len == 0) continue;
      r.data_bytes += len;
      ++r.data_blocks;
    }
    if (lvl == Level::r5) r.parity_bytes += devices_[g_.parity_device(seg)]->stored_len(s1 + o);
  }
  return r;
}

AmpCounters ElasticArray::amp() const {
  std::array<ClassCounters, kIoClassCount> sum{};
  for (const auto& d : devices_) {
    const DeviceStats st = d->stats();
    for (std::size_t c = 0; c < kIoClassCount; ++c) {
      sum[c].reads += st.per_class[c].reads;
      sum[c].writes += st.per_class[c].writes;
      sum[c].trims += st.per_class[c].trims;
    }
  }
  auto cls = [&](IoClass c) {
    const auto i = static_cast<std::size_t>(c);
    ClassCounters out;
    out.reads = sum[i].reads - base_[i].reads;
    out.writes = sum[i].writes - base_[i].writes;
    out.trims = sum[i].trims - base_[i].trims;
    return out;
  };
  AmpCounters a;
  a.user_reads = user_reads_.load();
  a.user_writes = user_writes_.load();
  a.device_reads = cls(IoClass::user_read).reads;
  a.journal_writes = cls(IoClass::journal).writes;
  a.device_writes = cls(IoClass::user_write).writes + a.journal_writes;
  a.write_path_reads = cls(IoClass::user_write).reads;
  return a;
}

void ElasticArray::reset_amp() {
  std::array<ClassCounters, kIoClassCount> sum{};
  for (const auto& d : devices_) {
    const DeviceStats st = d->stats();
    for (std::size_t c = 0; c < kIoClassCount; ++c) {
      sum[c].reads += st.per_class[c].reads;
      sum[c].writes += st.per_class[c].writes;
      sum[c].trims += st.per_class[c].trims;
    }
  }
  base_ = sum;
  user_reads_.store(0);
  user_writes_.store(0);
}

std::uint64_t ElasticArray::physical_used() const {
  std::uint64_t s = 0;
  for (const auto& d : devices_) s += d->physical_used();
  return s;
}

std::vector<std::uint64_t> ElasticArray::device_usage() const {
  std::vector<std::uint64_t> out;
  for (const auto& d : devices_) out.push_back(d->physical_used());
  return out;
}

}  // namespace eraid
