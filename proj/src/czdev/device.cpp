#include "eraid/czdev/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "eraid/czdev/compressor.hpp"
#include "eraid/error.hpp"
#include "eraid/simd/xor_kernels.hpp"

namespace eraid {

namespace {
enum Kind { kRead = 0, kWrite = 1, kTrim = 2 };
}

DeviceConfig DeviceConfig::with_expansion(std::uint64_t flash_bytes, double expansion,
                                          CompressMode mode) {
  DeviceConfig c;
  c.flash_capacity_bytes = flash_bytes;
  c.logical_blocks = static_cast<std::uint64_t>(
      std::floor(static_cast<double>(flash_bytes) * expansion / kBlockSize));
  c.mode = mode;
  return c;
}

std::uint32_t modeled_len(const SizeHint& hint) {
  if (hint.exact_len != 0) return std::min<std::uint32_t>(hint.exact_len, kBlockSize);
  if (hint.ratio >= 1.0) {
    const double len = std::ceil(static_cast<double>(kBlockSize) / hint.ratio - 1e-9);
    return static_cast<std::uint32_t>(std::clamp(len, 1.0, static_cast<double>(kBlockSize)));
  }
  return kBlockSize;
}

void FaultInjector::crash_at(std::uint64_t index, bool tear) {
  std::lock_guard lk(mu_);
  crash_index_ = index;
  tear_ = tear;
}

void FaultInjector::offline_at(std::uint64_t index, CompressingDevice* dev) {
  std::lock_guard lk(mu_);
  offline_index_ = index;
  offline_dev_ = dev;
}

void FaultInjector::disarm() {
  std::lock_guard lk(mu_);
  crash_index_.reset();
  offline_index_.reset();
  offline_dev_ = nullptr;
  tear_ = false;
  crashed_ = false;
}

void FaultInjector::attach(const std::vector<std::shared_ptr<CompressingDevice>>& devices) {
  for (const auto& d : devices) d->set_fault_injector(this);
}

void FaultInjector::detach(const std::vector<std::shared_ptr<CompressingDevice>>& devices) {
  for (const auto& d : devices) d->set_fault_injector(nullptr);
}

FaultInjector::Action FaultInjector::before_mutation() {
  std::lock_guard lk(mu_);
  // Power stays off after a crash until the harness disarms the injector.
  if (crashed_) throw SimulatedCrash();
  const std::uint64_t idx = count_.fetch_add(1);
  if (offline_index_ && *offline_index_ == idx && offline_dev_ != nullptr) {
    offline_dev_->set_online(false);
  }
  if (crash_index_ && *crash_index_ == idx) {
    crash_index_.reset();
    crashed_ = true;
    if (tear_) return Action::tear;
    throw SimulatedCrash();
  }
  return Action::proceed;
}

CompressingDevice::CompressingDevice(int id, const DeviceConfig& cfg)
    : id_(id), cfg_(cfg), slots_(cfg.logical_blocks) {
  if (cfg.flash_capacity_bytes == 0 || cfg.logical_blocks == 0) {
    raise(Errc::config_invalid, "device needs nonzero flash and logical capacity");
  }
}

CompressingDevice::~CompressingDevice() = default;

void CompressingDevice::check_lba(std::uint64_t lba) const {
  if (lba >= cfg_.logical_blocks) {
    raise(Errc::out_of_range, "device " + std::to_string(id_) + " lba " +
                                  std::to_string(lba) + " beyond " +
                                  std::to_string(cfg_.logical_blocks));
  }
}

void CompressingDevice::check_online() const {
  if (!online_.load()) raise(Errc::device_offline, "device " + std::to_string(id_));
}

void CompressingDevice::count(IoClass cls, int kind, std::uint64_t n) {
  counters_[static_cast<std::size_t>(cls)][kind].fetch_add(n, std::memory_order_relaxed);
}

std::uint32_t CompressingDevice::write(std::uint64_t lba, ConstBlockSpan data,
                                       const WriteOptions& opt) {
  check_lba(lba);
  check_online();
  Hold h(*this);
  std::lock_guard lk(shard(lba));
  Slot& s = slots_[lba];

  FaultInjector::Action act = FaultInjector::Action::proceed;
  if (fault_ != nullptr) {
    act = fault_->before_mutation();
    check_online();
  }

  // A torn write lands the first half of the new payload over the old one.
  Block torn;
  const std::uint8_t* src = data.data();
  if (act == FaultInjector::Action::tear) {
    if (s.data) {
      torn = *s.data;
    } else {
      torn.fill(0);
    }
    std::memcpy(torn.data(), data.data(), kBlockSize / 2);
    src = torn.data();
  }

  std::uint32_t len;
  if (cfg_.mode == CompressMode::real) {
    len = deflate_len(std::span<const std::uint8_t>(src, kBlockSize));
  } else {
    len = opt.hint ? modeled_len(*opt.hint) : static_cast<std::uint32_t>(kBlockSize);
  }

  const std::uint64_t old = s.stored_len;
  std::uint64_t cur = physical_used_.load();
  for (;;) {
    const std::uint64_t next = cur - old + len;
    if (next > cfg_.flash_capacity_bytes) {
      raise(Errc::out_of_space, "device " + std::to_string(id_) + " would hold " +
                                    std::to_string(next) + " of " +
                                    std::to_string(cfg_.flash_capacity_bytes) + " bytes");
    }
    if (physical_used_.compare_exchange_weak(cur, next)) break;
  }

  // All-zero payloads keep no buffer; a mapped slot without one reads as zeros.
  if (simd::all_zero(std::span<const std::uint8_t>(src, kBlockSize))) {
    s.data.reset();
  } else {
    if (!s.data) s.data = std::make_unique<Block>();
    std::memcpy(s.data->data(), src, kBlockSize);
  }
  if (opt.meta != nullptr) {
    if (!s.meta) s.meta = std::make_unique<BlockMeta>();
    *s.meta = *opt.meta;
  } else {
    s.meta.reset();
  }
  if (old == 0) mapped_.fetch_add(1);
  s.stored_len = len;
  count(opt.io_class, kWrite);

  if (act == FaultInjector::Action::tear) throw SimulatedCrash();
  return len;
}

void CompressingDevice::read_into(std::uint64_t lba, BlockSpan out, IoClass cls) {
  check_lba(lba);
  check_online();
  Hold h(*this);
  std::lock_guard lk(shard(lba));
  const Slot& s = slots_[lba];
  if (s.stored_len == 0 || !s.data) {
    std::memset(out.data(), 0, kBlockSize);
  } else {
    std::memcpy(out.data(), s.data->data(), kBlockSize);
  }
  count(cls, kRead);
}

Block CompressingDevice::read(std::uint64_t lba, IoClass cls) {
  Block b;
  read_into(lba, b, cls);
  return b;
}

std::optional<BlockMeta> CompressingDevice::read_meta(std::uint64_t lba) const {
  check_lba(lba);
  std::lock_guard lk(shard(lba));
  const Slot& s = slots_[lba];
  if (s.stored_len == 0 || !s.meta) return std::nullopt;
  return *s.meta;
}

std::uint64_t CompressingDevice::trim(std::uint64_t first, std::uint64_t n, IoClass cls) {
  if (n == 0) return 0;
  check_lba(first);
  check_lba(first + n - 1);
  check_online();
  Hold h(*this);
  FaultInjector::Action act = FaultInjector::Action::proceed;
  if (fault_ != nullptr) {
    act = fault_->before_mutation();
    check_online();
  }
  const std::uint64_t upto = act == FaultInjector::Action::tear ? (n + 1) / 2 : n;
  std::uint64_t freed = 0;
  for (std::uint64_t lba = first; lba < first + upto; ++lba) {
    std::lock_guard lk(shard(lba));
    Slot& s = slots_[lba];
    if (s.stored_len == 0) continue;
    freed += s.stored_len;
    physical_used_.fetch_sub(s.stored_len);
    mapped_.fetch_sub(1);
    s.stored_len = 0;
    s.data.reset();
    s.meta.reset();
  }
  count(cls, kTrim);
  if (act == FaultInjector::Action::tear) throw SimulatedCrash();
  return freed;
}

double CompressingDevice::query_ratio(std::uint64_t first, std::uint64_t n) const {
  std::uint64_t blocks = 0;
  std::uint64_t bytes = 0;
  for (std::uint64_t lba = first; lba < first + n; ++lba) {
    const std::uint32_t len = stored_len(lba);
    if (len == 0) continue;
    ++blocks;
    bytes += len;
  }
  if (blocks == 0) raise(Errc::empty_range, "no mapped blocks in range");
  return static_cast<double>(blocks * kBlockSize) / static_cast<double>(bytes);
}

std::uint32_t CompressingDevice::stored_len(std::uint64_t lba) const {
  check_lba(lba);
  std::lock_guard lk(shard(lba));
  return slots_[lba].stored_len;
}

std::uint64_t CompressingDevice::recompute_physical_used() const {
  std::uint64_t sum = 0;
  for (std::uint64_t lba = 0; lba < slots_.size(); ++lba) {
    std::lock_guard lk(shard(lba));
    sum += slots_[lba].stored_len;
  }
  return sum;
}

DeviceStats CompressingDevice::stats() const {
  DeviceStats st;
  st.physical_used_bytes = physical_used_.load();
  st.logical_mapped_blocks = mapped_.load();
  for (std::size_t c = 0; c < kIoClassCount; ++c) {
    st.per_class[c].reads = counters_[c][kRead].load();
    st.per_class[c].writes = counters_[c][kWrite].load();
    st.per_class[c].trims = counters_[c][kTrim].load();
    st.read_ops += st.per_class[c].reads;
    st.write_ops += st.per_class[c].writes;
    st.trim_ops += st.per_class[c].trims;
  }
  return st;
}

void CompressingDevice::reset_counters() {
  for (auto& c : counters_) {
    for (auto& k : c) k.store(0);
  }
}

// Image: "ERDVIMG1", u32 version, i32 id, u64 flash, u64 logical_blocks, u8 mode,
// u8 online, 15 x u64 counters, u64 record count, then per mapped block
// u64 lba, u32 stored_len, u8 has_meta, 4096 payload bytes, 32 meta bytes if present.
namespace {
constexpr char kMagic[8] = {'E', 'R', 'D', 'V', 'I', 'M', 'G', '1'};
constexpr std::uint32_t kImageVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  std::uint8_t buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i));
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  std::uint8_t buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) raise(Errc::corrupt_image, "truncated device image");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}
}  // namespace

void CompressingDevice::save_image(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) raise(Errc::invalid_argument, "cannot write " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kImageVersion);
  put<std::int32_t>(os, id_);
  put<std::uint64_t>(os, cfg_.flash_capacity_bytes);
  put<std::uint64_t>(os, cfg_.logical_blocks);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(cfg_.mode));
  put<std::uint8_t>(os, online_.load() ? 1 : 0);
  for (const auto& c : counters_) {
    for (const auto& k : c) put<std::uint64_t>(os, k.load());
  }
  put<std::uint64_t>(os, mapped_.load());
  for (std::uint64_t lba = 0; lba < slots_.size(); ++lba) {
    const Slot& s = slots_[lba];
    if (s.stored_len == 0) continue;
    put<std::uint64_t>(os, lba);
    put<std::uint32_t>(os, s.stored_len);
    put<std::uint8_t>(os, s.meta ? 1 : 0);
    static const Block kZero{};
    os.write(reinterpret_cast<const char*>(s.data ? s.data->data() : kZero.data()), kBlockSize);
    if (s.meta) os.write(reinterpret_cast<const char*>(s.meta->data()), kMetaSize);
  }
  if (!os) raise(Errc::invalid_argument, "short write to " + path.string());
}

std::unique_ptr<CompressingDevice> CompressingDevice::load_image(
    const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::corrupt_image, "cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    raise(Errc::corrupt_image, path.string() + " is not a device image");
  }
  if (get<std::uint32_t>(is) != kImageVersion) {
    raise(Errc::corrupt_image, "unsupported image version in " + path.string());
  }
  const int id = get<std::int32_t>(is);
  DeviceConfig cfg;
  cfg.flash_capacity_bytes = get<std::uint64_t>(is);
  cfg.logical_blocks = get<std::uint64_t>(is);
  cfg.mode = static_cast<CompressMode>(get<std::uint8_t>(is));
  auto dev = std::make_unique<CompressingDevice>(id, cfg);
  dev->online_.store(get<std::uint8_t>(is) != 0);
  for (auto& c : dev->counters_) {
    for (auto& k : c) k.store(get<std::uint64_t>(is));
  }
  const std::uint64_t records = get<std::uint64_t>(is);
  std::uint64_t used = 0;
  for (std::uint64_t r = 0; r < records; ++r) {
    const std::uint64_t lba = get<std::uint64_t>(is);
    const std::uint32_t len = get<std::uint32_t>(is);
    const bool has_meta = get<std::uint8_t>(is) != 0;
    if (lba >= cfg.logical_blocks || len == 0 || len > kBlockSize) {
      raise(Errc::corrupt_image, "bad record in " + path.string());
    }
    Slot& s = dev->slots_[lba];
    s.data = std::make_unique<Block>();
    is.read(reinterpret_cast<char*>(s.data->data()), kBlockSize);
    if (has_meta) {
      s.meta = std::make_unique<BlockMeta>();
      is.read(reinterpret_cast<char*>(s.meta->data()), kMetaSize);
    }
    if (!is) raise(Errc::corrupt_image, "truncated record in " + path.string());
    s.stored_len = len;
    used += len;
  }
  dev->physical_used_.store(used);
  dev->mapped_.store(records);
  return dev;
}

std::vector<DevicePtr> make_devices(int count, const DeviceConfig& cfg) {
  std::vector<DevicePtr> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(std::make_shared<CompressingDevice>(i, cfg));
  return out;
}

}  // namespace eraid
