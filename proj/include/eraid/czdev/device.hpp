#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "eraid/common.hpp"

namespace eraid {

enum class CompressMode : std::uint8_t { real = 0, modeled = 1 };

struct DeviceConfig {
  std::uint64_t flash_capacity_bytes = 0;
  std::uint64_t logical_blocks = 0;
  CompressMode mode = CompressMode::modeled;

  std::uint64_t logical_capacity_bytes() const { return logical_blocks * kBlockSize; }
  double expansion_factor() const {
    return static_cast<double>(logical_capacity_bytes()) /
           static_cast<double>(flash_capacity_bytes);
  }
  // Logical size rounded down to whole blocks.
  static DeviceConfig with_expansion(std::uint64_t flash_bytes, double expansion,
                                     CompressMode mode);
};

// Stored size control for modeled mode. Ignored by the real compressor.
struct SizeHint {
  double ratio = 0.0;            // stored_len = ceil(4096 / ratio)
  std::uint32_t exact_len = 0;   // takes precedence when nonzero
  static SizeHint of_ratio(double r) { return SizeHint{r, 0}; }
  static SizeHint of_len(std::uint32_t len) { return SizeHint{0.0, len}; }
};

std::uint32_t modeled_len(const SizeHint& hint);

// Out-of-band bytes stored next to a block and written atomically with it.
inline constexpr std::size_t kMetaSize = 32;
using BlockMeta = std::array<std::uint8_t, kMetaSize>;

struct WriteOptions {
  IoClass io_class = IoClass::user_write;
  std::optional<SizeHint> hint;
  const BlockMeta* meta = nullptr;
};

struct ClassCounters {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t trims = 0;
};

struct DeviceStats {
  std::uint64_t physical_used_bytes = 0;
  std::uint64_t logical_mapped_blocks = 0;
  std::uint64_t read_ops = 0;
  std::uint64_t write_ops = 0;
  std::uint64_t trim_ops = 0;
  std::array<ClassCounters, kIoClassCount> per_class{};
};

class CompressingDevice;

// Counts mutating device operations across every device it is attached to and
// injects a crash or a device failure at a chosen operation index.
class FaultInjector {
 public:
  enum class Action { proceed, tear };

  void crash_at(std::uint64_t index, bool tear = false);
  void offline_at(std::uint64_t index, CompressingDevice* dev);
  void disarm();
  void reset_count() { count_.store(0); }
  std::uint64_t count() const { return count_.load(); }
  bool crashed() const { return crashed_; }
  void attach(const std::vector<std::shared_ptr<CompressingDevice>>& devices);
  void detach(const std::vector<std::shared_ptr<CompressingDevice>>& devices);

  // Called by a device before it applies a write or trim.
  Action before_mutation();

 private:
  std::mutex mu_;
  std::atomic<std::uint64_t> count_{0};
  std::optional<std::uint64_t> crash_index_;
  bool tear_ = false;
  bool crashed_ = false;
  std::optional<std::uint64_t> offline_index_;
  CompressingDevice* offline_dev_ = nullptr;
};

class CompressingDevice {
 public:
  CompressingDevice(int id, const DeviceConfig& cfg);
  ~CompressingDevice();
  CompressingDevice(const CompressingDevice&) = delete;
  CompressingDevice& operator=(const CompressingDevice&) = delete;

  int id() const { return id_; }
  const DeviceConfig& config() const { return cfg_; }
  std::uint64_t logical_blocks() const { return cfg_.logical_blocks; }

  std::uint32_t write(std::uint64_t lba, ConstBlockSpan data, const WriteOptions& opt = {});
  Block read(std::uint64_t lba, IoClass cls = IoClass::user_read);
  void read_into(std::uint64_t lba, BlockSpan out, IoClass cls = IoClass::user_read);
  // Metadata of a mapped block; nullopt when trimmed or written without one.
  std::optional<BlockMeta> read_meta(std::uint64_t lba) const;
  std::uint64_t trim(std::uint64_t first, std::uint64_t count,
                     IoClass cls = IoClass::maintenance);
  double query_ratio(std::uint64_t first, std::uint64_t count) const;

  // Zero for trimmed blocks. Does not count as I/O.
  std::uint32_t stored_len(std::uint64_t lba) const;
  bool mapped(std::uint64_t lba) const { return stored_len(lba) != 0; }

  void set_online(bool online) { online_.store(online); }
  bool online() const { return online_.load(); }

  std::uint64_t physical_used() const { return physical_used_.load(); }
  std::uint64_t recompute_physical_used() const;
  DeviceStats stats() const;
  void reset_counters();

  int in_flight() const { return in_flight_.load(); }
  // Keeps the in-flight count raised for as long as the guard lives.
  class Hold {
   public:
    explicit Hold(CompressingDevice& d) : d_(&d) { d_->in_flight_.fetch_add(1); }
    ~Hold() { d_->in_flight_.fetch_sub(1); }
    Hold(const Hold&) = delete;
    Hold& operator=(const Hold&) = delete;

   private:
    CompressingDevice* d_;
  };
  Hold hold() { return Hold(*this); }

  void set_fault_injector(FaultInjector* fi) { fault_ = fi; }

  void save_image(const std::filesystem::path& path) const;
  static std::unique_ptr<CompressingDevice> load_image(const std::filesystem::path& path);

 private:
  struct Slot {
    std::uint32_t stored_len = 0;
    std::unique_ptr<Block> data;
    std::unique_ptr<BlockMeta> meta;
  };
  static constexpr std::size_t kShards = 64;

  void check_lba(std::uint64_t lba) const;
  void check_online() const;
  std::mutex& shard(std::uint64_t lba) const { return shards_[lba % kShards]; }
  void count(IoClass cls, int kind, std::uint64_t n = 1);

  int id_;
  DeviceConfig cfg_;
  std::vector<Slot> slots_;
  mutable std::array<std::mutex, kShards> shards_;
  std::atomic<std::uint64_t> physical_used_{0};
  std::atomic<std::uint64_t> mapped_{0};
  std::atomic<bool> online_{true};
  std::atomic<int> in_flight_{0};
  std::array<std::array<std::atomic<std::uint64_t>, 3>, kIoClassCount> counters_{};
  FaultInjector* fault_ = nullptr;
};

using DevicePtr = std::shared_ptr<CompressingDevice>;

std::vector<DevicePtr> make_devices(int count, const DeviceConfig& cfg);

}  // namespace eraid
