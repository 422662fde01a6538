#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "eraid/common.hpp"
#include "eraid/czdev/device.hpp"

namespace eraid {

class ArrayGeometry;

// One level bit per segment (0 = R5, 1 = R10).
class LevelBitmap {
 public:
  explicit LevelBitmap(std::uint64_t segments);

  std::uint64_t size() const { return segments_; }
  Level get(std::uint64_t seg) const;
  void set(std::uint64_t seg, Level level);
  std::uint64_t count_r10() const { return r10_.load(); }

  std::vector<std::uint8_t> to_bytes() const;
  void assign_bytes(const std::vector<std::uint8_t>& bytes);

 private:
  std::uint64_t segments_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> words_;
  std::size_t word_count_;
  std::atomic<std::uint64_t> r10_{0};
};

// On-device record, replicated to every device in two alternating slots:
//   u32 magic 'EBM1', u32 version, u64 seq, u64 nbits, u32 crc32(bits), u32 pad,
//   then ceil(nbits/8) bytes of bits, zero padded to whole blocks.
inline constexpr std::uint32_t kBitmapMagic = 0x314d4245;  // "EBM1"
inline constexpr std::uint32_t kBitmapVersion = 1;
inline constexpr std::size_t kBitmapHeader = 32;

std::uint64_t bitmap_record_blocks(std::uint64_t segments);

struct BitmapImage {
  std::uint64_t seq = 0;
  std::vector<std::uint8_t> bits;
};

// Writes the record with sequence `seq` to slot seq % 2 of every online device.
void persist_bitmap(const std::vector<DevicePtr>& devices, const ArrayGeometry& g,
                    const LevelBitmap& bm, std::uint64_t seq);

// Highest-sequence valid record across both slots of all online devices.
std::optional<BitmapImage> load_bitmap(const std::vector<DevicePtr>& devices,
                                       const ArrayGeometry& g);

}  // namespace eraid
