#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "eraid/common.hpp"
#include "eraid/czdev/device.hpp"

namespace eraid {

struct GeometryConfig {
  int devices = 4;                       // n + 1
  std::uint64_t flash_capacity_bytes = 0;
  double alpha_exp = 1.0;
  std::uint32_t strip_blocks = 1;        // strip size in 4 KiB blocks
  std::uint64_t journal_rows = 0;        // journal stripes of n data + 1 parity block
};

struct Location {
  int device = -1;
  std::uint64_t lba = 0;
  friend bool operator==(const Location&, const Location&) = default;
};

struct MappedLba {
  std::uint64_t seg = 0;
  std::uint32_t strip = 0;     // data strip index within the stripe, 0..n-1
  std::uint32_t offset = 0;    // block within the strip
  Level level = Level::r5;
  Location copy_a;
  std::optional<Location> copy_b;   // R10 only
  std::optional<Location> parity;   // R5 only
};

// Where every strip of one segment lives at a given level. Locations are the
// first block of each strip; block `o` of a strip sits at lba + o.
struct PlacementPlan {
  std::uint64_t seg = 0;
  Level level = Level::r5;
  int parity_device = 0;
  std::vector<Location> copy_a;      // n entries, slot 1
  std::vector<Location> copy_b;      // n entries, slot 2 (R10 only)
  std::optional<Location> parity;    // slot 1 (R5 only)
  std::vector<Location> trimmed;     // strip positions holding nothing
};

// Bloated stripe geometry. Per device the logical space is laid out as
// [segments: 2 strips each][bitmap slot 0][bitmap slot 1][journal rows].
class ArrayGeometry {
 public:
  explicit ArrayGeometry(const GeometryConfig& cfg);

  int devices() const { return devices_; }
  int n() const { return devices_ - 1; }
  std::uint32_t strip_blocks() const { return strip_blocks_; }
  std::uint64_t strip_bytes() const { return std::uint64_t{strip_blocks_} * kBlockSize; }
  std::uint64_t segment_count() const { return segments_; }
  std::uint64_t user_blocks() const { return segments_ * n() * strip_blocks_; }
  std::uint64_t user_capacity_bytes() const { return user_blocks() * kBlockSize; }
  std::uint64_t flash_capacity_bytes() const { return flash_; }
  double alpha_exp() const { return alpha_exp_; }

  std::uint64_t segment_region_blocks() const { return segments_ * 2 * strip_blocks_; }
  std::uint64_t bitmap_blocks() const { return bitmap_blocks_; }
  std::uint64_t bitmap_lba(int slot) const {
    return segment_region_blocks() + static_cast<std::uint64_t>(slot) * bitmap_blocks_;
  }
  std::uint64_t journal_base() const { return segment_region_blocks() + 2 * bitmap_blocks_; }
  std::uint64_t journal_rows() const { return journal_rows_; }
  std::uint64_t device_logical_blocks() const { return journal_base() + journal_rows_; }

  // Device config that fits this geometry exactly.
  DeviceConfig device_config(CompressMode mode) const;

  int parity_device(std::uint64_t seg) const;
  int data_device(std::uint64_t seg, std::uint32_t strip) const;
  int mirror_device(std::uint64_t seg, std::uint32_t strip) const;
  std::uint64_t slot_lba(std::uint64_t seg, int slot) const {
    return seg * 2 * strip_blocks_ + static_cast<std::uint64_t>(slot) * strip_blocks_;
  }

  MappedLba map_user_lba(std::uint64_t user_lba, Level level) const;
  PlacementPlan segment_locations(std::uint64_t seg, Level level) const;

  std::uint64_t first_user_lba(std::uint64_t seg) const { return seg * n() * strip_blocks_; }

  // Journal row r: data column c (0..n-1) and the parity block.
  int journal_parity_device(std::uint64_t row) const {
    return static_cast<int>(row % static_cast<std::uint64_t>(devices_));
  }
  Location journal_data(std::uint64_t row, int col) const;
  Location journal_parity(std::uint64_t row) const;

 private:
  int devices_;
  std::uint32_t strip_blocks_;
  std::uint64_t flash_;
  double alpha_exp_;
  std::uint64_t segments_;
  std::uint64_t bitmap_blocks_;
  std::uint64_t journal_rows_;
};

// Verifies skew and distinctness for every segment at both levels. Throws
// ConfigInvalid on the first violation.
void check_placement_invariants(const ArrayGeometry& g);

}  // namespace eraid
