#include "eraid/layout/geometry.hpp"

#include <cmath>
#include <set>
#include <string>

#include "eraid/error.hpp"
#include "eraid/layout/bitmap.hpp"

namespace eraid {

ArrayGeometry::ArrayGeometry(const GeometryConfig& cfg)
    : devices_(cfg.devices),
      strip_blocks_(cfg.strip_blocks),
      flash_(cfg.flash_capacity_bytes),
      alpha_exp_(cfg.alpha_exp),
      journal_rows_(cfg.journal_rows) {
  if (devices_ < 3) raise(Errc::config_invalid, "need at least 3 devices");
  if (strip_blocks_ == 0) raise(Errc::config_invalid, "strip size must be at least 4096");
  if (alpha_exp_ < 1.0) raise(Errc::config_invalid, "alpha_exp must be >= 1");
  if (flash_ < strip_bytes()) raise(Errc::config_invalid, "flash capacity below one strip");
  // C_RAID = alpha_exp * n * C_flash, rounded down to whole stripes.
  segments_ = static_cast<std::uint64_t>(
      std::floor(alpha_exp_ * static_cast<double>(flash_) / static_cast<double>(strip_bytes()) +
                 1e-9));
  bitmap_blocks_ = bitmap_record_blocks(segments_);
}

DeviceConfig ArrayGeometry::device_config(CompressMode mode) const {
  DeviceConfig c;
  c.flash_capacity_bytes = flash_;
  c.logical_blocks = device_logical_blocks();
  c.mode = mode;
  return c;
}

int ArrayGeometry::parity_device(std::uint64_t seg) const {
  const auto d = static_cast<std::uint64_t>(devices_);
  return static_cast<int>(static_cast<std::uint64_t>(n()) - seg % d);
}

int ArrayGeometry::data_device(std::uint64_t seg, std::uint32_t strip) const {
  return (parity_device(seg) + 1 + static_cast<int>(strip)) % devices_;
}

int ArrayGeometry::mirror_device(std::uint64_t seg, std::uint32_t strip) const {
  return (data_device(seg, strip) + 1) % devices_;
}

MappedLba ArrayGeometry::map_user_lba(std::uint64_t user_lba, Level level) const {
  if (user_lba >= user_blocks()) {
    raise(Errc::out_of_range,
          "user lba " + std::to_string(user_lba) + " >= " + std::to_string(user_blocks()));
  }
  const std::uint64_t per_seg = static_cast<std::uint64_t>(n()) * strip_blocks_;
  MappedLba m;
  m.seg = user_lba / per_seg;
  const std::uint64_t within = user_lba % per_seg;
  m.strip = static_cast<std::uint32_t>(within / strip_blocks_);
  m.offset = static_cast<std::uint32_t>(within % strip_blocks_);
  m.level = level;
  m.copy_a = {data_device(m.seg, m.strip), slot_lba(m.seg, 0) + m.offset};
  if (level == Level::r10) {
    m.copy_b = Location{mirror_device(m.seg, m.strip), slot_lba(m.seg, 1) + m.offset};
  } else {
    m.parity = Location{parity_device(m.seg), slot_lba(m.seg, 0) + m.offset};
  }
  return m;
}

PlacementPlan ArrayGeometry::segment_locations(std::uint64_t seg, Level level) const {
  PlacementPlan p;
  p.seg = seg;
  p.level = level;
  p.parity_device = parity_device(seg);
  const std::uint64_t s1 = slot_lba(seg, 0);
  const std::uint64_t s2 = slot_lba(seg, 1);
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n()); ++i) {
    p.copy_a.push_back({data_device(seg, i), s1});
  }
  if (level == Level::r5) {
    p.parity = Location{p.parity_device, s1};
    for (int d = 0; d < devices_; ++d) p.trimmed.push_back({d, s2});
  } else {
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n()); ++i) {
      p.copy_b.push_back({mirror_device(seg, i), s2});
    }
    p.trimmed.push_back({p.parity_device, s1});
    // Copy B is copy A shifted by one device, which leaves slot 2 empty on
    // the device that holds D1 of copy A.
    p.trimmed.push_back({data_device(seg, 0), s2});
  }
  return p;
}

Location ArrayGeometry::journal_data(std::uint64_t row, int col) const {
  const int pd = journal_parity_device(row);
  return {(pd + 1 + col) % devices_, journal_base() + row};
}

Location ArrayGeometry::journal_parity(std::uint64_t row) const {
  return {journal_parity_device(row), journal_base() + row};
}

void check_placement_invariants(const ArrayGeometry& g) {
  for (std::uint64_t seg = 0; seg < g.segment_count(); ++seg) {
    for (Level lvl : {Level::r5, Level::r10}) {
      const PlacementPlan p = g.segment_locations(seg, lvl);
      std::set<int> slot1;
      std::set<int> slot2;
      auto fail = [&](const char* what) {
        raise(Errc::config_invalid, std::string(what) + " in segment " + std::to_string(seg));
      };
      for (const auto& l : p.copy_a) {
        if (!slot1.insert(l.device).second) fail("two strips on one device (slot 1)");
      }
      if (p.parity && !slot1.insert(p.parity->device).second) fail("parity collides with data");
      for (std::size_t i = 0; i < p.copy_b.size(); ++i) {
        if (!slot2.insert(p.copy_b[i].device).second) fail("two strips on one device (slot 2)");
        if (p.copy_b[i].device == p.copy_a[i].device) fail("both copies on one device");
      }
      for (const auto& t : p.trimmed) {
        const bool in_slot1 = t.lba == g.slot_lba(seg, 0);
        if (!(in_slot1 ? slot1 : slot2).insert(t.device).second) fail("trimmed position in use");
      }
      if (slot1.size() != static_cast<std::size_t>(g.devices()) ||
          slot2.size() != static_cast<std::size_t>(g.devices())) {
        fail("positions not fully accounted");
      }
    }
  }
}

}  // namespace eraid
