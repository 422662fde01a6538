#include <gtest/gtest.h>

#include <set>

#include "eraid/czdev/device.hpp"
#include "eraid/error.hpp"
#include "eraid/layout/bitmap.hpp"
#include "eraid/layout/geometry.hpp"

using namespace eraid;

namespace {

GeometryConfig cfg(int devices, std::uint64_t flash_blocks, double alpha, std::uint32_t sb = 1,
                   std::uint64_t journal_rows = 4) {
  GeometryConfig c;
  c.devices = devices;
  c.flash_capacity_bytes = flash_blocks * kBlockSize;
  c.alpha_exp = alpha;
  c.strip_blocks = sb;
  c.journal_rows = journal_rows;
  return c;
}

}  // namespace

TEST(Geometry, SegmentCountFollowsExpansion) {
  const ArrayGeometry g(cfg(4, 1000, 1.4));
  EXPECT_EQ(g.segment_count(), 1400u);
  EXPECT_EQ(g.user_blocks(), 1400u * 3);
  const ArrayGeometry g2(cfg(4, 1000, 1.4, 4));
  EXPECT_EQ(g2.segment_count(), 350u);
  EXPECT_EQ(g2.user_blocks(), 350u * 3 * 4);
}

TEST(Geometry, DeviceLayoutRegions) {
  const ArrayGeometry g(cfg(4, 1000, 1.0, 2, 8));
  EXPECT_EQ(g.segment_region_blocks(), 500u * 2 * 2);
  EXPECT_EQ(g.bitmap_lba(0), g.segment_region_blocks());
  EXPECT_EQ(g.bitmap_lba(1), g.bitmap_lba(0) + g.bitmap_blocks());
  EXPECT_EQ(g.journal_base(), g.bitmap_lba(1) + g.bitmap_blocks());
  EXPECT_EQ(g.device_logical_blocks(), g.journal_base() + 8);
  EXPECT_EQ(g.slot_lba(7, 0), 7u * 4);
  EXPECT_EQ(g.slot_lba(7, 1), 7u * 4 + 2);
}

TEST(Geometry, ParityRotation) {
  const ArrayGeometry g(cfg(4, 100, 1.0));
  // n - (k mod (n + 1)) with n = 3
  const int want[] = {3, 2, 1, 0, 3, 2, 1, 0};
  for (int k = 0; k < 8; ++k) EXPECT_EQ(g.parity_device(k), want[k]) << k;
}

TEST(Geometry, PlacementInvariantsHoldAcrossShapes) {
  for (int devices : {3, 4, 5, 6, 8}) {
    for (std::uint32_t sb : {1u, 2u, 4u}) {
      const ArrayGeometry g(cfg(devices, 200, 1.3, sb));
      EXPECT_NO_THROW(check_placement_invariants(g)) << devices << " " << sb;
    }
  }
}

// Brute force: every segment at both levels uses each device position at
// most once and the two copies of a strip never share a device.
TEST(Geometry, MirrorOnDistinctDeviceAndSkewed) {
  const ArrayGeometry g(cfg(4, 64, 1.0));
  for (std::uint64_t seg = 0; seg < g.segment_count(); ++seg) {
    const PlacementPlan r10 = g.segment_locations(seg, Level::r10);
    std::set<std::pair<int, std::uint64_t>> used;
    for (std::size_t i = 0; i < r10.copy_a.size(); ++i) {
      EXPECT_NE(r10.copy_a[i].device, r10.copy_b[i].device);
      EXPECT_TRUE(used.insert({r10.copy_a[i].device, r10.copy_a[i].lba}).second);
      EXPECT_TRUE(used.insert({r10.copy_b[i].device, r10.copy_b[i].lba}).second);
      EXPECT_EQ(r10.copy_b[i].device, (r10.copy_a[i].device + 1) % g.devices());
    }
    // 2n strips used, 2 positions left empty
    EXPECT_EQ(used.size() + r10.trimmed.size(), 2u * g.devices());
    const PlacementPlan r5 = g.segment_locations(seg, Level::r5);
    EXPECT_EQ(r5.parity->device, g.parity_device(seg));
    EXPECT_EQ(r5.trimmed.size(), static_cast<std::size_t>(g.devices()));
  }
}

TEST(Geometry, MapUserLba) {
  const ArrayGeometry g(cfg(4, 64, 1.0, 2));
  const MappedLba m = g.map_user_lba(13, Level::r5);
  // 6 blocks per segment: seg 2, within 1 -> strip 0, offset 1
  EXPECT_EQ(m.seg, 2u);
  EXPECT_EQ(m.strip, 0u);
  EXPECT_EQ(m.offset, 1u);
  EXPECT_EQ(m.copy_a.lba, g.slot_lba(2, 0) + 1);
  EXPECT_EQ(m.parity->device, g.parity_device(2));
  const MappedLba r = g.map_user_lba(13, Level::r10);
  EXPECT_EQ(r.copy_b->lba, g.slot_lba(2, 1) + 1);
  EXPECT_FALSE(r.parity.has_value());
  try {
    (void)g.map_user_lba(g.user_blocks(), Level::r5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::out_of_range);
  }
}

TEST(Geometry, JournalRowsRotateParity) {
  const ArrayGeometry g(cfg(4, 64, 1.0, 1, 8));
  for (std::uint64_t r = 0; r < 8; ++r) {
    std::set<int> devs;
    for (int c = 0; c < g.n(); ++c) {
      const Location l = g.journal_data(r, c);
      EXPECT_EQ(l.lba, g.journal_base() + r);
      devs.insert(l.device);
    }
    devs.insert(g.journal_parity(r).device);
    EXPECT_EQ(devs.size(), static_cast<std::size_t>(g.devices()));
    EXPECT_EQ(g.journal_parity(r).device, static_cast<int>(r % 4));
  }
}

TEST(Bitmap, SetGetCount) {
  LevelBitmap bm(130);
  EXPECT_EQ(bm.count_r10(), 0u);
  bm.set(0, Level::r10);
  bm.set(129, Level::r10);
  bm.set(129, Level::r10);
  EXPECT_EQ(bm.count_r10(), 2u);
  EXPECT_EQ(bm.get(129), Level::r10);
  bm.set(0, Level::r5);
  EXPECT_EQ(bm.count_r10(), 1u);
  LevelBitmap other(130);
  other.assign_bytes(bm.to_bytes());
  EXPECT_EQ(other.get(129), Level::r10);
  EXPECT_EQ(other.count_r10(), 1u);
}

TEST(Bitmap, PersistAndLoadNewest) {
  const ArrayGeometry g(cfg(4, 256, 1.0));
  auto devs = make_devices(4, g.device_config(CompressMode::modeled));
  EXPECT_FALSE(load_bitmap(devs, g).has_value());
  LevelBitmap bm(g.segment_count());
  bm.set(3, Level::r10);
  persist_bitmap(devs, g, bm, 1);
  bm.set(4, Level::r10);
  persist_bitmap(devs, g, bm, 2);
  auto img = load_bitmap(devs, g);
  ASSERT_TRUE(img);
  EXPECT_EQ(img->seq, 2u);
  LevelBitmap back(g.segment_count());
  back.assign_bytes(img->bits);
  EXPECT_EQ(back.get(4), Level::r10);
}

TEST(Bitmap, CorruptSlotFallsBackToOlderRecord) {
  const ArrayGeometry g(cfg(4, 256, 1.0));
  auto devs = make_devices(4, g.device_config(CompressMode::modeled));
  LevelBitmap bm(g.segment_count());
  persist_bitmap(devs, g, bm, 1);
  bm.set(1, Level::r10);
  persist_bitmap(devs, g, bm, 2);
  // Scribble over slot 0 (seq 2) everywhere.
  Block junk{};
  junk.fill(0x5a);
  for (auto& d : devs) d->write(g.bitmap_lba(0), junk);
  auto img = load_bitmap(devs, g);
  ASSERT_TRUE(img);
  EXPECT_EQ(img->seq, 1u);
}

TEST(Bitmap, OfflineDeviceSkippedButOneReplicaRequired) {
  const ArrayGeometry g(cfg(4, 256, 1.0));
  auto devs = make_devices(4, g.device_config(CompressMode::modeled));
  LevelBitmap bm(g.segment_count());
  devs[1]->set_online(false);
  EXPECT_NO_THROW(persist_bitmap(devs, g, bm, 1));
  for (auto& d : devs) d->set_online(false);
  EXPECT_THROW(persist_bitmap(devs, g, bm, 2), Error);
}
