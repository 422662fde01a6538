#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "eraid/czdev/compressor.hpp"
#include "eraid/czdev/device.hpp"
#include "eraid/czdev/parity_model.hpp"
#include "eraid/error.hpp"

using namespace eraid;

namespace {

Block pattern(std::uint64_t seed) {
  Block b{};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < kBlockSize; i += 8) {
    const std::uint64_t v = rng();
    std::memcpy(b.data() + i, &v, 8);
  }
  return b;
}

DeviceConfig small(CompressMode mode, std::uint64_t flash_blocks = 16, std::uint64_t logical = 64) {
  DeviceConfig c;
  c.flash_capacity_bytes = flash_blocks * kBlockSize;
  c.logical_blocks = logical;
  c.mode = mode;
  return c;
}

}  // namespace

TEST(Compressor, RandomBlockIsStoredRaw) {
  const Block b = pattern(3);
  EXPECT_EQ(deflate_len(b), kBlockSize);
}

TEST(Compressor, ZeroBlockShrinks) {
  const Block z{};
  EXPECT_LT(deflate_len(z), 64u);
}

TEST(ModeledLen, RoundsUpFromRatio) {
  EXPECT_EQ(modeled_len(SizeHint::of_ratio(2.0)), 2048u);
  EXPECT_EQ(modeled_len(SizeHint::of_ratio(3.0)), 1366u);  // ceil(4096 / 3)
  EXPECT_EQ(modeled_len(SizeHint::of_len(1000)), 1000u);
  EXPECT_EQ(modeled_len(SizeHint{}), 4096u);
}

TEST(Device, WriteReadTrimRoundTrip) {
  CompressingDevice d(0, small(CompressMode::modeled));
  const Block b = pattern(1);
  WriteOptions opt;
  opt.hint = SizeHint::of_ratio(2.0);
  EXPECT_EQ(d.write(5, b, opt), 2048u);
  EXPECT_EQ(d.read(5), b);
  EXPECT_EQ(d.physical_used(), 2048u);
  EXPECT_EQ(d.trim(5, 1), 2048u);
  EXPECT_EQ(d.physical_used(), 0u);
  EXPECT_EQ(d.read(5), Block{});
  EXPECT_FALSE(d.mapped(5));
}

TEST(Device, RealModeMeasuresCompressedSize) {
  CompressingDevice d(0, small(CompressMode::real));
  const Block z{};
  const std::uint32_t len = d.write(0, z);
  EXPECT_EQ(len, deflate_len(z));
  EXPECT_EQ(d.write(1, pattern(9)), kBlockSize);
  EXPECT_EQ(d.physical_used(), len + kBlockSize);
}

TEST(Device, OverwriteAdjustsUsage) {
  CompressingDevice d(0, small(CompressMode::modeled));
  WriteOptions opt;
  opt.hint = SizeHint::of_len(1000);
  d.write(0, pattern(1), opt);
  opt.hint = SizeHint::of_len(300);
  d.write(0, pattern(2), opt);
  EXPECT_EQ(d.physical_used(), 300u);
  EXPECT_EQ(d.recompute_physical_used(), 300u);
}

TEST(Device, OutOfSpaceLeavesBlockUntouched) {
  CompressingDevice d(0, small(CompressMode::modeled, 2));
  d.write(0, pattern(1));
  d.write(1, pattern(2));
  try {
    d.write(2, pattern(3));
    FAIL() << "expected OutOfSpace";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::out_of_space);
  }
  EXPECT_FALSE(d.mapped(2));
  EXPECT_EQ(d.physical_used(), 2 * kBlockSize);
  // Shrinking an existing block still works at the limit.
  WriteOptions opt;
  opt.hint = SizeHint::of_len(10);
  d.write(1, pattern(4), opt);
  EXPECT_EQ(d.physical_used(), kBlockSize + 10);
}

TEST(Device, LbaOutOfRange) {
  CompressingDevice d(0, small(CompressMode::modeled));
  EXPECT_THROW(d.write(64, pattern(1)), Error);
  EXPECT_THROW(d.read(1000), Error);
}

TEST(Device, OfflineRejectsIo) {
  CompressingDevice d(0, small(CompressMode::modeled));
  d.set_online(false);
  try {
    d.read(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::device_offline);
  }
  EXPECT_THROW(d.write(0, pattern(1)), Error);
  EXPECT_THROW(d.trim(0, 1), Error);
}

TEST(Device, QueryRatio) {
  CompressingDevice d(0, small(CompressMode::modeled));
  EXPECT_THROW(d.query_ratio(0, 4), Error);
  WriteOptions opt;
  opt.hint = SizeHint::of_len(1024);
  d.write(0, pattern(1), opt);
  opt.hint = SizeHint::of_len(2048);
  d.write(1, pattern(2), opt);
  // 2 blocks of 4096 logical over 3072 stored bytes
  EXPECT_NEAR(d.query_ratio(0, 4), 8192.0 / 3072.0, 1e-12);
}

TEST(Device, CountersSplitByClass) {
  CompressingDevice d(0, small(CompressMode::modeled));
  WriteOptions opt;
  opt.io_class = IoClass::journal;
  d.write(0, pattern(1), opt);
  d.read(0, IoClass::maintenance);
  d.trim(0, 1, IoClass::background);
  const DeviceStats st = d.stats();
  EXPECT_EQ(st.per_class[static_cast<int>(IoClass::journal)].writes, 1u);
  EXPECT_EQ(st.per_class[static_cast<int>(IoClass::maintenance)].reads, 1u);
  EXPECT_EQ(st.per_class[static_cast<int>(IoClass::background)].trims, 1u);
  EXPECT_EQ(st.write_ops, 1u);
  d.reset_counters();
  EXPECT_EQ(d.stats().write_ops, 0u);
}

TEST(Device, MetadataTravelsWithBlock) {
  CompressingDevice d(0, small(CompressMode::modeled));
  BlockMeta m{};
  m[0] = 0xab;
  m[31] = 0xcd;
  WriteOptions opt;
  opt.meta = &m;
  d.write(3, pattern(1), opt);
  ASSERT_TRUE(d.read_meta(3).has_value());
  EXPECT_EQ(*d.read_meta(3), m);
  d.write(3, pattern(2));
  EXPECT_FALSE(d.read_meta(3).has_value());
}

TEST(FaultInjector, CrashAtIndexStopsEverything) {
  auto devs = make_devices(2, small(CompressMode::modeled));
  FaultInjector fi;
  fi.attach(devs);
  fi.crash_at(2);
  devs[0]->write(0, pattern(1));
  devs[1]->write(0, pattern(1));
  EXPECT_THROW(devs[0]->write(1, pattern(2)), SimulatedCrash);
  EXPECT_FALSE(devs[0]->mapped(1));
  // Power stays off until the injector is disarmed.
  EXPECT_THROW(devs[1]->trim(0, 1), SimulatedCrash);
  fi.disarm();
  devs[1]->trim(0, 1);
  fi.detach(devs);
}

TEST(FaultInjector, TornWriteKeepsHalfOldHalfNew) {
  auto devs = make_devices(1, small(CompressMode::modeled));
  const Block old_b = pattern(1);
  const Block new_b = pattern(2);
  devs[0]->write(0, old_b);
  FaultInjector fi;
  fi.attach(devs);
  fi.crash_at(0, true);
  EXPECT_THROW(devs[0]->write(0, new_b), SimulatedCrash);
  fi.disarm();
  const Block got = devs[0]->read(0);
  EXPECT_EQ(std::memcmp(got.data(), new_b.data(), kBlockSize / 2), 0);
  EXPECT_EQ(std::memcmp(got.data() + kBlockSize / 2, old_b.data() + kBlockSize / 2, kBlockSize / 2), 0);
}

TEST(FaultInjector, OfflineAtIndex) {
  auto devs = make_devices(2, small(CompressMode::modeled));
  FaultInjector fi;
  fi.attach(devs);
  fi.offline_at(1, devs[1].get());
  devs[0]->write(0, pattern(1));
  EXPECT_THROW(devs[1]->write(0, pattern(1)), Error);
  EXPECT_FALSE(devs[1]->online());
  EXPECT_FALSE(devs[1]->mapped(0));
}

TEST(Device, ImageRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "eraid_czdev_image_test.img";
  CompressingDevice d(7, small(CompressMode::modeled));
  WriteOptions opt;
  opt.hint = SizeHint::of_len(777);
  BlockMeta m{};
  m[5] = 5;
  opt.meta = &m;
  d.write(2, pattern(11), opt);
  d.write(9, Block{});
  d.save_image(path);
  auto back = CompressingDevice::load_image(path);
  EXPECT_EQ(back->id(), 7);
  EXPECT_EQ(back->read(2), pattern(11));
  EXPECT_EQ(back->read(9), Block{});
  EXPECT_EQ(back->stored_len(2), 777u);
  EXPECT_EQ(*back->read_meta(2), m);
  EXPECT_EQ(back->physical_used(), d.physical_used());
  std::filesystem::remove(path);
}

TEST(Device, CorruptImageRejected) {
  const auto path = std::filesystem::temp_directory_path() / "eraid_czdev_bad.img";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not an image", f);
    std::fclose(f);
  }
  try {
    CompressingDevice::load_image(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::corrupt_image);
  }
  std::filesystem::remove(path);
}

TEST(ParityModel, LinkageRatio) {
  EXPECT_DOUBLE_EQ(linked_parity_ratio(3.0), 1.5);
  EXPECT_DOUBLE_EQ(linked_parity_ratio(1.0), 1.0);
  EXPECT_DOUBLE_EQ(linked_parity_ratio(2.0), 1.25);
}

TEST(ParityModel, HintPolicies) {
  const std::uint32_t lens[] = {2048, 2048, 2048};   // alpha_usr = 2
  EXPECT_EQ(modeled_len(parity_hint(lens, ParityPolicy::linkage)), 3277u);  // ceil(4096 / 1.25)
  EXPECT_EQ(modeled_len(parity_hint(lens, ParityPolicy::incompressible)), 4096u);
  EXPECT_EQ(modeled_len(parity_hint(lens, ParityPolicy::same_as_data)), 2048u);
  const std::uint32_t none[] = {0, 0, 0};
  EXPECT_EQ(modeled_len(parity_hint(none, ParityPolicy::linkage)), 4096u);
}
