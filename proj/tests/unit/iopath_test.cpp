#include <gtest/gtest.h>

#include <cstring>
#include <map>
#include <random>

#include "eraid/convert/convert.hpp"
#include "eraid/error.hpp"
#include "eraid/iopath/array.hpp"

using namespace eraid;

namespace {

Block stamp(std::uint64_t lba, std::uint64_t version) {
  Block b{};
  std::memcpy(b.data(), &lba, 8);
  std::memcpy(b.data() + 8, &version, 8);
  b[100] = static_cast<std::uint8_t>(version * 7 + lba);
  return b;
}

ArrayConfig small_cfg(double journal_fraction, CompressMode mode = CompressMode::modeled,
                      std::uint64_t flash_blocks = 512) {
  ArrayConfig c;
  c.geometry.devices = 4;
  c.geometry.flash_capacity_bytes = flash_blocks * kBlockSize;
  c.geometry.alpha_exp = 1.0;
  c.mode = mode;
  c.journal_fraction = journal_fraction;
  c.migration_workers = 2;
  return c;
}

std::unique_ptr<ElasticArray> make(const ArrayConfig& c) {
  return ElasticArray::create(c, ElasticArray::make_devices_for(c));
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

}  // namespace

class ReadYourWrites : public ::testing::TestWithParam<double> {};

TEST_P(ReadYourWrites, RandomOverwritesReadBack) {
  auto a = make(small_cfg(GetParam()));
  std::mt19937_64 rng(3);
  std::map<std::uint64_t, std::uint64_t> ref;
  const std::uint64_t blocks = a->geometry().user_blocks();
  for (int i = 0; i < 3000; ++i) {
    const std::uint64_t lba = rng() % blocks;
    const std::uint64_t v = ++ref[lba];
    a->write(lba, stamp(lba, v), SizeHint::of_ratio(2.0));
    if (i % 97 == 0) {
      const std::uint64_t probe = ref.begin()->first;
      EXPECT_EQ(a->read(probe), stamp(probe, ref[probe]));
    }
  }
  for (auto [lba, v] : ref) ASSERT_EQ(a->read(lba), stamp(lba, v)) << lba;
  a->drain_journal();
  for (auto [lba, v] : ref) ASSERT_EQ(a->read(lba), stamp(lba, v)) << lba;
  EXPECT_TRUE(a->scrub().clean());
}

INSTANTIATE_TEST_SUITE_P(Journal, ReadYourWrites, ::testing::Values(0.0, 0.01, 0.05));

TEST(Array, UnwrittenBlocksReadAsZero) {
  auto a = make(small_cfg(0.01));
  EXPECT_EQ(a->read(17), Block{});
  EXPECT_EQ(code_of([&] { (void)a->read(a->geometry().user_blocks()); }), Errc::out_of_range);
}

TEST(Array, WriteAmplificationWithoutJournal) {
  auto a = make(small_cfg(0.0));
  a->reset_amp();
  for (std::uint64_t lba = 0; lba < 300; ++lba) a->write(lba, stamp(lba, 1));
  const AmpCounters amp = a->amp();
  EXPECT_EQ(amp.user_writes, 300u);
  EXPECT_DOUBLE_EQ(amp.wa(), 2.0);
  EXPECT_DOUBLE_EQ(amp.write_ra(), 2.0);
  EXPECT_EQ(amp.journal_writes, 0u);
}

TEST(Array, WriteAmplificationWithJournal) {
  auto a = make(small_cfg(0.05));
  a->reset_amp();
  const std::uint64_t n = 3;
  const std::uint64_t writes = 300;  // a multiple of n: every row closes
  for (std::uint64_t lba = 0; lba < writes; ++lba) a->write(lba, stamp(lba, 1));
  a->drain_journal();
  const AmpCounters amp = a->amp();
  EXPECT_NEAR(amp.wa(), 2.0 + (n + 1.0) / n, 1e-9);
  EXPECT_DOUBLE_EQ(amp.write_ra(), 2.0);
}

TEST(Array, MirrorWritesNeedNoReads) {
  auto a = make(small_cfg(0.0));
  promote_segment(*a, 0);
  promote_segment(*a, 1);
  a->reset_amp();
  const std::uint64_t per_seg = a->geometry().n();
  for (std::uint64_t lba = 0; lba < 2 * per_seg; ++lba) a->write(lba, stamp(lba, 2));
  const AmpCounters amp = a->amp();
  EXPECT_DOUBLE_EQ(amp.wa(), 2.0);
  EXPECT_EQ(amp.write_path_reads, 0u);
  for (std::uint64_t lba = 0; lba < 2 * per_seg; ++lba) EXPECT_EQ(a->read(lba), stamp(lba, 2));
  EXPECT_TRUE(a->scrub().clean());
}

TEST(Array, DegradedReadsWritesAndRestore) {
  auto a = make(small_cfg(0.01));
  const std::uint64_t blocks = a->geometry().user_blocks();
  for (std::uint64_t lba = 0; lba < blocks; lba += 3) a->write(lba, stamp(lba, 1));
  promote_segment(*a, 5);
  a->drain_journal();

  a->fail_device(2);
  EXPECT_TRUE(a->mode().degraded());
  EXPECT_EQ(*a->mode().degraded_device, 2);
  for (std::uint64_t lba = 0; lba < blocks; lba += 3) ASSERT_EQ(a->read(lba), stamp(lba, 1));

  // R5 segments are read-only, R10 segments keep taking writes.
  EXPECT_EQ(code_of([&] { a->write(0, stamp(0, 9)); }), Errc::degraded_reject);
  const std::uint64_t r10_lba = a->geometry().first_user_lba(5);
  a->write(r10_lba, stamp(r10_lba, 9));
  EXPECT_EQ(a->read(r10_lba), stamp(r10_lba, 9));
  EXPECT_EQ(code_of([&] { a->fail_device(0); }), Errc::data_loss);
  EXPECT_EQ(code_of([&] { promote_segment(*a, 6); }), Errc::device_offline);

  a->restore_device(2);
  EXPECT_FALSE(a->mode().degraded());
  const ScrubReport rep = a->scrub();
  EXPECT_TRUE(rep.clean());
  EXPECT_EQ(rep.stale_positions, 0u);
  for (std::uint64_t lba = 0; lba < blocks; lba += 3) {
    const std::uint64_t v = lba == r10_lba ? 9 : 1;
    ASSERT_EQ(a->read(lba), stamp(lba, v));
  }
}

TEST(Array, DegradedReadAmplification) {
  auto a = make(small_cfg(0.0));
  const std::uint64_t blocks = a->geometry().user_blocks();
  for (std::uint64_t lba = 0; lba < blocks; ++lba) {
    a->write(lba, stamp(lba, 1), SizeHint::of_ratio(2.0));
  }
  a->fail_device(1);
  a->reset_amp();
  for (std::uint64_t lba = 0; lba < blocks; ++lba) (void)a->read(lba);
  const double n = a->geometry().n();
  // Parity rotation puts a data strip on the failed device in n of every
  // n + 1 stripes; those reads cost n, the others 1.
  EXPECT_NEAR(a->amp().ra(), 2.0 * n / (n + 1.0), 0.01);
}

TEST(Array, OutOfSpaceLeavesStripesConsistent) {
  ArrayConfig c = small_cfg(0.0, CompressMode::real, 256);
  c.geometry.alpha_exp = 1.6;
  auto a = make(c);
  std::mt19937_64 rng(11);
  std::map<std::uint64_t, Block> ref;
  bool hit = false;
  for (std::uint64_t lba = 0; lba < a->geometry().user_blocks(); ++lba) {
    Block b;
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    try {
      a->write(lba, b);
      ref[lba] = b;
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), Errc::out_of_space);
      hit = true;
      break;
    }
  }
  ASSERT_TRUE(hit);
  EXPECT_TRUE(a->scrub().clean());
  for (const auto& [lba, b] : ref) ASSERT_EQ(a->read(lba), b);
}

TEST(Array, RealModeCompressesData) {
  auto a = make(small_cfg(0.01, CompressMode::real));
  Block b{};
  for (std::size_t i = 0; i < kBlockSize; ++i) b[i] = static_cast<std::uint8_t>(i % 7);
  for (std::uint64_t lba = 0; lba < 30; ++lba) a->write(lba, b);
  a->drain_journal();
  EXPECT_LT(a->physical_used(), 30u * kBlockSize);
  EXPECT_EQ(a->read(29), b);
  EXPECT_TRUE(a->scrub().clean());
}

TEST(Array, OpenRecoversLevelsAndData) {
  const ArrayConfig c = small_cfg(0.01);
  auto devs = ElasticArray::make_devices_for(c);
  {
    auto a = ElasticArray::create(c, devs);
    for (std::uint64_t lba = 0; lba < 60; ++lba) a->write(lba, stamp(lba, 4));
    promote_segment(*a, 3);
    // Journal left undrained on purpose.
  }
  auto b = ElasticArray::open(c, devs);
  EXPECT_EQ(b->level(3), Level::r10);
  EXPECT_EQ(b->r10_segments(), 1u);
  for (std::uint64_t lba = 0; lba < 60; ++lba) ASSERT_EQ(b->read(lba), stamp(lba, 4));
  EXPECT_TRUE(b->scrub().clean());
}

TEST(Array, CreateRejectsMismatchedDevices) {
  const ArrayConfig c = small_cfg(0.01);
  auto devs = ElasticArray::make_devices_for(c);
  devs.pop_back();
  EXPECT_EQ(code_of([&] { (void)ElasticArray::create(c, devs); }), Errc::config_invalid);
}

TEST(Array, AccessObserverSeesLevel) {
  auto a = make(small_cfg(0.01));
  promote_segment(*a, 2);
  std::vector<std::pair<std::uint64_t, Level>> seen;
  a->set_access_observer([&](std::uint64_t s, Level l, bool) { seen.emplace_back(s, l); });
  (void)a->read(a->geometry().first_user_lba(2));
  (void)a->read(0);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0], std::make_pair(std::uint64_t{2}, Level::r10));
  EXPECT_EQ(seen[1], std::make_pair(std::uint64_t{0}, Level::r5));
}

TEST(Array, MirrorReadPrefersLessBusyCopy) {
  auto a = make(small_cfg(0.0));
  promote_segment(*a, 0);
  const int da = a->geometry().data_device(0, 0);
  const int db = a->geometry().mirror_device(0, 0);
  EXPECT_EQ(a->mirror_read_select(0, 0), std::min(da, db));
  {
    auto h = a->devices()[std::min(da, db)]->hold();
    EXPECT_EQ(a->mirror_read_select(0, 0), std::max(da, db));
  }
}
