#include <gtest/gtest.h>

#include <cstring>

#include "eraid/convert/convert.hpp"
#include "eraid/error.hpp"

using namespace eraid;

namespace {

Block stamp(std::uint64_t lba, std::uint64_t v) {
  Block b{};
  std::memcpy(b.data(), &lba, 8);
  std::memcpy(b.data() + 8, &v, 8);
  return b;
}

ArrayConfig cfg(std::uint64_t flash_blocks = 512, std::uint32_t strip_blocks = 1) {
  ArrayConfig c;
  c.geometry.devices = 4;
  c.geometry.flash_capacity_bytes = flash_blocks * kBlockSize;
  c.geometry.alpha_exp = 1.0;
  c.geometry.strip_blocks = strip_blocks;
  c.journal_fraction = 0.0;
  return c;
}

std::unique_ptr<ElasticArray> filled(const ArrayConfig& c, std::uint64_t* blocks_out = nullptr) {
  auto a = ElasticArray::create(c, ElasticArray::make_devices_for(c));
  const std::uint64_t blocks = a->geometry().user_blocks();
  for (std::uint64_t lba = 0; lba < blocks; ++lba) {
    a->write(lba, stamp(lba, 1), SizeHint::of_ratio(3.0));
  }
  if (blocks_out) *blocks_out = blocks;
  return a;
}

void expect_data(ElasticArray& a, std::uint64_t blocks) {
  for (std::uint64_t lba = 0; lba < blocks; ++lba) ASSERT_EQ(a.read(lba), stamp(lba, 1)) << lba;
}

}  // namespace

TEST(Convert, PromoteThenDemotePreservesData) {
  std::uint64_t blocks = 0;
  auto a = filled(cfg(512, 2), &blocks);
  for (std::uint64_t s = 0; s < a->geometry().segment_count(); s += 2) promote_segment(*a, s);
  EXPECT_EQ(a->r10_segments(), (a->geometry().segment_count() + 1) / 2);
  expect_data(*a, blocks);
  auto rep = a->scrub();
  EXPECT_TRUE(rep.clean());
  EXPECT_EQ(rep.stale_positions, 0u);
  for (std::uint64_t s = 0; s < a->geometry().segment_count(); s += 2) demote_segment(*a, s);
  EXPECT_EQ(a->r10_segments(), 0u);
  expect_data(*a, blocks);
  rep = a->scrub();
  EXPECT_TRUE(rep.clean());
  EXPECT_EQ(rep.stale_positions, 0u);
}

TEST(Convert, PhaseTraces) {
  auto a = filled(cfg());
  ConversionTask t{4, Direction::promote};
  ConversionTrace tr;
  run_task(*a, t, &tr);
  EXPECT_EQ(t.state, TaskState::trimmed);
  EXPECT_EQ(tr.phases, (std::vector<std::string>{"copy", "commit", "trim", "done"}));
  ConversionTask d{4, Direction::demote};
  ConversionTrace dt;
  run_task(*a, d, &dt);
  EXPECT_EQ(dt.phases, (std::vector<std::string>{"parity", "commit", "trim", "done"}));
}

TEST(Convert, PromotionUsesSpaceDemotionReturnsIt) {
  auto a = filled(cfg());
  // Populate both bitmap slots first so only segment space changes below.
  promote_segment(*a, 1);
  demote_segment(*a, 1);
  const std::uint64_t before = a->physical_used();
  promote_segment(*a, 0);
  const std::uint64_t after = a->physical_used();
  // n copies added, one parity strip removed.
  EXPECT_GT(after, before);
  demote_segment(*a, 0);
  EXPECT_EQ(a->physical_used(), before);
}

TEST(Convert, WrongLevelAndRange) {
  auto a = filled(cfg());
  try {
    demote_segment(*a, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::wrong_level);
  }
  try {
    promote_segment(*a, a->geometry().segment_count());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::out_of_range);
  }
}

TEST(Convert, FailureBeforeCommitLeavesValidR5) {
  std::uint64_t blocks = 0;
  auto a = filled(cfg(), &blocks);
  FaultInjector fi;
  fi.attach(a->devices());
  // First mutation of the copy phase takes a device away.
  const int victim = a->geometry().mirror_device(7, 0);
  fi.offline_at(0, a->devices()[victim].get());
  ConversionTask t{7, Direction::promote};
  EXPECT_THROW(run_task(*a, t), Error);
  fi.disarm();
  fi.detach(a->devices());
  EXPECT_EQ(t.state, TaskState::failed);
  EXPECT_EQ(a->level(7), Level::r5);
  expect_data(*a, blocks);
  a->restore_device(victim);
  const auto rep = a->scrub();
  EXPECT_TRUE(rep.clean());
  EXPECT_EQ(rep.stale_positions, 0u);
  expect_data(*a, blocks);
}

TEST(Convert, WorkersReportBytesAndEvents) {
  auto a = filled(cfg());
  std::deque<ConversionTask> q;
  for (std::uint64_t s = 0; s < 20; ++s) q.push_back({s, Direction::promote});
  std::size_t seen = 0;
  ThrottleConfig th;
  th.worker_count = 4;
  const auto rep = run_conversion_workers(*a, q, th, {}, [&](const ProgressEvent&) { ++seen; });
  EXPECT_EQ(rep.completed, 20u);
  EXPECT_EQ(rep.failed, 0u);
  EXPECT_EQ(seen, 20u);
  EXPECT_EQ(rep.bytes_promoted, 20 * conversion_bytes(a->geometry()));
  EXPECT_GT(rep.sim_seconds, 0.0);
  EXPECT_EQ(a->r10_segments(), 20u);
  const std::string j = progress_event_json(rep.events.front());
  EXPECT_NE(j.find("\"direction\":\"promote\""), std::string::npos);
}

TEST(Convert, FailedTaskIsReportedAndOthersContinue) {
  auto a = filled(cfg());
  promote_segment(*a, 3);
  std::deque<ConversionTask> q{{2, Direction::promote}, {3, Direction::promote},
                               {4, Direction::promote}};
  const auto rep = run_conversion_workers(*a, q, ThrottleConfig{});
  EXPECT_EQ(rep.completed, 2u);
  EXPECT_EQ(rep.failed, 1u);
  EXPECT_FALSE(rep.events[1].ok);
  EXPECT_NE(rep.events[1].error.find("WrongLevel"), std::string::npos);
}

TEST(Convert, ThrottleCapsEveryWindow) {
  auto a = filled(cfg(4096, 16));
  std::deque<ConversionTask> q;
  for (std::uint64_t s = 0; s < a->geometry().segment_count(); ++s) {
    q.push_back({s, Direction::promote});
  }
  ThrottleConfig th;
  th.max_bytes_per_sec = 20e6;
  th.worker_count = 8;
  const auto rep = run_conversion_workers(*a, q, th);
  EXPECT_GT(rep.sim_seconds, 1.0);
  EXPECT_LE(rep.max_window_bytes, 1.1 * th.max_bytes_per_sec);
  EXPECT_GT(rep.bytes_per_sec, 0.8 * th.max_bytes_per_sec);
}

TEST(Convert, MoreWorkersMoreThroughput) {
  double last = 0.0;
  for (std::size_t w : {1, 4, 16}) {
    auto a = filled(cfg(1024, 4));
    std::deque<ConversionTask> q;
    for (std::uint64_t s = 0; s < a->geometry().segment_count(); ++s) {
      q.push_back({s, Direction::promote});
    }
    ThrottleConfig th;
    th.worker_count = w;
    const auto rep = run_conversion_workers(*a, q, th);
    EXPECT_GT(rep.promote_bytes_per_sec, last) << w;
    last = rep.promote_bytes_per_sec;
  }
}
