#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "eraid/bench/bench.hpp"
#include "eraid/convert/convert.hpp"
#include "eraid/scheduler/scheduler.hpp"

#include "json.hpp"

using namespace eraid;

namespace {

ArrayConfig cfg() {
  ArrayConfig c;
  c.geometry.devices = 4;
  c.geometry.flash_capacity_bytes = 1024 * kBlockSize;
  c.geometry.alpha_exp = 1.0;
  c.journal_fraction = 0.02;
  return c;
}

std::unique_ptr<ElasticArray> make() {
  const ArrayConfig c = cfg();
  return ElasticArray::create(c, ElasticArray::make_devices_for(c));
}

}  // namespace

TEST(Workload, HotSetIsSeededAndSized) {
  const auto a = hot_segment_set(1000, 0.2, 3);
  EXPECT_EQ(a.size(), 200u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(a, hot_segment_set(1000, 0.2, 3));
  EXPECT_NE(a, hot_segment_set(1000, 0.2, 4));
}

TEST(Workload, EightyTwentyShare) {
  auto arr = make();
  WorkloadSpec s;
  s.op_count = 200000;
  s.distribution = Distribution::hot8020;
  s.read_fraction = 0.3;
  const auto ops = generate_ops(s, arr->geometry());
  ASSERT_EQ(ops.size(), s.op_count);
  const auto hot = hot_segment_set(arr->geometry().segment_count(), 0.2, s.seed);
  const std::set<std::uint64_t> hs(hot.begin(), hot.end());
  const std::uint64_t per_seg = arr->geometry().n();
  std::uint64_t in_hot = 0, reads = 0;
  for (const Op& o : ops) {
    in_hot += hs.count(o.lba / per_seg);
    reads += !o.write;
  }
  EXPECT_NEAR(static_cast<double>(in_hot) / s.op_count, 0.8, 0.01);
  EXPECT_NEAR(static_cast<double>(reads) / s.op_count, 0.3, 0.01);
}

TEST(Workload, UniformCoversSpan) {
  auto arr = make();
  WorkloadSpec s;
  s.op_count = 50000;
  s.lba_span_fraction = 0.25;
  const auto ops = generate_ops(s, arr->geometry());
  const std::uint64_t limit = arr->geometry().user_blocks() / 4;
  std::uint64_t max_lba = 0;
  for (const Op& o : ops) max_lba = std::max(max_lba, o.lba);
  EXPECT_LT(max_lba, limit + 1);
  EXPECT_GT(max_lba, limit * 9 / 10);
}

TEST(Workload, Deterministic) {
  auto arr = make();
  WorkloadSpec s;
  s.op_count = 1000;
  s.read_fraction = 0.5;
  s.distribution = Distribution::hot8020;
  const auto a = generate_ops(s, arr->geometry());
  const auto b = generate_ops(s, arr->geometry());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].lba, b[i].lba);
    EXPECT_EQ(a[i].write, b[i].write);
  }
}

TEST(Run, ZeroOps) {
  auto arr = make();
  WorkloadSpec s;
  const RunReport r = run_workload(s, *arr);
  EXPECT_EQ(r.ops, 0u);
  EXPECT_DOUBLE_EQ(r.wa, 0.0);
  EXPECT_TRUE(r.errors.empty());
}

TEST(Run, CountsLevelsAndAmplification) {
  auto arr = make();
  promote_segment(*arr, 0);
  WorkloadSpec s;
  s.op_count = 4000;
  s.read_fraction = 0.5;
  s.ratio_profile = {{1.0, 2.0}};
  const RunReport r = run_workload(s, *arr);
  EXPECT_EQ(r.ops, 4000u);
  EXPECT_EQ(r.reads + r.writes, 4000u);
  EXPECT_EQ(r.r5_ops + r.r10_ops, 4000u);
  EXPECT_GT(r.wa, 2.0);
  EXPECT_GT(r.device_ops_per_op, 1.0);
  EXPECT_TRUE(arr->scrub().clean());
}

TEST(Run, EventLogRegeneratesReportExactly) {
  auto arr = make();
  const ArrayConfig c = cfg();
  SchedulerConfig sc = SchedulerConfig::defaults_for(c.geometry.flash_capacity_bytes);
  sc.stability_window = 1;
  sc.min_samples = 100;
  Scheduler sched(*arr, sc);
  WorkloadSpec s;
  s.op_count = 3000;
  s.read_fraction = 0.4;
  s.distribution = Distribution::hot8020;
  s.ratio_profile = {{0.5, 3.0}, {0.5, 1.5}};
  s.sample_every = 500;
  s.tick_every = 250;
  EventLog log;
  const RunReport r = run_workload(s, *arr, &sched, &log);
  EXPECT_EQ(log.ops.size(), 3000u);
  EXPECT_EQ(log.samples.size(), 7u);
  const std::string text = log.to_jsonl();
  const EventLog back = EventLog::from_jsonl(text);
  EXPECT_EQ(back.to_jsonl(), text);
  EXPECT_EQ(report_from_events(back).to_json(), r.to_json());
  EXPECT_GT(arr->r10_segments(), 0u);
  EXPECT_EQ(r.coverage_trace.size(), 7u);
}

TEST(Run, ErrorsAreCountedByClass) {
  auto arr = make();
  arr->fail_device(1);
  WorkloadSpec s;
  s.op_count = 100;
  s.read_fraction = 0.0;
  const RunReport r = run_workload(s, *arr);
  EXPECT_EQ(r.errors.at("DegradedReject"), 100u);
}

TEST(Run, MultipleSubmitters) {
  auto arr = make();
  WorkloadSpec s;
  s.op_count = 4000;
  s.read_fraction = 0.3;
  s.submitters = 4;
  s.ratio_profile = {{1.0, 2.0}};
  const RunReport r = run_workload(s, *arr);
  EXPECT_EQ(r.ops, 4000u);
  EXPECT_TRUE(r.errors.empty());
  EXPECT_TRUE(arr->scrub().clean());
}

TEST(Stats, JsonSchema) {
  auto arr = make();
  promote_segment(*arr, 1);
  const auto j = nlohmann::json::parse(array_stats_json(*arr));
  EXPECT_EQ(j.at("schema"), "eraid.stats/1");
  EXPECT_EQ(j.at("geometry").at("devices"), 4);
  EXPECT_EQ(j.at("levels").at("r10_segments"), 1);
  EXPECT_EQ(j.at("devices").size(), 4u);
  EXPECT_TRUE(j.at("devices")[0].at("per_class").contains("user_write"));
  EXPECT_TRUE(j.at("degraded_device").is_null());
}

TEST(Classification, CsvAndOrdering) {
  ClassificationConfig c;
  c.segments = 400;
  c.ops = 6000;
  c.accuracies = {0.5, 1.0};
  c.coverages = {0.2};
  const auto rows = classification_accuracy_experiment(c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GT(rows[0].cost_per_write, rows[1].cost_per_write);
  EXPECT_EQ(rows[1].hot_r10, rows[1].hot_segments);
  const std::string csv = classification_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
