#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eraid/iopath/array.hpp"
#include "eraid/model/model.hpp"

namespace eraid {

class Scheduler;

enum class Distribution : std::uint8_t { uniform, hot8020 };

struct RatioRegion {
  double span_fraction = 1.0;   // share of the addressed LBA span, in order
  double ratio = 1.0;
};

struct WorkloadSpec {
  std::uint64_t op_count = 0;
  double read_fraction = 0.0;
  Distribution distribution = Distribution::uniform;
  double lba_span_fraction = 1.0;
  std::uint64_t seed = 1;
  std::vector<RatioRegion> ratio_profile;   // empty: incompressible data, no hint
  // 80/20 mode: hot_share of accesses go to hot_fraction of the segments.
  double hot_fraction = 0.2;
  double hot_share = 0.8;
  // Explicit hot segments; empty picks a seeded hot_fraction of the span.
  std::vector<std::uint64_t> hot_segments;
  std::size_t submitters = 1;
  std::uint64_t sample_every = 0;   // ops between report samples; 0: start and end only
  std::uint64_t tick_every = 0;     // ops between scheduler ticks (single submitter)
};

// Seeded choice of round(hot_fraction * segments) segments.
std::vector<std::uint64_t> hot_segment_set(std::uint64_t segments, double hot_fraction,
                                           std::uint64_t seed);

struct Op {
  bool write = false;
  std::uint64_t lba = 0;
};

// The op stream a spec produces for an array geometry. Deterministic.
std::vector<Op> generate_ops(const WorkloadSpec& spec, const ArrayGeometry& g);

struct OpEvent {
  std::uint64_t index = 0;
  bool write = false;
  std::uint64_t lba = 0;
  Level level = Level::r5;   // level of the target segment when issued
  std::string error;         // error class name, empty on success
};

struct SampleEvent {
  std::uint64_t op = 0;      // ops issued before the sample
  double coverage = 0.0;
  AmpCounters amp;
};

struct EventLog {
  std::vector<OpEvent> ops;
  std::vector<SampleEvent> samples;
  std::vector<std::string> run_errors;   // failures outside a single op (final drain)

  std::string to_jsonl() const;
  static EventLog from_jsonl(const std::string& text);
};

struct RunReport {
  std::uint64_t ops = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t r5_ops = 0;
  std::uint64_t r10_ops = 0;
  std::map<std::string, std::uint64_t> errors;
  AmpCounters amp;   // deltas over the run
  double wa = 0.0;
  double ra = 0.0;
  double write_ra = 0.0;
  // Backend device ops per user op (reads and writes of both paths).
  double device_ops_per_op = 0.0;
  std::vector<std::pair<std::uint64_t, double>> coverage_trace;
  // Share of ops since the previous sample that landed on R10 segments.
  std::vector<std::pair<std::uint64_t, double>> beta_trace;

  std::string to_json() const;
};

// Pure function of the log; run_workload builds its report through it.
RunReport report_from_events(const EventLog& log);

RunReport run_workload(const WorkloadSpec& spec, ElasticArray& array,
                       Scheduler* scheduler = nullptr, EventLog* log = nullptr);

struct ClassificationConfig {
  int n = 3;
  std::uint64_t segments = 1000;
  std::uint64_t ops = 20000;
  std::uint64_t seed = 7;
  std::vector<double> accuracies{-1.0, 0.5, 0.75, 1.0};   // negative: random placement
  std::vector<double> coverages{0.1, 0.2, 0.4, 0.8};
};

struct ClassificationRow {
  double accuracy = -1.0;
  double coverage = 0.0;
  std::uint64_t hot_segments = 0;
  std::uint64_t hot_r10 = 0;
  std::uint64_t cold_segments = 0;
  std::uint64_t cold_r10 = 0;
  std::uint64_t user_writes = 0;
  std::uint64_t hot_writes = 0;
  double cost_per_write = 0.0;   // device writes + write-path reads per user write
};

// Pins R10 membership so that `accuracy` of the hot segments is covered (as far
// as the coverage budget allows) and spreads the rest of the budget at random,
// then runs 80/20 writes through the journal and measures backend cost.
std::vector<ClassificationRow> classification_accuracy_experiment(const ClassificationConfig& cfg);
std::string classification_csv(const std::vector<ClassificationRow>& rows);

struct CoverageSimConfig {
  int n = 3;
  double alpha_exp = 1.8;
  double beta_util = 0.9;
  double alpha_usr = 2.0;
  std::uint64_t flash_bytes = 64ull << 20;
  std::size_t batch = 64;
  std::uint64_t seed = 1;
};

struct CoverageSimResult {
  CoverageResult model;
  bool feasible = true;            // the all-R5 fill fit on the devices
  std::uint64_t written_segments = 0;
  std::uint64_t r10_segments = 0;
  double coverage = 0.0;           // over written segments
  std::uint64_t ticks = 0;
};

// Fills the first round(beta * S) segments at alpha_usr (parity by the
// linkage), then lets the reactive scheduler promote until usage reaches
// C_u = C_flash - 8 blocks. Zero journal.
CoverageSimResult simulate_coverage(const CoverageSimConfig& cfg);

// Geometry, levels, journal and per-device counters; layout in docs/stats.md.
std::string array_stats_json(ElasticArray& array);

}  // namespace eraid
