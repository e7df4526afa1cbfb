#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nn/model.hpp"

namespace kpfc {

struct LatencyReport {
  ArchKind arch = ArchKind::MLP;
  int64_t params = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  double fps = 0.0;  // 1000 / mean_ms
  int warmup = 0;
  int iters = 0;
};

// monotonic nanosecond source; injectable so the report arithmetic can be
// tested exactly
using ClockNs = std::function<uint64_t()>;

// Times batch-1 eval forwards on a fixed random input: `warmup` untimed
// iterations, then `iters` timed ones. Percentiles use the nearest-rank
// convention on the sorted per-iteration durations.
LatencyReport measure_latency(Model& model, int warmup = 100, int iters = 1000, uint64_t seed = 0,
                              const ClockNs& clock = {});

// aligned text table, one row per report, plus a JSON form for machines
std::string report_table(const std::vector<LatencyReport>& reports);
std::string report_json(const std::vector<LatencyReport>& reports);

}  // namespace kpfc
