#include "bench/latency.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include <json.hpp>

namespace kpfc {

namespace {
uint64_t steady_now_ns() {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  const size_t n = sorted.size();
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}
}  // namespace

LatencyReport measure_latency(Model& model, int warmup, int iters, uint64_t seed,
                              const ClockNs& clock) {
  if (iters < 1) fail(ErrorCode::InvalidArgument, "measure_latency: iters must be >= 1");
  if (warmup < 0) fail(ErrorCode::InvalidArgument, "measure_latency: warmup must be >= 0");
  const ClockNs now = clock ? clock : ClockNs(steady_now_ns);
  model.set_mode(Mode::Eval);

  const ModelHyper& h = model.hyper();
  CounterRng rng(seed, 0xbe9c4u);
  Tensor input = Tensor::uniform({1, h.t_in, h.joints, h.coords}, rng, -1.0f, 1.0f);

  for (int i = 0; i < warmup; ++i) (void)model.forward(nullptr, input);

  std::vector<double> durations_ms(static_cast<size_t>(iters));
  for (int i = 0; i < iters; ++i) {
    const uint64_t t0 = now();
    (void)model.forward(nullptr, input);
    const uint64_t t1 = now();
    durations_ms[static_cast<size_t>(i)] = static_cast<double>(t1 - t0) / 1e6;
  }

  double sum = 0.0;
  for (double d : durations_ms) sum += d;
  std::sort(durations_ms.begin(), durations_ms.end());

  LatencyReport report;
  report.arch = model.kind();
  report.params = model.param_count();
  report.mean_ms = sum / static_cast<double>(iters);
  report.p50_ms = nearest_rank(durations_ms, 0.50);
  report.p99_ms = nearest_rank(durations_ms, 0.99);
  report.fps = 1000.0 / report.mean_ms;
  report.warmup = warmup;
  report.iters = iters;
  return report;
}

std::string report_table(const std::vector<LatencyReport>& reports) {
  std::vector<LatencyReport> rows = reports;
  std::sort(rows.begin(), rows.end(),
            [](const LatencyReport& a, const LatencyReport& b) {
              return static_cast<int>(a.arch) < static_cast<int>(b.arch);
            });
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %12s %10s %10s %10s %10s\n", "Model", "Params",
                "mean ms", "p50 ms", "p99 ms", "FPS");
  out += line;
  out += std::string(68, '-') + "\n";
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-12s %12lld %10.3f %10.3f %10.3f %10.1f\n",
                  arch_name(r.arch), static_cast<long long>(r.params), r.mean_ms, r.p50_ms,
                  r.p99_ms, r.fps);
    out += line;
  }
  return out;
}

std::string report_json(const std::vector<LatencyReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports)
    arr.push_back({{"arch", arch_name(r.arch)},
                   {"params", r.params},
                   {"mean_ms", r.mean_ms},
                   {"p50_ms", r.p50_ms},
                   {"p99_ms", r.p99_ms},
                   {"fps", r.fps},
                   {"warmup", r.warmup},
                   {"iters", r.iters}});
  return arr.dump(2);
}

}  // namespace kpfc
