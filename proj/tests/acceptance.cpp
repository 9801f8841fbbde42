// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "edgecache/harness.hpp"
#include "oracles.hpp"

using namespace edgecache;

namespace {

// Pinned tolerances and thresholds.
constexpr int kGreedyInstances = 2000;
constexpr int kIdentityInstances = 2000;
constexpr double kIdentityTolerance = 1e-9;
constexpr double kNormalizationTolerance = 1e-9;
constexpr int kGradientModels = 100;
constexpr double kGradientTolerance = 1e-4;
constexpr double kFedAvgTolerance = 1e-12;
constexpr std::uint64_t kSeeds = 10;
constexpr std::uint64_t kOrderingCacheSize = 24;  // 40% of the 60-file desk catalog
constexpr int kOrderingRevenueSeeds = 8;
constexpr int kOrderingChrSeeds = 6;
constexpr int kDecaySeeds = 8;
constexpr double kFlToClRatio = 0.9;
constexpr double kOneMinute = 60.0;
constexpr double kTenMinutes = 600.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Outcome greedy_optimality() {
  const auto start = Clock::now();
  Rng rng{2024};
  std::uniform_real_distribution<double> cont{-3.0, 3.0};
  int mismatches = 0;
  for (int k = 0; k < kGreedyInstances; ++k) {
    const std::size_t F = 1 + rng() % 16;
    CostModel cost;
    cost.capacity = rng() % (F + 1);
    std::vector<double> w(F);
    // Every other instance uses a coarse grid so weight ties are common.
    for (double& v : w) v = k % 2 ? cont(rng) : static_cast<double>(static_cast<int>(rng() % 9) - 4) / 2.0;
    const auto d = greedy_placement(w, cost);
    if (d.count() > cost.capacity || oracle::objective(w, d.placed) != oracle::brute_force_best(w, cost.capacity)) {
      ++mismatches;
    }
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < kOneMinute,
          fmt("%d instances, F<=16, %d mismatches vs 2^F enumeration, %.1fs", kGreedyInstances, mismatches, elapsed)};
}

Outcome revenue_identity() {
  Rng rng{7};
  std::uniform_real_distribution<double> u{0.0, 1.0};
  double worst = 0.0;
  for (int k = 0; k < kIdentityInstances; ++k) {
    const std::size_t F = 1 + rng() % 16, n = 1 + rng() % 5, U = 1 + rng() % 6;
    std::vector<Matrix> est;
    for (std::size_t i = 0; i < U; ++i) {
      Matrix m{n, F};
      for (double& v : m.values()) v = u(rng);
      est.push_back(m);
    }
    CostModel c;
    c.benefit = 5 * u(rng);
    c.delivery_cost = u(rng);
    c.backhaul_cost = 3 * u(rng);
    c.placement_cost = 2 * u(rng);
    c.discount = 0.01 + 0.98 * u(rng);
    c.capacity = F;
    CacheState d = CacheState::empty(F), prev = CacheState::empty(F);
    std::vector<std::uint8_t> next(F);
    for (std::size_t f = 0; f < F; ++f) {
      d.placed[f] = rng() & 1U;
      prev.placed[f] = rng() & 1U;
      next[f] = rng() & 1U;
    }
    const double direct = oracle::approximate_revenue_direct(est, d, prev, next, c);
    const double compact = planned_revenue(aggregate_estimates(est), d, prev, next, c);
    worst = std::max(worst, std::abs(direct - compact));
  }
  return {worst < kIdentityTolerance,
          fmt("%d instances, max |direct - (sum d*W + Z)| = %.3g", kIdentityInstances, worst)};
}

Outcome estimator_properties() {
  Rng rng{11};
  std::uniform_real_distribution<double> u{0.0, 1.0};
  int out_of_range = 0, trust_mismatch = 0, fallback_mismatch = 0;
  double worst_row = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 1 + rng() % 5, F = 1 + rng() % 20;
    Matrix probs{n, F};
    for (std::size_t s = 0; s < n; ++s) {
      double sum = 0.0;
      for (double& v : probs.row(s)) sum += (v = u(rng));
      for (double& v : probs.row(s)) v /= sum;
    }
    std::vector<double> pop(F);
    double total = 0.0;
    for (double& v : pop) total += (v = u(rng));
    for (double& v : pop) v /= total;

    Matrix any{n, F};
    for (double& v : any.values()) v = u(rng);
    const Matrix mixed = estimate_user_requests(probs, any, pop);
    for (const double v : mixed.values()) {
      if (v < 0.0 || v > 1.0) ++out_of_range;
    }
    if (estimate_user_requests(probs, Matrix{n, F, 1.0}, pop) != probs) ++trust_mismatch;
    const Matrix fallback = estimate_user_requests(probs, Matrix{n, F, 0.0}, pop);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t f = 0; f < F; ++f) {
        if (fallback(s, f) != pop[f]) ++fallback_mismatch;
      }
    }
    Matrix uniform{n, F};
    for (std::size_t s = 0; s < n; ++s) {
      const double a = u(rng);
      for (double& v : uniform.row(s)) v = a;
    }
    const Matrix est = estimate_user_requests(probs, uniform, pop);
    for (std::size_t s = 0; s < n; ++s) {
      double sum = 0.0;
      for (const double v : est.row(s)) sum += v;
      worst_row = std::max(worst_row, std::abs(sum - 1.0));
    }
  }
  const bool pass = out_of_range == 0 && trust_mismatch == 0 && fallback_mismatch == 0 &&
                    worst_row < kNormalizationTolerance;
  return {pass, fmt("out-of-range %d, a=1 mismatches %d, a=0 mismatches %d, max |row sum - 1| = %.3g", out_of_range,
                    trust_mismatch, fallback_mismatch, worst_row)};
}

Outcome gradient_check() {
  const auto start = Clock::now();
  Rng rng{99};
  double worst = 0.0;
  for (int k = 0; k < kGradientModels; ++k) {
    const ModelArch a{1 + rng() % 4, 1 + rng() % 2, 2 + rng() % 7, 1 + rng() % 6};
    const auto params = init_params(a, rng(), 2.0);
    std::vector<TrainingSample> batch(1 + rng() % 4);
    for (auto& s : batch) {
      for (std::size_t i = 0; i < a.history; ++i) s.history.push_back(static_cast<FileId>(rng() % a.num_files));
      for (std::size_t i = 0; i < a.horizon; ++i) s.target.push_back(static_cast<FileId>(rng() % a.num_files));
    }
    std::vector<double> grad(a.param_count());
    loss_and_gradient(params, batch, grad);
    worst = std::max(worst, oracle::relative_error(grad, oracle::finite_difference_gradient(params, batch)));
  }
  const double elapsed = seconds_since(start);
  return {worst < kGradientTolerance && elapsed < kOneMinute,
          fmt("%d models (F<=8, N<=4, n<=2), max relative error %.3g, %.1fs", kGradientModels, worst, elapsed)};
}

Outcome fedavg_reduction() {
  RunConfig cfg = desk_config(5);
  cfg.num_users = 3;
  cfg.trace.history_days = 6;
  cfg.trace.test_days = 1;
  const Scenario s = build_scenario(cfg);
  const SlotRange window{0, s.trace.partition.train.end};
  const auto data = build_dataset(s.trace, 0, window, 10, 5);
  const ModelArch arch{10, 5, 60, 16};
  const auto init = init_params(arch, 5);
  const FLConfig fl{3, 2, 32, 0.5};

  const std::vector<std::vector<TrainingSample>> single{data};
  const bool bitwise = train_federated(init, single, fl, 5) == train_centralized(init, data, fl, 5);

  const std::vector<std::vector<TrainingSample>> same(4, data);
  std::vector<Rng> rngs(4, Rng{31});
  const auto averaged = fedavg_round(init, same, fl, rngs).params;
  const auto local = local_update(init, data, LocalTrainOptions{fl.local_epochs, fl.batch_size, fl.learning_rate}, 31);
  double worst = 0.0;
  for (std::size_t k = 0; k < init.theta.size(); ++k) {
    worst = std::max(worst, std::abs(averaged.theta[k] - local.params.theta[k]));
  }
  return {bitwise && worst < kFedAvgTolerance,
          fmt("U=1 FedAvg vs centralized bitwise %s; identical users max deviation %.3g", bitwise ? "equal" : "DIFFERENT",
              worst)};
}

const SummaryRow& row_of(const std::vector<SummaryRow>& rows, PolicyKind p, std::uint64_t size) {
  for (const auto& r : rows) {
    if (r.policy == p && r.cache_size == size) return r;
  }
  throw Error{ErrorKind::kInvalidArgument, "missing summary row"};
}

struct SweepData {
  std::vector<ExperimentResult> per_seed;
  double seconds = 0.0;
};

SweepData desk_sweeps(AccuracyMode mode) {
  SweepData out;
  const auto start = Clock::now();
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    RunConfig cfg = desk_config(5);
    cfg.seed = seed;
    cfg.predictor.accuracy_mode = mode;
    out.per_seed.push_back(run_experiment(cfg));
  }
  out.seconds = seconds_since(start);
  return out;
}

Outcome policy_ordering(const SweepData& sweeps) {
  int revenue_ok = 0, chr_ok = 0;
  std::string margins;
  for (const auto& r : sweeps.per_seed) {
    auto rev = [&](PolicyKind p) { return row_of(r.summary, p, kOrderingCacheSize).mean_revenue; };
    auto chr = [&](PolicyKind p) { return row_of(r.summary, p, kOrderingCacheSize).mean_chr; };
    const double prop = rev(PolicyKind::kProposed), opt = rev(PolicyKind::kCHROpt), sta = rev(PolicyKind::kStaBC);
    if (prop >= opt && opt >= sta && sta > rev(PolicyKind::kLRU) && sta > rev(PolicyKind::kMRU)) ++revenue_ok;
    if (chr(PolicyKind::kCHROpt) >= chr(PolicyKind::kProposed)) ++chr_ok;
    margins += fmt(" %+.1f", prop - opt);
  }
  const bool pass = revenue_ok >= kOrderingRevenueSeeds && chr_ok >= kOrderingChrSeeds && sweeps.seconds < kTenMinutes;
  return {pass, fmt("S=%llu: revenue chain held in %d/10 seeds, CHRopt CHR >= proposed in %d/10, "
                    "proposed-CHRopt revenue margins [%s ], %.1fs",
                    static_cast<unsigned long long>(kOrderingCacheSize), revenue_ok, chr_ok, margins.c_str(),
                    sweeps.seconds)};
}

Outcome monotonicity(const SweepData& sweeps) {
  int monotone_seeds = 0, full_slots = 0, full_hits = 0;
  for (const auto& r : sweeps.per_seed) {
    double last = -1.0;
    bool monotone = true;
    for (const auto& row : r.summary) {
      if (row.policy != PolicyKind::kProposed) continue;
      if (row.mean_chr < last) monotone = false;
      last = row.mean_chr;
    }
    if (monotone) ++monotone_seeds;
    for (const auto& s : r.slots) {
      if (s.cache_size != 60) continue;
      ++full_slots;
      if (s.chr == 1.0) ++full_hits;
    }
  }
  return {monotone_seeds == static_cast<int>(kSeeds) && full_hits == full_slots && full_slots > 0,
          fmt("proposed CHR non-decreasing over S=6..60 in %d/10 seeds; CHR=1 at S=F*B in %d/%d policy-slots",
              monotone_seeds, full_hits, full_slots)};
}

Outcome accuracy_decay() {
  const auto start = Clock::now();
  int ok = 0;
  std::string margins;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    RunConfig cfg = desk_config(5);
    cfg.seed = seed;
    cfg.predictor.mode = PredictorMode::kTrained;
    const auto trained = train_predictor(cfg, build_scenario(cfg));
    const double margin = trained.test_top1.front() - trained.test_top1.back();
    if (margin > 0.0) ++ok;
    margins += fmt(" %+.4f", margin);
  }
  return {ok >= kDecaySeeds,
          fmt("top-1 position 0 > position n-1 in %d/10 seeds, margins [%s ], %.1fs", ok, margins.c_str(),
              seconds_since(start))};
}

Outcome fl_vs_cl() {
  RunConfig cfg = desk_config(5);
  cfg.predictor.mode = PredictorMode::kTrained;
  const auto c = compare_fl_vs_centralized(cfg);
  const double ratio = c.federated_top1 / c.centralized_top1;
  return {ratio >= kFlToClRatio, fmt("FL top-1 %.4f, CL top-1 %.4f, ratio %.4f", c.federated_top1,
                                     c.centralized_top1, ratio)};
}

Outcome determinism() {
  auto render = [](const RunConfig& cfg) {
    std::ostringstream out;
    write_slots_csv(run_experiment(cfg).slots, out);
    return out.str();
  };
  RunConfig oracle_cfg = desk_config(5);
  oracle_cfg.seed = 3;
  RunConfig trained_cfg = desk_config(2);
  trained_cfg.seed = 3;
  trained_cfg.predictor.mode = PredictorMode::kTrained;
  trained_cfg.predictor.fl.rounds = 2;
  trained_cfg.cache_sizes = {24};
  const std::string a = render(oracle_cfg), b = render(oracle_cfg);
  const std::string c = render(trained_cfg), d = render(trained_cfg);
  return {a == b && c == d && !a.empty(),
          fmt("oracle slots.csv %zu bytes %s; trained slots.csv %zu bytes %s", a.size(),
              a == b ? "identical" : "DIFFERENT", c.size(), c == d ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string{"exception: "} + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };

  report("greedy-optimality", greedy_optimality);
  report("revenue-identity", revenue_identity);
  report("estimator-properties", estimator_properties);
  report("gradient-check", gradient_check);
  report("fedavg-reduction", fedavg_reduction);

  SweepData sweeps;
  try {
    sweeps = desk_sweeps(desk_config(5).predictor.accuracy_mode);
  } catch (const std::exception& e) {
    std::printf("desk sweep failed: %s\n", e.what());
  }
  report("policy-ordering", [&] { return policy_ordering(sweeps); });
  report("monotonicity-sweep", [&] { return monotonicity(sweeps); });
  report("trained-accuracy-decay", accuracy_decay);
  report("fl-vs-centralized", fl_vs_cl);
  report("determinism", determinism);

  // Informational: the literal per-file accuracy estimate on the same seeds.
  try {
    const auto per_file = desk_sweeps(AccuracyMode::kPerFile);
    const auto o = policy_ordering(per_file);
    std::printf("INFO  %-28s %s\n", "ordering-with-per-file-acc", o.detail.c_str());
  } catch (const std::exception& e) {
    std::printf("INFO  per-file ordering run failed: %s\n", e.what());
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
