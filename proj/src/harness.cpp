#include "edgecache/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>

namespace edgecache {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_one_hot(std::span<const double> row) {
  std::size_t ones = 0;
  for (const double v : row) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      return false;
    }
  }
  return ones == 1;
}

// Start mini-slot of every placement slot lying fully inside `window` and
// preceded by at least `history` mini-slots.
std::vector<std::size_t> slot_starts(SlotRange window, std::size_t slot_length, std::size_t history) {
  std::vector<std::size_t> starts;
  for (std::size_t t0 = window.begin; t0 + slot_length <= window.end; t0 += slot_length) {
    if (t0 >= history) starts.push_back(t0);
  }
  return starts;
}

std::span<const FileId> user_slice(const RequestTrace& trace, UserId u, std::size_t begin, std::size_t length) {
  return std::span<const FileId>{trace.requests[u]}.subspan(begin, length);
}

// The user-side predictor: either the trained model applied to the user's own
// history, or the noisy oracle fed with the user's own future.
class UserPredictor {
 public:
  UserPredictor(const RunConfig& cfg, const Scenario& scenario, const ModelParams* model)
      : cfg_{cfg}, scenario_{scenario}, model_{model} {}

  Matrix predict_slot(UserId u, std::size_t t0, std::uint64_t oracle_stream) const {
    const std::size_t n = cfg_.slot_length;
    if (model_ != nullptr) {
      const std::size_t N = model_->arch.history;
      return predict(*model_, user_slice(scenario_.trace, u, t0 - N, N));
    }
    Rng rng = make_rng(cfg_.seed, {oracle_stream, u, t0});
    const std::span<const double> accuracy{cfg_.predictor.oracle_accuracy.data(), n};
    return noisy_oracle_predict(user_slice(scenario_.trace, u, t0, n), accuracy,
                                scenario_.users[u].popularity, rng);
  }

  std::size_t history() const { return model_ != nullptr ? model_->arch.history : 0; }

 private:
  const RunConfig& cfg_;
  const Scenario& scenario_;
  const ModelParams* model_;
};

std::vector<Matrix> validation_accuracy(const RunConfig& cfg, const Scenario& scenario,
                                        const UserPredictor& predictor) {
  const auto& trace = scenario.trace;
  const std::size_t n = cfg.slot_length;
  const auto starts = slot_starts(trace.partition.validation, n, predictor.history());
  std::vector<Matrix> accuracy;
  for (UserId u = 0; u < trace.num_users(); ++u) {
    std::vector<Matrix> predictions;
    std::vector<std::vector<FileId>> truth;
    for (const std::size_t t0 : starts) {
      predictions.push_back(predictor.predict_slot(u, t0, stream::kOracleValidation));
      const auto actual = user_slice(trace, u, t0, n);
      truth.emplace_back(actual.begin(), actual.end());
    }
    accuracy.push_back(
        estimate_accuracy(predictions, truth, n, trace.num_files, cfg.predictor.accuracy_mode));
  }
  return accuracy;
}

std::vector<std::vector<TrainingSample>> user_datasets(const RunConfig& cfg, const Scenario& scenario,
                                                       SlotRange targets) {
  const std::size_t N = cfg.predictor.history_length;
  const SlotRange window{targets.begin >= N ? targets.begin - N : 0, targets.end};
  std::vector<std::vector<TrainingSample>> data;
  for (UserId u = 0; u < scenario.trace.num_users(); ++u) {
    data.push_back(build_dataset(scenario.trace, u, window, N, cfg.slot_length));
  }
  return data;
}

std::vector<TrainingSample> pooled(const std::vector<std::vector<TrainingSample>>& per_user) {
  std::vector<TrainingSample> all;
  for (const auto& d : per_user) all.insert(all.end(), d.begin(), d.end());
  return all;
}

}  // namespace

Scenario build_scenario(const RunConfig& cfg) {
  cfg.validate();
  Scenario s;
  s.catalog = build_catalog(cfg.catalog, cfg.seed);
  s.users = sample_user_profiles(cfg.num_users, cfg.catalog.num_genres, cfg.dirichlet_alpha, cfg.seed);
  s.trace = generate_trace(s.catalog, s.users, cfg.trace.generation(), cfg.seed);
  s.trace.partition = make_partition(s.trace, cfg.slot_length, cfg.trace.validation_days(), cfg.trace.test_days);
  for (auto& user : s.users) {
    user.popularity = empirical_user_popularity(s.trace, user.id, s.trace.partition.train);
  }
  s.global_popularity = global_popularity(s.trace, s.trace.partition.train);
  return s;
}

EdgeServer::EdgeServer(std::size_t num_users, std::size_t num_files)
    : num_users_{num_users}, num_files_{num_files}, inbox_(num_users) {}

void EdgeServer::receive(EstimateMessage message) {
  if (message.user >= num_users_) throw Error{ErrorKind::kInvalidArgument, "message from an unknown user"};
  if (message.estimate.cols() != num_files_) throw Error{ErrorKind::kShapeMismatch, "estimate has the wrong width"};
  if (open_slot_ != message.slot) {
    if (std::any_of(inbox_.begin(), inbox_.end(), [](const auto& m) { return m.has_value(); })) {
      throw Error{ErrorKind::kInvalidArgument, "message for a new slot before the previous one was closed"};
    }
    open_slot_ = message.slot;
  }
  ++audit_.messages;
  for (std::size_t s = 0; s < message.estimate.rows(); ++s) {
    if (is_one_hot(message.estimate.row(s))) ++audit_.one_hot_rows;
  }
  inbox_[message.user] = std::move(message.estimate);
}

DemandEstimate EdgeServer::close_slot(std::int64_t slot) {
  if (slot != open_slot_) throw Error{ErrorKind::kInvalidArgument, "closing a slot that is not open"};
  std::vector<Matrix> per_user;
  per_user.reserve(num_users_);
  for (auto& m : inbox_) {
    if (!m) throw Error{ErrorKind::kInvalidArgument, "a user did not report for slot " + std::to_string(slot)};
    per_user.push_back(std::move(*m));
    m.reset();
  }
  ++audit_.slots;
  open_slot_ = -1;
  return aggregate_estimates(std::move(per_user));
}

TrainedPredictor train_predictor(const RunConfig& cfg, const Scenario& scenario) {
  const auto& part = scenario.trace.partition;
  const auto train = user_datasets(cfg, scenario, SlotRange{cfg.predictor.history_length, part.train.end});
  const auto validation = pooled(user_datasets(cfg, scenario, part.validation));
  const auto test = pooled(user_datasets(cfg, scenario, part.test));

  TrainedPredictor out;
  const ModelParams init = init_params(cfg.model_arch(), cfg.seed, cfg.predictor.init_scale);
  out.model = train_federated(init, train, cfg.predictor.fl, cfg.seed, [&](std::size_t round, const RoundResult& r) {
    out.curve.push_back(TrainCurvePoint{round, r.mean_loss, top1_accuracy(r.params, validation)});
  });
  out.test_top1 = top1_accuracy(out.model, test);
  return out;
}

ExperimentResult run_experiment(const RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const Scenario scenario = build_scenario(cfg);
  const auto& trace = scenario.trace;
  const std::size_t n = cfg.slot_length;
  const std::size_t F = trace.num_files;
  const std::size_t U = trace.num_users();

  ExperimentResult result;
  if (cfg.predictor.mode == PredictorMode::kTrained) {
    auto trained = train_predictor(cfg, scenario);
    result.curve = std::move(trained.curve);
    result.test_top1 = std::move(trained.test_top1);
    result.model = std::move(trained.model);
  }
  const UserPredictor predictor{cfg, scenario, result.model ? &*result.model : nullptr};
  const auto accuracy = validation_accuracy(cfg, scenario, predictor);

  // Steps 1-2 on the user side, step 3 on the edge server. Only the
  // aggregated demand is kept per slot.
  const auto test_starts = slot_starts(trace.partition.test, n, predictor.history());
  EdgeServer server{U, F};
  std::vector<DemandEstimate> demand;
  demand.reserve(test_starts.size());
  for (const std::size_t t0 : test_starts) {
    const auto slot = static_cast<std::int64_t>(t0 / n);
    for (UserId u = 0; u < U; ++u) {
      const Matrix probs = predictor.predict_slot(u, t0, stream::kOracleTest);
      server.receive(
          EstimateMessage{u, slot, estimate_user_requests(probs, accuracy[u], scenario.users[u].popularity)});
    }
    auto slot_demand = server.close_slot(slot);
    slot_demand.est.clear();
    demand.push_back(std::move(slot_demand));
  }
  result.audit = server.audit();

  // Served requests in stream order (mini-slot, then user).
  auto requests_of = [&](std::size_t t0, std::size_t length) {
    std::vector<ObservedRequest> out;
    out.reserve(length * U);
    for (std::size_t t = t0; t < t0 + length; ++t) {
      for (UserId u = 0; u < U; ++u) {
        out.push_back(ObservedRequest{static_cast<std::int64_t>(t * U + u), trace.requests[u][t]});
      }
    }
    return out;
  };

  for (const auto cache_size : cfg.cache_sizes) {
    const CostModel cost = cfg.cost_for(cache_size);
    const auto next_placement = future_placement_by_popularity(scenario.global_popularity, cost);
    const CacheState popular{next_placement, -1};
    const CacheState initial = cfg.initial_cache == InitialCache::kPopularity ? popular : CacheState::empty(F, -1);

    for (const auto policy : cfg.policies) {
      std::optional<RecencyTracker> tracker;
      CacheState previous = initial;
      if (policy == PolicyKind::kLRU || policy == PolicyKind::kMRU) {
        tracker.emplace(F, cost.capacity_files(),
                        policy == PolicyKind::kLRU ? RecencyKind::kLRU : RecencyKind::kMRU);
        tracker->seed(initial);
        const std::size_t warmup = test_starts.empty() ? 0 : test_starts.front();
        recency_update(*tracker, requests_of(0, warmup));
        previous = tracker->state();
      }

      std::vector<double> chrs, revenues, planned;
      for (std::size_t k = 0; k < test_starts.size(); ++k) {
        const std::size_t t0 = test_starts[k];
        const auto slot = static_cast<std::int64_t>(t0 / n);
        const auto& slot_demand = demand[k];

        CacheState placement;
        switch (policy) {
          case PolicyKind::kProposed: {
            const auto weights = compute_weights(slot_demand, previous, next_placement, cost);
            placement = greedy_placement(weights.weight, cost);
            if (options.record_decisions) {
              for (FileId f = 0; f < F; ++f) {
                result.decisions.push_back(
                    DecisionRow{cache_size, slot, f, weights.weight[f], placement.placed[f] != 0});
              }
            }
            break;
          }
          case PolicyKind::kCHROpt:
            placement = chropt_placement(slot_demand, cost);
            break;
          case PolicyKind::kStaBC:
            placement = popular;
            break;
          case PolicyKind::kLRU:
          case PolicyKind::kMRU:
            placement = tracker->state();
            break;
        }
        placement.slot = slot;

        const auto observed = requests_of(t0, n);
        std::vector<FileId> files;
        files.reserve(observed.size());
        for (const auto& r : observed) files.push_back(r.file);

        SlotReport report;
        report.slot = slot;
        report.policy = policy;
        report.slot_length = n;
        report.cache_size = cache_size;
        report.chr = cache_hit_ratio(files, placement);
        report.realized_revenue = realized_revenue(files, placement, previous, cost).total();
        report.planned_revenue = planned_revenue(slot_demand, placement, previous, next_placement, cost);
        report.placements = placements(placement, previous);
        result.slots.push_back(report);
        chrs.push_back(report.chr);
        revenues.push_back(report.realized_revenue);
        planned.push_back(report.planned_revenue);

        if (tracker) recency_update(*tracker, observed);
        previous = std::move(placement);
      }

      SummaryRow row;
      row.policy = policy;
      row.slot_length = n;
      row.cache_size = cache_size;
      std::tie(row.mean_chr, row.chr_ci95) = mean_ci95(chrs);
      std::tie(row.mean_revenue, row.revenue_ci95) = mean_ci95(revenues);
      row.mean_planned_revenue = mean_ci95(planned).first;
      row.num_slots = chrs.size();
      result.summary.push_back(row);
    }
  }
  return result;
}

std::vector<SummaryRow> sweep_cache_sizes(const RunConfig& cfg, std::span<const std::uint64_t> sizes) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    throw Error{ErrorKind::kConfig, "cache sizes must be sorted ascending"};
  }
  if (sizes.empty()) return {};
  RunConfig swept = cfg;
  swept.cache_sizes.assign(sizes.begin(), sizes.end());
  return run_experiment(swept).summary;
}

FlComparison compare_fl_vs_centralized(const RunConfig& cfg) {
  if (cfg.predictor.mode != PredictorMode::kTrained) {
    throw Error{ErrorKind::kConfig, "compare-fl needs predictor.mode = trained"};
  }
  const Scenario scenario = build_scenario(cfg);
  const auto& part = scenario.trace.partition;
  const auto train = user_datasets(cfg, scenario, SlotRange{cfg.predictor.history_length, part.train.end});
  const auto test = pooled(user_datasets(cfg, scenario, part.test));
  const ModelParams init = init_params(cfg.model_arch(), cfg.seed, cfg.predictor.init_scale);

  const auto federated = train_federated(init, train, cfg.predictor.fl, cfg.seed);
  const auto centralized = train_centralized(init, pooled(train), cfg.predictor.fl, cfg.seed);

  FlComparison out;
  out.federated_per_position = top1_accuracy(federated, test);
  out.centralized_per_position = top1_accuracy(centralized, test);
  out.federated_top1 = out.federated_per_position.front();
  out.centralized_top1 = out.centralized_per_position.front();
  return out;
}

std::pair<double, double> mean_ci95(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return {mean, 1.96 * sd / std::sqrt(static_cast<double>(values.size()))};
}

void write_slots_csv(std::span<const SlotReport> slots, std::ostream& out) {
  out << "policy,n,cache_size,slot,chr,realized_revenue,planned_revenue,placements\n";
  for (const auto& r : slots) {
    out << policy_name(r.policy) << ',' << r.slot_length << ',' << r.cache_size << ',' << r.slot << ','
        << fmt_double(r.chr) << ',' << fmt_double(r.realized_revenue) << ',' << fmt_double(r.planned_revenue) << ','
        << r.placements << '\n';
  }
}

void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out) {
  out << "policy,n,cache_size,mean_chr,chr_ci95,mean_revenue,revenue_ci95,mean_planned_revenue,num_slots\n";
  for (const auto& r : rows) {
    out << policy_name(r.policy) << ',' << r.slot_length << ',' << r.cache_size << ',' << fmt_double(r.mean_chr)
        << ',' << fmt_double(r.chr_ci95) << ',' << fmt_double(r.mean_revenue) << ',' << fmt_double(r.revenue_ci95)
        << ',' << fmt_double(r.mean_planned_revenue) << ',' << r.num_slots << '\n';
  }
}

void write_train_curve_csv(std::span<const TrainCurvePoint> curve, std::ostream& out) {
  const std::size_t positions = curve.empty() ? 0 : curve.front().validation_top1.size();
  out << "round,mean_loss";
  for (std::size_t s = 0; s < positions; ++s) out << ",val_top1_pos" << s;
  out << '\n';
  for (const auto& p : curve) {
    out << p.round << ',' << fmt_double(p.mean_loss);
    for (const double a : p.validation_top1) out << ',' << fmt_double(a);
    out << '\n';
  }
}

void write_decisions_csv(std::span<const DecisionRow> rows, std::ostream& out) {
  out << "cache_size,slot,file_id,weight,selected\n";
  for (const auto& r : rows) {
    out << r.cache_size << ',' << r.slot << ',' << r.file << ',' << fmt_double(r.weight) << ','
        << (r.selected ? 1 : 0) << '\n';
  }
}

}  // namespace edgecache
