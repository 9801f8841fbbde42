#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgecache/baselines.hpp"
#include "edgecache/config.hpp"
#include "edgecache/planner.hpp"
#include "edgecache/predictor.hpp"
#include "edgecache/request_model.hpp"

namespace edgecache {

/// Everything generated from the config before any prediction happens.
struct Scenario {
  ContentCatalog catalog;
  std::vector<UserProfile> users;  // popularity filled from the training window
  RequestTrace trace;              // partitioned into train / validation / test
  std::vector<double> global_popularity;
};

Scenario build_scenario(const RunConfig& cfg);

/// What a user ships to the edge server for one placement slot: its estimated
/// requests, never its actual ones.
struct EstimateMessage {
  UserId user = 0;
  std::int64_t slot = 0;
  Matrix estimate;  // n x F
};

struct PrivacyAudit {
  std::size_t messages = 0;
  // Rows that are exact one-hot vectors, i.e. look like raw requests.
  std::size_t one_hot_rows = 0;
  std::size_t slots = 0;
};

/// Planner-side endpoint. It only ever sees EstimateMessages.
class EdgeServer {
 public:
  EdgeServer(std::size_t num_users, std::size_t num_files);

  void receive(EstimateMessage message);
  /// Aggregates the messages of `slot`; every user must have reported.
  DemandEstimate close_slot(std::int64_t slot);
  const PrivacyAudit& audit() const noexcept { return audit_; }

 private:
  std::size_t num_users_;
  std::size_t num_files_;
  std::vector<std::optional<Matrix>> inbox_;
  std::int64_t open_slot_ = -1;
  PrivacyAudit audit_;
};

struct TrainCurvePoint {
  std::size_t round = 0;
  double mean_loss = 0.0;
  std::vector<double> validation_top1;  // per output position
};

struct SlotReport {
  std::int64_t slot = 0;
  PolicyKind policy = PolicyKind::kProposed;
  std::size_t slot_length = 0;
  std::uint64_t cache_size = 0;
  double chr = 0.0;
  double realized_revenue = 0.0;
  double planned_revenue = 0.0;
  std::size_t placements = 0;
};

struct SummaryRow {
  PolicyKind policy = PolicyKind::kProposed;
  std::size_t slot_length = 0;
  std::uint64_t cache_size = 0;
  double mean_chr = 0.0;
  double chr_ci95 = 0.0;  // half-width, normal approximation over slots
  double mean_revenue = 0.0;
  double revenue_ci95 = 0.0;
  double mean_planned_revenue = 0.0;
  std::size_t num_slots = 0;
};

struct DecisionRow {
  std::uint64_t cache_size = 0;
  std::int64_t slot = 0;
  FileId file = 0;
  double weight = 0.0;
  bool selected = false;
};

struct ExperimentResult {
  std::vector<SlotReport> slots;
  std::vector<SummaryRow> summary;
  std::vector<TrainCurvePoint> curve;     // trained mode only
  std::vector<double> test_top1;          // trained mode only, per position
  std::optional<ModelParams> model;       // trained mode only
  std::vector<DecisionRow> decisions;     // proposed policy, when requested
  PrivacyAudit audit;
};

struct RunOptions {
  bool record_decisions = false;
};

/// Generates data, prepares the predictor, then runs the slot loop for every
/// (cache size, policy) pair of the config.
ExperimentResult run_experiment(const RunConfig& cfg, const RunOptions& options = {});

/// Runs the experiment over `sizes` (ascending) and returns one row per
/// (policy, size).
std::vector<SummaryRow> sweep_cache_sizes(const RunConfig& cfg, std::span<const std::uint64_t> sizes);

struct FlComparison {
  double federated_top1 = 0.0;    // position 0, held-out test window
  double centralized_top1 = 0.0;
  std::vector<double> federated_per_position;
  std::vector<double> centralized_per_position;
};

FlComparison compare_fl_vs_centralized(const RunConfig& cfg);

struct TrainedPredictor {
  ModelParams model;
  std::vector<TrainCurvePoint> curve;
  std::vector<double> test_top1;
};

/// FedAvg training on the scenario's training windows.
TrainedPredictor train_predictor(const RunConfig& cfg, const Scenario& scenario);

/// Mean and 95% half-width of `values`.
std::pair<double, double> mean_ci95(std::span<const double> values);

void write_slots_csv(std::span<const SlotReport> slots, std::ostream& out);
void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out);
void write_train_curve_csv(std::span<const TrainCurvePoint> curve, std::ostream& out);
void write_decisions_csv(std::span<const DecisionRow> rows, std::ostream& out);

}  // namespace edgecache
