#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "edgecache/common.hpp"
#include "edgecache/predictor.hpp"

namespace edgecache {

struct CostModel {
  double benefit = 3.0;           // beta, per delivered request
  double delivery_cost = 0.5;     // c_bs-ue, per request
  double backhaul_cost = 2.0;     // c_cl-bs, per cache miss
  double placement_cost = 1.0;    // c_plc, per newly placed file
  double discount = 0.8;          // gamma
  std::uint64_t capacity = 24;    // S, storage units
  std::uint64_t file_size = 1;    // B, storage units

  /// Number of files the cache holds; throws unless B divides S.
  std::size_t capacity_files() const;
  void validate(std::size_t num_files) const;
};

struct CacheState {
  std::vector<std::uint8_t> placed;  // d[f] in {0, 1}
  std::int64_t slot = 0;

  static CacheState empty(std::size_t num_files, std::int64_t slot = 0) {
    return CacheState{std::vector<std::uint8_t>(num_files, 0), slot};
  }
  std::size_t num_files() const noexcept { return placed.size(); }
  std::size_t count() const noexcept;
  bool contains(FileId f) const { return placed[f] != 0; }
  bool operator==(const CacheState&) const = default;
};

/// est[u] is an n x F matrix of estimated requests; demand[f] sums it over
/// users and positions.
struct DemandEstimate {
  std::vector<Matrix> est;
  std::vector<double> demand;

  std::size_t num_files() const noexcept { return demand.size(); }
  double total() const noexcept;
};

/// i_est = i_hat * a + g * (1 - a) for one user.
Matrix estimate_user_requests(const Matrix& probs, const Matrix& accuracy, std::span<const double> popularity);

DemandEstimate estimate_requests(const PredictionBundle& bundle);

/// Sums per-user estimates into a DemandEstimate.
DemandEstimate aggregate_estimates(std::vector<Matrix> per_user);

/// The S/B files with the largest popularity (ties by file id).
std::vector<std::uint8_t> future_placement_by_popularity(std::span<const double> global_popularity,
                                                         const CostModel& cost);

struct PlacementWeights {
  std::vector<double> weight;  // W_f
  double constant = 0.0;       // Z
};

PlacementWeights compute_weights(const DemandEstimate& demand, const CacheState& previous,
                                 std::span<const std::uint8_t> next, const CostModel& cost);

/// Files in descending weight order (ties by id), positive weights only,
/// until the capacity is used up.
CacheState greedy_placement(std::span<const double> weights, const CostModel& cost);

/// sum_f d_f W_f + Z.
double planned_revenue(const DemandEstimate& demand, const CacheState& placement, const CacheState& previous,
                       std::span<const std::uint8_t> next, const CostModel& cost);

struct SlotRevenue {
  double request = 0.0;    // R_req
  double placement = 0.0;  // R_plc, non-positive
  double total() const noexcept { return request + placement; }
};

/// Realized revenue of one placement slot from the requests actually issued
/// in it (any order, all users pooled).
SlotRevenue realized_revenue(std::span<const FileId> requests, const CacheState& placement,
                             const CacheState& previous, const CostModel& cost);

/// Number of files placed that were not cached in the previous slot.
std::size_t placements(const CacheState& placement, const CacheState& previous);

/// Fraction of `requests` that hit the cache.
double cache_hit_ratio(std::span<const FileId> requests, const CacheState& placement);

// Indices of the k largest scores, ties by ascending index, as a 0/1 vector.
std::vector<std::uint8_t> top_k_indicator(std::span<const double> scores, std::size_t k);

}  // namespace edgecache
