#include "edgecache/planner.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace edgecache {

std::size_t CostModel::capacity_files() const {
  if (file_size == 0) throw Error{ErrorKind::kConfig, "file size must be positive"};
  if (capacity % file_size != 0) throw Error{ErrorKind::kConfig, "file size must divide the cache capacity"};
  return static_cast<std::size_t>(capacity / file_size);
}

void CostModel::validate(std::size_t num_files) const {
  if (benefit < 0.0 || delivery_cost < 0.0 || backhaul_cost < 0.0 || placement_cost < 0.0) {
    throw Error{ErrorKind::kConfig, "costs and benefit must be non-negative"};
  }
  if (!(discount > 0.0 && discount < 1.0)) throw Error{ErrorKind::kConfig, "discount must lie in (0, 1)"};
  if (capacity_files() > num_files) throw Error{ErrorKind::kConfig, "cache capacity exceeds the catalog size"};
}

std::size_t CacheState::count() const noexcept {
  return static_cast<std::size_t>(std::count(placed.begin(), placed.end(), std::uint8_t{1}));
}

double DemandEstimate::total() const noexcept { return std::accumulate(demand.begin(), demand.end(), 0.0); }

Matrix estimate_user_requests(const Matrix& probs, const Matrix& accuracy, std::span<const double> popularity) {
  if (accuracy.rows() != probs.rows() || accuracy.cols() != probs.cols() || popularity.size() != probs.cols()) {
    throw Error{ErrorKind::kShapeMismatch, "prediction, accuracy and popularity shapes disagree"};
  }
  Matrix est{probs.rows(), probs.cols()};
  for (std::size_t s = 0; s < probs.rows(); ++s) {
    for (std::size_t f = 0; f < probs.cols(); ++f) {
      const double a = accuracy(s, f);
      est(s, f) = probs(s, f) * a + popularity[f] * (1.0 - a);
    }
  }
  return est;
}

DemandEstimate aggregate_estimates(std::vector<Matrix> per_user) {
  DemandEstimate out;
  const std::size_t F = per_user.empty() ? 0 : per_user.front().cols();
  out.demand.assign(F, 0.0);
  for (const auto& est : per_user) {
    if (est.cols() != F) throw Error{ErrorKind::kShapeMismatch, "user estimates disagree on the catalog size"};
    for (std::size_t s = 0; s < est.rows(); ++s) {
      for (std::size_t f = 0; f < F; ++f) out.demand[f] += est(s, f);
    }
  }
  out.est = std::move(per_user);
  return out;
}

DemandEstimate estimate_requests(const PredictionBundle& bundle) {
  const std::size_t users = bundle.probs.size();
  if (bundle.accuracy.size() != users || bundle.popularity.size() != users) {
    throw Error{ErrorKind::kShapeMismatch, "prediction bundle covers different user sets"};
  }
  std::vector<Matrix> per_user;
  per_user.reserve(users);
  for (std::size_t u = 0; u < users; ++u) {
    per_user.push_back(estimate_user_requests(bundle.probs[u], bundle.accuracy[u], bundle.popularity[u]));
  }
  return aggregate_estimates(std::move(per_user));
}

std::vector<std::uint8_t> top_k_indicator(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::uint8_t> chosen(scores.size(), 0);
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) chosen[order[i]] = 1;
  return chosen;
}

std::vector<std::uint8_t> future_placement_by_popularity(std::span<const double> global_popularity,
                                                         const CostModel& cost) {
  return top_k_indicator(global_popularity, cost.capacity_files());
}

PlacementWeights compute_weights(const DemandEstimate& demand, const CacheState& previous,
                                 std::span<const std::uint8_t> next, const CostModel& cost) {
  const std::size_t F = demand.num_files();
  if (previous.num_files() != F || next.size() != F) {
    throw Error{ErrorKind::kShapeMismatch, "placement vectors do not match the catalog size"};
  }
  PlacementWeights out;
  out.weight.resize(F);
  for (std::size_t f = 0; f < F; ++f) {
    out.weight[f] = demand.demand[f] * cost.backhaul_cost - cost.placement_cost +
                    cost.placement_cost * previous.placed[f] + cost.discount * cost.placement_cost * next[f];
  }
  out.constant = demand.total() * (cost.benefit - cost.delivery_cost - cost.backhaul_cost);
  return out;
}

CacheState greedy_placement(std::span<const double> weights, const CostModel& cost) {
  const std::size_t capacity = cost.capacity_files();
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });

  CacheState state = CacheState::empty(weights.size());
  std::size_t used = 0;
  for (const std::size_t f : order) {
    if (used == capacity || !(weights[f] > 0.0)) break;
    state.placed[f] = 1;
    ++used;
  }
  return state;
}

double planned_revenue(const DemandEstimate& demand, const CacheState& placement, const CacheState& previous,
                       std::span<const std::uint8_t> next, const CostModel& cost) {
  const auto weights = compute_weights(demand, previous, next, cost);
  if (placement.num_files() != weights.weight.size()) {
    throw Error{ErrorKind::kShapeMismatch, "placement does not match the catalog size"};
  }
  double total = weights.constant;
  for (std::size_t f = 0; f < weights.weight.size(); ++f) {
    if (placement.placed[f]) total += weights.weight[f];
  }
  return total;
}

std::size_t placements(const CacheState& placement, const CacheState& previous) {
  if (placement.num_files() != previous.num_files()) {
    throw Error{ErrorKind::kShapeMismatch, "placement vectors do not match"};
  }
  std::size_t added = 0;
  for (std::size_t f = 0; f < placement.num_files(); ++f) {
    if (placement.placed[f] && !previous.placed[f]) ++added;
  }
  return added;
}

SlotRevenue realized_revenue(std::span<const FileId> requests, const CacheState& placement,
                             const CacheState& previous, const CostModel& cost) {
  SlotRevenue out;
  for (const FileId f : requests) {
    if (f >= placement.num_files()) throw Error{ErrorKind::kShapeMismatch, "request outside the catalog"};
    out.request += cost.benefit - cost.delivery_cost - (placement.contains(f) ? 0.0 : cost.backhaul_cost);
  }
  out.placement = -cost.placement_cost * static_cast<double>(placements(placement, previous));
  return out;
}

double cache_hit_ratio(std::span<const FileId> requests, const CacheState& placement) {
  if (requests.empty()) return 0.0;
  std::size_t hits = 0;
  for (const FileId f : requests) {
    if (f >= placement.num_files()) throw Error{ErrorKind::kShapeMismatch, "request outside the catalog"};
    if (placement.contains(f)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(requests.size());
}

}  // namespace edgecache
