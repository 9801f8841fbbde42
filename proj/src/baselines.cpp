#include "edgecache/baselines.hpp"

namespace edgecache {

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kProposed:
      return "proposed";
    case PolicyKind::kCHROpt:
      return "chropt";
    case PolicyKind::kStaBC:
      return "stabc";
    case PolicyKind::kLRU:
      return "lru";
    case PolicyKind::kMRU:
      return "mru";
  }
  return "unknown";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
  for (const auto kind : kAllPolicies) {
    if (policy_name(kind) == name) return kind;
  }
  return std::nullopt;
}

CacheState chropt_placement(const DemandEstimate& demand, const CostModel& cost) {
  return CacheState{top_k_indicator(demand.demand, cost.capacity_files()), 0};
}

CacheState stabc_placement(std::span<const double> global_popularity, const CostModel& cost) {
  return CacheState{future_placement_by_popularity(global_popularity, cost), 0};
}

RecencyTracker::RecencyTracker(std::size_t num_files, std::size_t capacity, RecencyKind kind)
    : capacity_{capacity}, kind_{kind}, cache_{CacheState::empty(num_files)}, last_use_(num_files, -1) {
  if (capacity > num_files) throw Error{ErrorKind::kInvalidArgument, "tracker capacity exceeds the catalog"};
}

void RecencyTracker::seed(const CacheState& initial) {
  if (initial.num_files() != cache_.num_files() || initial.count() > capacity_) {
    throw Error{ErrorKind::kInvalidArgument, "initial cache does not fit the tracker"};
  }
  cache_.placed = initial.placed;
}

std::optional<std::int64_t> RecencyTracker::last_use(FileId f) const {
  if (last_use_.at(f) < 0) return std::nullopt;
  return last_use_[f];
}

FileId RecencyTracker::choose_victim() const {
  std::optional<FileId> victim;
  for (FileId f = 0; f < cache_.num_files(); ++f) {
    if (!cache_.placed[f]) continue;
    if (!victim) {
      victim = f;
      continue;
    }
    const bool better = kind_ == RecencyKind::kLRU ? last_use_[f] < last_use_[*victim]
                                                   : last_use_[f] > last_use_[*victim];
    if (better) victim = f;
  }
  return *victim;
}

void RecencyTracker::observe(const ObservedRequest& request) {
  const FileId f = request.file;
  if (f >= cache_.num_files()) throw Error{ErrorKind::kInvalidArgument, "request outside the catalog"};
  if (!cache_.placed[f] && capacity_ > 0) {
    if (cache_.count() >= capacity_) cache_.placed[choose_victim()] = 0;
    cache_.placed[f] = 1;
  }
  last_use_[f] = request.stamp;
}

CacheState recency_update(RecencyTracker& tracker, std::span<const ObservedRequest> previous_slot) {
  for (const auto& request : previous_slot) tracker.observe(request);
  return tracker.state();
}

}  // namespace edgecache
