#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgecache/planner.hpp"

namespace edgecache {

enum class PolicyKind { kProposed, kCHROpt, kStaBC, kLRU, kMRU };

inline constexpr PolicyKind kAllPolicies[] = {PolicyKind::kProposed, PolicyKind::kCHROpt, PolicyKind::kStaBC,
                                              PolicyKind::kLRU, PolicyKind::kMRU};

std::string_view policy_name(PolicyKind kind);
std::optional<PolicyKind> parse_policy(std::string_view name);

/// Top S/B files by aggregated estimated demand.
CacheState chropt_placement(const DemandEstimate& demand, const CostModel& cost);

/// Top S/B files by historical global popularity; identical for every slot.
CacheState stabc_placement(std::span<const double> global_popularity, const CostModel& cost);

/// One served request, stamped with its position in the request stream.
struct ObservedRequest {
  std::int64_t stamp = 0;  // mini-slot * num_users + user
  FileId file = 0;
};

enum class RecencyKind { kLRU, kMRU };

/// Cache contents plus last-use stamps for recency-based replacement.
class RecencyTracker {
 public:
  RecencyTracker(std::size_t num_files, std::size_t capacity, RecencyKind kind);

  // Places `initial` files without touching their stamps.
  void seed(const CacheState& initial);
  void observe(const ObservedRequest& request);

  const CacheState& state() const noexcept { return cache_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::optional<std::int64_t> last_use(FileId f) const;

 private:
  FileId choose_victim() const;

  std::size_t capacity_;
  RecencyKind kind_;
  CacheState cache_;
  std::vector<std::int64_t> last_use_;  // -1 when never requested
};

/// Feeds the requests of slot tau-1 (in stream order) through the tracker and
/// returns the cache for slot tau.
CacheState recency_update(RecencyTracker& tracker, std::span<const ObservedRequest> previous_slot);

}  // namespace edgecache
