#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "edgecache/common.hpp"

namespace edgecache {

/// Files grouped into equally sized genres. Within a genre, popularity is Zipf
/// in the file's rank; genre g owns the contiguous id block
/// [g * files_per_genre, (g + 1) * files_per_genre) and rank 1 is its first id.
struct ContentCatalog {
  std::size_t num_files = 0;
  std::size_t num_genres = 0;
  double zipf_exponent = 1.0;
  std::vector<std::uint32_t> genre_of;
  // Within-genre popularity of each file: P[genre_of[f]][f].
  std::vector<double> popularity;
  // Unit-length feature vectors, one row per file.
  Matrix features;

  std::size_t files_per_genre() const noexcept { return num_files / num_genres; }
  std::size_t feature_dim() const noexcept { return features.cols(); }
  FileId first_file_of(std::uint32_t genre) const noexcept {
    return static_cast<FileId>(genre * files_per_genre());
  }
  // P[genre][file]; zero for files outside the genre.
  double genre_popularity(std::uint32_t genre, FileId file) const {
    return genre_of[file] == genre ? popularity[file] : 0.0;
  }
};

struct CatalogParams {
  std::size_t num_files = 60;
  std::size_t num_genres = 3;
  double zipf_exponent = 1.5;
  std::size_t feature_dim = 8;
  // Spread of a file's features around its genre anchor.
  double feature_noise = 0.5;
};

ContentCatalog build_catalog(const CatalogParams& params, std::uint64_t seed);

struct UserProfile {
  UserId id = 0;
  std::vector<double> genre_preference;
  // Empirical request frequencies over the user's own history; empty until filled.
  std::vector<double> popularity;
};

std::vector<UserProfile> sample_user_profiles(std::size_t num_users, std::size_t num_genres,
                                              double alpha, std::uint64_t seed);

/// Train / validation / test boundaries over mini-slot indices. Every
/// boundary is a multiple of the placement-slot length.
struct TracePartition {
  std::size_t slot_length = 1;
  SlotRange train;
  SlotRange validation;
  SlotRange test;
};

struct RequestTrace {
  std::size_t num_files = 0;
  std::size_t days = 0;
  std::size_t mini_slots_per_day = 0;
  std::uint64_t seed = 0;
  // requests[u][t]: the single file user u requests in mini-slot t.
  std::vector<std::vector<FileId>> requests;
  // day_genre[u][d]: genre user u stays in during day d.
  std::vector<std::vector<std::uint32_t>> day_genre;
  TracePartition partition;

  std::size_t num_users() const noexcept { return requests.size(); }
  std::size_t num_mini_slots() const noexcept { return days * mini_slots_per_day; }
};

struct GenerationParams {
  std::size_t days = 48;
  std::size_t requests_per_day = 107;
  std::size_t recent_window = 7;   // L
  std::size_t batch_size = 5;      // M
  double similarity_decay = 0.5;   // b
  double mixture_weight = 0.7;     // lambda
  // Draw each batch of M follow-ups i.i.d. from the Top-M distribution;
  // false draws the Top-M set itself in random order.
  bool sample_with_replacement = true;
};

/// Recency-weighted cosine similarity of `candidate` to the ordered `recent`
/// list; the last element carries weight exp(0).
double similarity_score(const ContentCatalog& catalog, std::span<const FileId> recent,
                        FileId candidate, double decay);

struct TopMDistribution {
  std::vector<FileId> files;
  std::vector<double> probabilities;
};

/// Mixture of the similarity softmax and the genre-popularity softmax over
/// `candidates`, truncated to the M largest entries (ties by file id) and
/// renormalized.
TopMDistribution topm_distribution(const ContentCatalog& catalog, std::span<const FileId> candidates,
                                   std::span<const double> scores, std::uint32_t genre,
                                   double mixture_weight, std::size_t top_m);

RequestTrace generate_trace(const ContentCatalog& catalog, std::span<const UserProfile> users,
                            const GenerationParams& params, std::uint64_t seed);

/// Normalized request histogram of user `user` over `window`.
std::vector<double> empirical_user_popularity(const RequestTrace& trace, UserId user, SlotRange window);

/// Request histogram over `window` pooled across all users.
std::vector<double> global_popularity(const RequestTrace& trace, SlotRange window);

/// Splits the trace: the test window covers the last `test_days` days, the
/// validation window the last `validation_days` days before it, the rest is
/// training. Boundaries are rounded up to multiples of `slot_length`; the end
/// is rounded down.
TracePartition make_partition(const RequestTrace& trace, std::size_t slot_length,
                              std::size_t validation_days, std::size_t test_days);

// Columnar CSV: a "# seed=<u64>" line, then "user,mini_slot,file".
void write_trace_csv(const RequestTrace& trace, std::ostream& out);
RequestTrace read_trace_csv(std::istream& in, std::size_t mini_slots_per_day);

}  // namespace edgecache
