#include "edgecache/request_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace edgecache {

namespace {

void normalize_row(std::span<double> row) {
  double norm = 0.0;
  for (const double v : row) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : row) v /= norm;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Softmax over `values`, shifted by the maximum for stability.
std::vector<double> softmax(std::span<const double> values) {
  const double peak = *std::max_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::exp(values[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

std::size_t round_up(std::size_t value, std::size_t multiple) {
  return (value + multiple - 1) / multiple * multiple;
}

}  // namespace

ContentCatalog build_catalog(const CatalogParams& params, std::uint64_t seed) {
  if (params.num_genres == 0 || params.num_files == 0 || params.num_files % params.num_genres != 0) {
    throw Error{ErrorKind::kInvalidDimension, "num_files must be a positive multiple of num_genres"};
  }
  if (params.feature_dim < 2) {
    throw Error{ErrorKind::kInvalidDimension, "feature_dim must be at least 2"};
  }
  if (!(params.zipf_exponent > 0.0)) {
    throw Error{ErrorKind::kInvalidArgument, "zipf_exponent must be positive"};
  }
  if (params.feature_noise < 0.0) {
    throw Error{ErrorKind::kInvalidArgument, "feature_noise must be non-negative"};
  }

  ContentCatalog catalog;
  catalog.num_files = params.num_files;
  catalog.num_genres = params.num_genres;
  catalog.zipf_exponent = params.zipf_exponent;
  catalog.genre_of.resize(params.num_files);
  catalog.popularity.resize(params.num_files);

  const std::size_t per_genre = catalog.files_per_genre();
  double harmonic = 0.0;
  for (std::size_t rank = 1; rank <= per_genre; ++rank) {
    harmonic += std::pow(static_cast<double>(rank), -params.zipf_exponent);
  }
  for (std::size_t f = 0; f < params.num_files; ++f) {
    const auto rank = static_cast<double>(f % per_genre + 1);
    catalog.genre_of[f] = static_cast<std::uint32_t>(f / per_genre);
    catalog.popularity[f] = std::pow(rank, -params.zipf_exponent) / harmonic;
  }

  Rng rng = make_rng(seed, {stream::kCatalog});
  std::normal_distribution<double> normal{0.0, 1.0};
  Matrix anchors{params.num_genres, params.feature_dim};
  for (std::size_t g = 0; g < params.num_genres; ++g) {
    for (double& v : anchors.row(g)) v = normal(rng);
    normalize_row(anchors.row(g));
  }
  catalog.features = Matrix{params.num_files, params.feature_dim};
  for (std::size_t f = 0; f < params.num_files; ++f) {
    auto row = catalog.features.row(f);
    const auto anchor = anchors.row(catalog.genre_of[f]);
    for (std::size_t k = 0; k < params.feature_dim; ++k) {
      row[k] = anchor[k] + params.feature_noise * normal(rng);
    }
    normalize_row(row);
  }
  return catalog;
}

std::vector<UserProfile> sample_user_profiles(std::size_t num_users, std::size_t num_genres,
                                              double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw Error{ErrorKind::kInvalidArgument, "dirichlet alpha must be positive"};
  if (num_genres == 0) throw Error{ErrorKind::kInvalidDimension, "num_genres must be positive"};

  std::vector<UserProfile> users(num_users);
  for (std::size_t u = 0; u < num_users; ++u) {
    auto& profile = users[u];
    profile.id = static_cast<UserId>(u);
    profile.genre_preference.assign(num_genres, 0.0);
    if (num_genres == 1) {
      profile.genre_preference[0] = 1.0;
      continue;
    }
    Rng rng = make_rng(seed, {stream::kProfiles, u});
    std::gamma_distribution<double> gamma{alpha, 1.0};
    double total = 0.0;
    for (double& p : profile.genre_preference) {
      p = gamma(rng);
      total += p;
    }
    if (total > 0.0) {
      for (double& p : profile.genre_preference) p /= total;
    } else {
      // Every gamma draw underflowed (alpha tiny): the Dirichlet mass sits on a vertex.
      std::uniform_int_distribution<std::size_t> pick{0, num_genres - 1};
      profile.genre_preference[pick(rng)] = 1.0;
    }
  }
  return users;
}

double similarity_score(const ContentCatalog& catalog, std::span<const FileId> recent,
                        FileId candidate, double decay) {
  if (recent.empty()) throw Error{ErrorKind::kInvalidArgument, "similarity needs at least one recent file"};
  if (!(decay > 0.0)) throw Error{ErrorKind::kInvalidArgument, "similarity decay must be positive"};
  if (std::find(recent.begin(), recent.end(), candidate) != recent.end()) {
    throw Error{ErrorKind::kInvalidArgument, "candidate must not be among the recent files"};
  }
  const auto length = static_cast<double>(recent.size());
  const auto target = catalog.features.row(candidate);
  double score = 0.0;
  for (std::size_t i = 0; i < recent.size(); ++i) {
    // recent[i] is element l = i + 1 of the 1-based formula.
    const double age = length - static_cast<double>(i + 1);
    score += std::exp(-age / decay) * cosine(catalog.features.row(recent[i]), target);
  }
  return score;
}

TopMDistribution topm_distribution(const ContentCatalog& catalog, std::span<const FileId> candidates,
                                   std::span<const double> scores, std::uint32_t genre,
                                   double mixture_weight, std::size_t top_m) {
  if (!(mixture_weight > 0.0 && mixture_weight < 1.0)) {
    throw Error{ErrorKind::kInvalidArgument, "mixture weight must lie in (0, 1)"};
  }
  if (candidates.size() != scores.size()) {
    throw Error{ErrorKind::kShapeMismatch, "one score per candidate required"};
  }
  if (top_m == 0) throw Error{ErrorKind::kInvalidArgument, "top_m must be positive"};
  if (candidates.size() < top_m) {
    throw Error{ErrorKind::kInsufficientCandidates,
                "only " + std::to_string(candidates.size()) + " candidates for Top-" + std::to_string(top_m)};
  }

  std::vector<double> pop(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) pop[i] = catalog.genre_popularity(genre, candidates[i]);
  const auto sim_soft = softmax(scores);
  const auto pop_soft = softmax(pop);

  std::vector<double> mixed(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    mixed[i] = mixture_weight * sim_soft[i] + (1.0 - mixture_weight) * pop_soft[i];
  }

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_m), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (mixed[a] != mixed[b]) return mixed[a] > mixed[b];
                      return candidates[a] < candidates[b];
                    });

  TopMDistribution out;
  double total = 0.0;
  for (std::size_t k = 0; k < top_m; ++k) total += mixed[order[k]];
  for (std::size_t k = 0; k < top_m; ++k) {
    out.files.push_back(candidates[order[k]]);
    out.probabilities.push_back(mixed[order[k]] / total);
  }
  return out;
}

namespace {

// L distinct seed requests drawn successively, proportional to popularity.
void draw_seed_requests(const ContentCatalog& catalog, std::uint32_t genre, std::size_t count, Rng& rng,
                        std::vector<FileId>& day) {
  const FileId first = catalog.first_file_of(genre);
  const std::size_t per_genre = catalog.files_per_genre();
  std::vector<double> weights(catalog.popularity.begin() + first,
                              catalog.popularity.begin() + first + static_cast<std::ptrdiff_t>(per_genre));
  for (std::size_t k = 0; k < count; ++k) {
    std::discrete_distribution<std::size_t> pick{weights.begin(), weights.end()};
    const std::size_t idx = pick(rng);
    day.push_back(static_cast<FileId>(first + idx));
    weights[idx] = 0.0;
  }
}

}  // namespace

RequestTrace generate_trace(const ContentCatalog& catalog, std::span<const UserProfile> users,
                            const GenerationParams& params, std::uint64_t seed) {
  const std::size_t L = params.recent_window;
  const std::size_t M = params.batch_size;
  if (L == 0 || M == 0) throw Error{ErrorKind::kInvalidArgument, "recent window and batch size must be positive"};
  if (params.requests_per_day < L) {
    throw Error{ErrorKind::kInvalidArgument, "requests_per_day must be at least the recent window"};
  }
  if (catalog.files_per_genre() < L) {
    throw Error{ErrorKind::kInsufficientCandidates, "genre too small for distinct seed requests"};
  }

  RequestTrace trace;
  trace.num_files = catalog.num_files;
  trace.days = params.days;
  trace.mini_slots_per_day = params.requests_per_day;
  trace.seed = seed;
  trace.requests.resize(users.size());
  trace.day_genre.resize(users.size());

  const FileId per_genre = static_cast<FileId>(catalog.files_per_genre());
  std::vector<FileId> candidates;
  std::vector<double> scores;

  for (std::size_t u = 0; u < users.size(); ++u) {
    const auto& pref = users[u].genre_preference;
    if (pref.size() != catalog.num_genres) {
      throw Error{ErrorKind::kShapeMismatch, "genre preference size does not match the catalog"};
    }
    Rng rng = make_rng(seed, {stream::kTrace, u});
    std::discrete_distribution<std::uint32_t> pick_genre{pref.begin(), pref.end()};
    auto& out = trace.requests[u];
    out.reserve(params.days * params.requests_per_day);

    std::vector<FileId> day;
    for (std::size_t d = 0; d < params.days; ++d) {
      const std::uint32_t genre = pick_genre(rng);
      trace.day_genre[u].push_back(genre);
      day.clear();
      draw_seed_requests(catalog, genre, L, rng, day);

      const FileId first = catalog.first_file_of(genre);
      while (day.size() < params.requests_per_day) {
        const std::span<const FileId> recent{day.data() + day.size() - L, L};
        candidates.clear();
        scores.clear();
        for (FileId f = first; f < first + per_genre; ++f) {
          if (std::find(recent.begin(), recent.end(), f) != recent.end()) continue;
          candidates.push_back(f);
          scores.push_back(similarity_score(catalog, recent, f, params.similarity_decay));
        }
        const auto dist = topm_distribution(catalog, candidates, scores, genre, params.mixture_weight, M);
        const std::size_t needed = std::min(M, params.requests_per_day - day.size());
        if (params.sample_with_replacement) {
          std::discrete_distribution<std::size_t> next{dist.probabilities.begin(), dist.probabilities.end()};
          for (std::size_t k = 0; k < needed; ++k) day.push_back(dist.files[next(rng)]);
        } else {
          auto batch = dist.files;
          std::shuffle(batch.begin(), batch.end(), rng);
          day.insert(day.end(), batch.begin(), batch.begin() + static_cast<std::ptrdiff_t>(needed));
        }
      }
      out.insert(out.end(), day.begin(), day.end());
    }
  }
  trace.partition.train = SlotRange{0, trace.num_mini_slots()};
  return trace;
}

std::vector<double> empirical_user_popularity(const RequestTrace& trace, UserId user, SlotRange window) {
  if (window.empty()) throw Error{ErrorKind::kEmptyWindow, "popularity window is empty"};
  if (user >= trace.num_users() || window.end > trace.requests[user].size()) {
    throw Error{ErrorKind::kInvalidArgument, "popularity window lies outside the trace"};
  }
  std::vector<double> pop(trace.num_files, 0.0);
  for (std::size_t t = window.begin; t < window.end; ++t) pop[trace.requests[user][t]] += 1.0;
  const auto total = static_cast<double>(window.size());
  for (double& p : pop) p /= total;
  return pop;
}

std::vector<double> global_popularity(const RequestTrace& trace, SlotRange window) {
  if (window.empty() || trace.num_users() == 0) throw Error{ErrorKind::kEmptyWindow, "popularity window is empty"};
  std::vector<double> pop(trace.num_files, 0.0);
  for (const auto& requests : trace.requests) {
    if (window.end > requests.size()) {
      throw Error{ErrorKind::kInvalidArgument, "popularity window lies outside the trace"};
    }
    for (std::size_t t = window.begin; t < window.end; ++t) pop[requests[t]] += 1.0;
  }
  const auto total = static_cast<double>(window.size() * trace.num_users());
  for (double& p : pop) p /= total;
  return pop;
}

TracePartition make_partition(const RequestTrace& trace, std::size_t slot_length, std::size_t validation_days,
                              std::size_t test_days) {
  if (slot_length == 0) throw Error{ErrorKind::kInvalidArgument, "slot length must be positive"};
  if (validation_days + test_days >= trace.days) {
    throw Error{ErrorKind::kInvalidArgument, "validation and test windows leave no training days"};
  }
  const std::size_t per_day = trace.mini_slots_per_day;
  const std::size_t end = trace.num_mini_slots() / slot_length * slot_length;
  const std::size_t test_begin = round_up((trace.days - test_days) * per_day, slot_length);
  const std::size_t val_begin = round_up((trace.days - test_days - validation_days) * per_day, slot_length);
  if (test_begin >= end) throw Error{ErrorKind::kInvalidArgument, "test window holds no whole placement slot"};

  TracePartition partition;
  partition.slot_length = slot_length;
  partition.train = SlotRange{0, val_begin};
  partition.validation = SlotRange{val_begin, test_begin};
  partition.test = SlotRange{test_begin, end};
  return partition;
}

void write_trace_csv(const RequestTrace& trace, std::ostream& out) {
  out << "# seed=" << trace.seed << '\n';
  out << "user,mini_slot,file\n";
  for (std::size_t u = 0; u < trace.num_users(); ++u) {
    const auto& requests = trace.requests[u];
    for (std::size_t t = 0; t < requests.size(); ++t) out << u << ',' << t << ',' << requests[t] << '\n';
  }
}

RequestTrace read_trace_csv(std::istream& in, std::size_t mini_slots_per_day) {
  if (mini_slots_per_day == 0) throw Error{ErrorKind::kInvalidArgument, "mini_slots_per_day must be positive"};
  RequestTrace trace;
  trace.mini_slots_per_day = mini_slots_per_day;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("# seed=", 0) == 0) {
      trace.seed = std::stoull(line.substr(7));
      continue;
    }
    if (!header_seen) {
      if (line != "user,mini_slot,file") throw Error{ErrorKind::kIo, "unexpected trace header: " + line};
      header_seen = true;
      continue;
    }
    std::istringstream fields{line};
    std::size_t u = 0, t = 0, f = 0;
    char c1 = 0, c2 = 0;
    if (!(fields >> u >> c1 >> t >> c2 >> f) || c1 != ',' || c2 != ',') {
      throw Error{ErrorKind::kIo, "malformed trace row at line " + std::to_string(line_no)};
    }
    if (u >= trace.requests.size()) trace.requests.resize(u + 1);
    auto& row = trace.requests[u];
    if (t != row.size()) throw Error{ErrorKind::kIo, "trace rows must be ordered by mini-slot per user"};
    row.push_back(static_cast<FileId>(f));
    trace.num_files = std::max(trace.num_files, f + 1);
  }
  if (!header_seen) throw Error{ErrorKind::kIo, "trace file has no header"};
  const std::size_t length = trace.requests.empty() ? 0 : trace.requests.front().size();
  for (const auto& row : trace.requests) {
    if (row.size() != length) throw Error{ErrorKind::kIo, "users have traces of different lengths"};
  }
  if (length % mini_slots_per_day != 0) throw Error{ErrorKind::kIo, "trace length is not a whole number of days"};
  trace.days = length / mini_slots_per_day;
  trace.partition.train = SlotRange{0, length};
  return trace;
}

}  // namespace edgecache
