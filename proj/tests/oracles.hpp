#pragma once

// Reference implementations used only by the tests. They are written
// independently of the library: dense linear algebra, brute-force enumeration
// and direct term-by-term evaluation.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "edgecache/planner.hpp"
#include "edgecache/predictor.hpp"

namespace oracle {

using edgecache::CacheState;
using edgecache::CostModel;
using edgecache::FileId;
using edgecache::Matrix;
using edgecache::ModelParams;
using edgecache::TrainingSample;

// Dense forward pass: explicit one-hot input vector, full matrix products.
inline double dense_sample_loss(const ModelParams& p, const TrainingSample& sample) {
  const auto& a = p.arch;
  const std::size_t in = a.history * a.num_files;
  const std::size_t out = a.horizon * a.num_files;
  const double* w1 = p.theta.data();
  const double* b1 = w1 + a.hidden * in;
  const double* w2 = b1 + a.hidden;
  const double* b2 = w2 + out * a.hidden;

  std::vector<double> x(in, 0.0);
  for (std::size_t r = 0; r < a.history; ++r) x[r * a.num_files + sample.history[r]] = 1.0;

  std::vector<double> h(a.hidden);
  for (std::size_t j = 0; j < a.hidden; ++j) {
    double acc = b1[j];
    for (std::size_t i = 0; i < in; ++i) acc += w1[j * in + i] * x[i];
    h[j] = std::tanh(acc);
  }
  double loss = 0.0;
  for (std::size_t s = 0; s < a.horizon; ++s) {
    std::vector<double> z(a.num_files);
    for (std::size_t f = 0; f < a.num_files; ++f) {
      const std::size_t o = s * a.num_files + f;
      double acc = b2[o];
      for (std::size_t j = 0; j < a.hidden; ++j) acc += w2[o * a.hidden + j] * h[j];
      z[f] = acc;
    }
    double denom = 0.0;
    for (const double v : z) denom += std::exp(v);
    loss += -std::log(std::exp(z[sample.target[s]]) / denom);
  }
  return loss;
}

inline double dense_loss(const ModelParams& p, std::span<const TrainingSample> batch) {
  double total = 0.0;
  for (const auto& s : batch) total += dense_sample_loss(p, s);
  return total / static_cast<double>(batch.size());
}

inline std::vector<double> finite_difference_gradient(ModelParams p, std::span<const TrainingSample> batch,
                                                      double step = 1e-5) {
  std::vector<double> g(p.theta.size());
  for (std::size_t k = 0; k < p.theta.size(); ++k) {
    const double keep = p.theta[k];
    p.theta[k] = keep + step;
    const double up = dense_loss(p, batch);
    p.theta[k] = keep - step;
    const double down = dense_loss(p, batch);
    p.theta[k] = keep;
    g[k] = (up - down) / (2.0 * step);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

// Sum of the selected weights, always accumulated in ascending file order.
inline double objective(std::span<const double> w, std::span<const std::uint8_t> d) {
  double total = 0.0;
  for (std::size_t f = 0; f < w.size(); ++f) {
    if (d[f]) total += w[f];
  }
  return total;
}

// Best objective over every subset of at most `capacity` files.
inline double brute_force_best(std::span<const double> w, std::size_t capacity) {
  const std::size_t F = w.size();
  double best = 0.0;  // the empty set
  std::vector<std::uint8_t> d(F);
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << F); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > capacity) continue;
    for (std::size_t f = 0; f < F; ++f) d[f] = (mask >> f) & 1U;
    best = std::max(best, objective(w, d));
  }
  return best;
}

// Maximum number of hits any feasible cache achieves on `demand`.
inline double brute_force_best_hits(std::span<const double> demand, std::size_t capacity) {
  const std::size_t F = demand.size();
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << F); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > capacity) continue;
    double hits = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      if ((mask >> f) & 1U) hits += demand[f];
    }
    best = std::max(best, hits);
  }
  return best;
}

// Approximate revenue evaluated term by term over (u, s, f).
inline double approximate_revenue_direct(std::span<const Matrix> est, const CacheState& d, const CacheState& prev,
                                         std::span<const std::uint8_t> next, const CostModel& c) {
  const std::size_t F = d.placed.size();
  double request_base = 0.0, hit_bonus = 0.0;
  for (const auto& m : est) {
    for (std::size_t s = 0; s < m.rows(); ++s) {
      for (std::size_t f = 0; f < F; ++f) {
        request_base += m(s, f) * (c.benefit - c.delivery_cost - c.backhaul_cost);
        hit_bonus += m(s, f) * d.placed[f] * c.backhaul_cost;
      }
    }
  }
  double placed = 0.0, kept = 0.0, future = 0.0;
  for (std::size_t f = 0; f < F; ++f) {
    placed += d.placed[f];
    kept += d.placed[f] * prev.placed[f];
    future += next[f] * d.placed[f];
  }
  return request_base + hit_bonus - c.placement_cost * placed + c.placement_cost * kept +
         c.discount * c.placement_cost * future;
}

// Realized revenue from its definition, one request at a time.
inline double realized_direct(std::span<const FileId> requests, const CacheState& d, const CacheState& prev,
                              const CostModel& c) {
  double r = 0.0;
  for (const FileId f : requests) r += c.benefit - c.delivery_cost - (1 - d.placed[f]) * c.backhaul_cost;
  for (std::size_t f = 0; f < d.placed.size(); ++f) r -= c.placement_cost * d.placed[f] * (1 - prev.placed[f]);
  return r;
}

inline std::size_t first_max(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t f = 1; f < row.size(); ++f) {
    if (row[f] > row[best]) best = f;
  }
  return best;
}

// Per-file accuracy by counting every (slot, position) pair separately.
inline Matrix brute_force_accuracy(std::span<const Matrix> predictions, std::span<const std::vector<FileId>> truth,
                                   std::size_t n, std::size_t F) {
  Matrix a{n, F};
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t f = 0; f < F; ++f) {
      std::size_t hits = 0, total = 0;
      for (std::size_t k = 0; k < truth.size(); ++k) {
        if (truth[k][s] != f) continue;
        ++total;
        if (first_max(predictions[k].row(s)) == f) ++hits;
      }
      a(s, f) = total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
    }
  }
  return a;
}

}  // namespace oracle
