#include "edgecache/predictor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

namespace edgecache {

namespace {

struct Layout {
  std::size_t w1, b1, w2, b2, end;

  explicit Layout(const ModelArch& arch) {
    w1 = 0;
    b1 = w1 + arch.hidden * arch.input_size();
    w2 = b1 + arch.hidden;
    b2 = w2 + arch.output_size() * arch.hidden;
    end = b2 + arch.output_size();
  }
};

void check_params(const ModelParams& params) {
  if (params.theta.size() != params.arch.param_count()) {
    throw Error{ErrorKind::kShapeMismatch, "parameter vector does not match the architecture"};
  }
}

void check_history(const ModelArch& arch, std::span<const FileId> history) {
  if (history.size() != arch.history) {
    throw Error{ErrorKind::kShapeMismatch, "history must have exactly " + std::to_string(arch.history) + " rows"};
  }
  for (const FileId f : history) {
    if (f >= arch.num_files) throw Error{ErrorKind::kShapeMismatch, "history file id outside the catalog"};
  }
}

// Scratch buffers for a single forward/backward pass.
struct Workspace {
  std::vector<double> hidden;
  std::vector<double> probs;
  std::vector<double> dhidden;

  explicit Workspace(const ModelArch& arch)
      : hidden(arch.hidden), probs(arch.output_size()), dhidden(arch.hidden) {}
};

// Writes softmax outputs into ws.probs and returns the summed cross-entropy
// against `target` (or 0 when target is empty).
double forward(const ModelParams& params, const Layout& layout, std::span<const FileId> history,
               std::span<const FileId> target, Workspace& ws) {
  const auto& arch = params.arch;
  const double* theta = params.theta.data();
  const std::size_t in = arch.input_size();
  const std::size_t F = arch.num_files;

  for (std::size_t j = 0; j < arch.hidden; ++j) {
    const double* w = theta + layout.w1 + j * in;
    double pre = theta[layout.b1 + j];
    for (std::size_t k = 0; k < history.size(); ++k) pre += w[k * F + history[k]];
    ws.hidden[j] = std::tanh(pre);
  }

  double loss = 0.0;
  for (std::size_t s = 0; s < arch.horizon; ++s) {
    double* logits = ws.probs.data() + s * F;
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t o = s * F + f;
      const double* w = theta + layout.w2 + o * arch.hidden;
      double z = theta[layout.b2 + o];
      for (std::size_t j = 0; j < arch.hidden; ++j) z += w[j] * ws.hidden[j];
      logits[f] = z;
    }
    const double peak = *std::max_element(logits, logits + F);
    double total = 0.0;
    for (std::size_t f = 0; f < F; ++f) total += std::exp(logits[f] - peak);
    const double log_norm = peak + std::log(total);
    if (!target.empty()) loss += log_norm - logits[target[s]];
    for (std::size_t f = 0; f < F; ++f) logits[f] = std::exp(logits[f] - log_norm);
  }
  return loss;
}

// Accumulates d(loss)/d(theta) of one sample into `grad`; expects ws from forward().
void backward(const ModelParams& params, const Layout& layout, const TrainingSample& sample, Workspace& ws,
              double* grad) {
  const auto& arch = params.arch;
  const double* theta = params.theta.data();
  const std::size_t in = arch.input_size();
  const std::size_t F = arch.num_files;
  const std::size_t H = arch.hidden;

  std::fill(ws.dhidden.begin(), ws.dhidden.end(), 0.0);
  for (std::size_t s = 0; s < arch.horizon; ++s) {
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t o = s * F + f;
      const double dz = ws.probs[o] - (sample.target[s] == f ? 1.0 : 0.0);
      grad[layout.b2 + o] += dz;
      double* gw = grad + layout.w2 + o * H;
      const double* w = theta + layout.w2 + o * H;
      for (std::size_t j = 0; j < H; ++j) {
        gw[j] += dz * ws.hidden[j];
        ws.dhidden[j] += dz * w[j];
      }
    }
  }
  for (std::size_t j = 0; j < H; ++j) {
    const double h = ws.hidden[j];
    const double dpre = ws.dhidden[j] * (1.0 - h * h);
    grad[layout.b1 + j] += dpre;
    double* gw = grad + layout.w1 + j * in;
    for (std::size_t k = 0; k < sample.history.size(); ++k) gw[k * F + sample.history[k]] += dpre;
  }
}

void check_sample(const ModelArch& arch, const TrainingSample& sample) {
  check_history(arch, sample.history);
  if (sample.target.size() != arch.horizon) throw Error{ErrorKind::kShapeMismatch, "target must have n rows"};
  for (const FileId f : sample.target) {
    if (f >= arch.num_files) throw Error{ErrorKind::kShapeMismatch, "target file id outside the catalog"};
  }
}

}  // namespace

ModelParams zero_params(const ModelArch& arch) {
  return ModelParams{arch, std::vector<double>(arch.param_count(), 0.0)};
}

ModelParams init_params(const ModelArch& arch, std::uint64_t seed, double scale) {
  ModelParams params = zero_params(arch);
  const Layout layout{arch};
  Rng rng = make_rng(seed, {stream::kModelInit});
  // The one-hot input has N active entries, so N is the effective fan-in.
  const double s1 = scale / std::sqrt(static_cast<double>(std::max<std::size_t>(arch.history, 1)));
  const double s2 = scale / std::sqrt(static_cast<double>(std::max<std::size_t>(arch.hidden, 1)));
  std::uniform_real_distribution<double> u1{-s1, s1};
  std::uniform_real_distribution<double> u2{-s2, s2};
  for (std::size_t i = layout.w1; i < layout.b1; ++i) params.theta[i] = u1(rng);
  for (std::size_t i = layout.w2; i < layout.b2; ++i) params.theta[i] = u2(rng);
  return params;
}

std::vector<TrainingSample> build_dataset(const RequestTrace& trace, UserId user, SlotRange window,
                                          std::size_t history, std::size_t horizon) {
  if (user >= trace.num_users() || window.end > trace.requests[user].size()) {
    throw Error{ErrorKind::kInvalidArgument, "dataset window lies outside the trace"};
  }
  if (window.size() < history + horizon) {
    throw Error{ErrorKind::kWindowTooShort, "window of " + std::to_string(window.size()) +
                                                " mini-slots is shorter than N + n = " +
                                                std::to_string(history + horizon)};
  }
  const auto& requests = trace.requests[user];
  std::vector<TrainingSample> samples;
  samples.reserve(window.size() - history - horizon + 1);
  for (std::size_t t = window.begin + history; t + horizon <= window.end; ++t) {
    TrainingSample sample;
    sample.history.assign(requests.begin() + static_cast<std::ptrdiff_t>(t - history),
                          requests.begin() + static_cast<std::ptrdiff_t>(t));
    sample.target.assign(requests.begin() + static_cast<std::ptrdiff_t>(t),
                         requests.begin() + static_cast<std::ptrdiff_t>(t + horizon));
    samples.push_back(std::move(sample));
  }
  return samples;
}

Matrix predict(const ModelParams& params, std::span<const FileId> history) {
  check_params(params);
  check_history(params.arch, history);
  const Layout layout{params.arch};
  Workspace ws{params.arch};
  forward(params, layout, history, {}, ws);
  Matrix out{params.arch.horizon, params.arch.num_files};
  std::copy(ws.probs.begin(), ws.probs.end(), out.values().begin());
  return out;
}

Matrix predict(const ModelParams& params, const Matrix& one_hot_history) {
  const auto& arch = params.arch;
  if (one_hot_history.rows() != arch.history || one_hot_history.cols() != arch.num_files) {
    throw Error{ErrorKind::kShapeMismatch, "history must be an N x F matrix"};
  }
  std::vector<FileId> ids;
  ids.reserve(arch.history);
  for (std::size_t r = 0; r < arch.history; ++r) {
    const auto row = one_hot_history.row(r);
    const auto hot = std::count(row.begin(), row.end(), 1.0);
    const auto cold = std::count(row.begin(), row.end(), 0.0);
    if (hot != 1 || static_cast<std::size_t>(hot + cold) != row.size()) {
      throw Error{ErrorKind::kShapeMismatch, "history row " + std::to_string(r) + " is not one-hot"};
    }
    ids.push_back(static_cast<FileId>(argmax(row)));
  }
  return predict(params, ids);
}

double loss_and_gradient(const ModelParams& params, std::span<const TrainingSample> batch,
                         std::span<double> gradient) {
  check_params(params);
  if (batch.empty()) throw Error{ErrorKind::kInvalidArgument, "empty batch"};
  const bool want_grad = !gradient.empty();
  if (want_grad && gradient.size() != params.theta.size()) {
    throw Error{ErrorKind::kShapeMismatch, "gradient buffer does not match the parameters"};
  }
  const Layout layout{params.arch};
  Workspace ws{params.arch};
  if (want_grad) std::fill(gradient.begin(), gradient.end(), 0.0);

  double loss = 0.0;
  for (const auto& sample : batch) {
    check_sample(params.arch, sample);
    loss += forward(params, layout, sample.history, sample.target, ws);
    if (want_grad) backward(params, layout, sample, ws, gradient.data());
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  if (want_grad) {
    for (double& g : gradient) g *= scale;
  }
  return loss * scale;
}

LocalUpdateResult local_update(const ModelParams& start, std::span<const TrainingSample> data,
                               const LocalTrainOptions& options, Rng& rng) {
  check_params(start);
  if (data.empty()) throw Error{ErrorKind::kInvalidArgument, "local update needs at least one sample"};
  if (options.batch_size == 0) throw Error{ErrorKind::kInvalidArgument, "batch size must be positive"};
  if (options.learning_rate < 0.0) throw Error{ErrorKind::kInvalidArgument, "learning rate must be non-negative"};
  for (const auto& sample : data) check_sample(start.arch, sample);

  LocalUpdateResult result{start, 0.0};
  auto& theta = result.params.theta;
  const Layout layout{start.arch};
  Workspace ws{start.arch};
  std::vector<double> grad(theta.size());
  std::vector<std::size_t> order(data.size());
  std::vector<std::size_t> batch;
  std::size_t batches = 0;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < order.size(); lo += options.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + options.batch_size);
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi));
      std::sort(batch.begin(), batch.end());

      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      for (const std::size_t i : batch) {
        loss += forward(result.params, layout, data[i].history, data[i].target, ws);
        backward(result.params, layout, data[i], ws, grad.data());
      }
      const double scale = 1.0 / static_cast<double>(batch.size());
      loss *= scale;
      if (!std::isfinite(loss)) {
        throw Error{ErrorKind::kNonFiniteLoss,
                    "loss diverged in epoch " + std::to_string(epoch) + "; try a smaller learning rate"};
      }
      for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= options.learning_rate * (grad[k] * scale);
      result.mean_loss += loss;
      ++batches;
    }
  }
  if (batches > 0) result.mean_loss /= static_cast<double>(batches);
  return result;
}

LocalUpdateResult local_update(const ModelParams& start, std::span<const TrainingSample> data,
                               const LocalTrainOptions& options, std::uint64_t seed) {
  Rng rng{seed};
  return local_update(start, data, options, rng);
}

std::vector<Rng> user_shuffle_streams(std::uint64_t seed, std::size_t num_users) {
  std::vector<Rng> streams;
  streams.reserve(num_users);
  for (std::size_t u = 0; u < num_users; ++u) streams.push_back(make_rng(seed, {stream::kShuffle, u}));
  return streams;
}

RoundResult fedavg_round(const ModelParams& global, std::span<const std::vector<TrainingSample>> user_data,
                         const FLConfig& config, std::span<Rng> user_rngs) {
  if (user_data.empty()) throw Error{ErrorKind::kInvalidArgument, "FedAvg round needs at least one user"};
  if (user_rngs.size() != user_data.size()) {
    throw Error{ErrorKind::kShapeMismatch, "one shuffle stream per user required"};
  }
  const LocalTrainOptions options{config.local_epochs, config.batch_size, config.learning_rate};
  RoundResult result{ModelParams{global.arch, std::vector<double>(global.theta.size(), 0.0)}, 0.0};
  for (std::size_t u = 0; u < user_data.size(); ++u) {
    LocalUpdateResult local;
    try {
      // Broadcast by copy: each user starts from the same global model.
      local = local_update(global, user_data[u], options, user_rngs[u]);
    } catch (const Error& e) {
      throw Error{e.kind(), "user " + std::to_string(u) + ": " + e.what(), static_cast<UserId>(u)};
    }
    for (std::size_t k = 0; k < local.params.theta.size(); ++k) result.params.theta[k] += local.params.theta[k];
    result.mean_loss += local.mean_loss;
  }
  const auto users = static_cast<double>(user_data.size());
  for (double& v : result.params.theta) v /= users;
  result.mean_loss /= users;
  return result;
}

ModelParams train_federated(ModelParams global, std::span<const std::vector<TrainingSample>> user_data,
                            const FLConfig& config, std::uint64_t seed, const RoundCallback& on_round) {
  if (config.rounds == 0) throw Error{ErrorKind::kInvalidArgument, "at least one global round required"};
  if (!(config.learning_rate > 0.0)) throw Error{ErrorKind::kInvalidArgument, "learning rate must be positive"};
  auto rngs = user_shuffle_streams(seed, user_data.size());
  for (std::size_t r = 0; r < config.rounds; ++r) {
    auto result = fedavg_round(global, user_data, config, rngs);
    if (on_round) on_round(r, result);
    global = std::move(result.params);
  }
  return global;
}

ModelParams train_centralized(ModelParams params, std::span<const TrainingSample> pooled, const FLConfig& config,
                              std::uint64_t seed) {
  auto rngs = user_shuffle_streams(seed, 1);
  const LocalTrainOptions options{config.rounds * config.local_epochs, config.batch_size, config.learning_rate};
  return local_update(params, pooled, options, rngs.front()).params;
}

std::vector<double> top1_accuracy(const ModelParams& params, std::span<const TrainingSample> samples) {
  check_params(params);
  const auto& arch = params.arch;
  std::vector<double> hits(arch.horizon, 0.0);
  if (samples.empty()) return hits;
  const Layout layout{arch};
  Workspace ws{arch};
  for (const auto& sample : samples) {
    check_sample(arch, sample);
    forward(params, layout, sample.history, {}, ws);
    for (std::size_t s = 0; s < arch.horizon; ++s) {
      const std::span<const double> row{ws.probs.data() + s * arch.num_files, arch.num_files};
      if (argmax(row) == sample.target[s]) hits[s] += 1.0;
    }
  }
  for (double& h : hits) h /= static_cast<double>(samples.size());
  return hits;
}

Matrix noisy_oracle_predict(std::span<const FileId> true_future, std::span<const double> accuracy,
                            std::span<const double> popularity, Rng& rng) {
  if (accuracy.size() != true_future.size()) {
    throw Error{ErrorKind::kShapeMismatch, "one accuracy per predicted position required"};
  }
  const std::size_t F = popularity.size();
  if (F == 0) throw Error{ErrorKind::kShapeMismatch, "popularity vector is empty"};
  for (const double a : accuracy) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error{ErrorKind::kInvalidArgument, "oracle accuracy must lie in [0, 1]"};
  }

  Matrix out{true_future.size(), F};
  std::uniform_real_distribution<double> coin{0.0, 1.0};
  std::vector<double> weights(F);
  for (std::size_t s = 0; s < true_future.size(); ++s) {
    const FileId truth = true_future[s];
    if (truth >= F) throw Error{ErrorKind::kShapeMismatch, "true file id outside the catalog"};
    auto row = out.row(s);
    if (F == 1) {
      row[0] = 1.0;
      continue;
    }
    FileId chosen = truth;
    if (!(coin(rng) < accuracy[s])) {
      double total = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        weights[f] = f == truth ? 0.0 : popularity[f];
        total += weights[f];
      }
      if (!(total > 0.0)) {
        for (std::size_t f = 0; f < F; ++f) weights[f] = f == truth ? 0.0 : 1.0;
      }
      std::discrete_distribution<FileId> distractor{weights.begin(), weights.end()};
      chosen = distractor(rng);
    }
    const double rest = (1.0 - kOracleConfidence) / static_cast<double>(F - 1);
    std::fill(row.begin(), row.end(), rest);
    row[chosen] = kOracleConfidence;
  }
  return out;
}

Matrix estimate_accuracy(std::span<const Matrix> predictions, std::span<const std::vector<FileId>> truth,
                         std::size_t horizon, std::size_t num_files, AccuracyMode mode) {
  if (predictions.size() != truth.size()) {
    throw Error{ErrorKind::kShapeMismatch, "predictions and truth must cover the same slots"};
  }
  if (mode == AccuracyMode::kPerfect) return Matrix{horizon, num_files, 1.0};

  Matrix correct{horizon, num_files};
  Matrix count{horizon, num_files};
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const auto& pred = predictions[k];
    if (pred.rows() != horizon || pred.cols() != num_files || truth[k].size() != horizon) {
      throw Error{ErrorKind::kShapeMismatch, "validation slot " + std::to_string(k) + " has the wrong shape"};
    }
    for (std::size_t s = 0; s < horizon; ++s) {
      const FileId actual = truth[k][s];
      count(s, actual) += 1.0;
      if (argmax(pred.row(s)) == actual) correct(s, actual) += 1.0;
    }
  }

  Matrix acc{horizon, num_files};
  for (std::size_t s = 0; s < horizon; ++s) {
    if (mode == AccuracyMode::kPerPosition) {
      double hits = 0.0, total = 0.0;
      for (std::size_t f = 0; f < num_files; ++f) {
        hits += correct(s, f);
        total += count(s, f);
      }
      const double pooled = total > 0.0 ? hits / total : 0.0;
      for (std::size_t f = 0; f < num_files; ++f) acc(s, f) = pooled;
    } else {
      for (std::size_t f = 0; f < num_files; ++f) {
        acc(s, f) = count(s, f) > 0.0 ? correct(s, f) / count(s, f) : 0.0;
      }
    }
  }
  return acc;
}

void write_params_binary(const ModelParams& params, std::ostream& out) {
  check_params(params);
  for (const double v : params.theta) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
    out.write(bytes, 8);
  }
  if (!out) throw Error{ErrorKind::kIo, "failed to write model checkpoint"};
}

ModelParams read_params_binary(const ModelArch& arch, std::istream& in) {
  ModelParams params = zero_params(arch);
  for (double& v : params.theta) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
      throw Error{ErrorKind::kIo, "checkpoint is shorter than the architecture requires"};
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error{ErrorKind::kIo, "checkpoint is longer than the architecture requires"};
  }
  for (const double v : params.theta) {
    if (!std::isfinite(v)) throw Error{ErrorKind::kIo, "checkpoint holds non-finite values"};
  }
  return params;
}

}  // namespace edgecache
