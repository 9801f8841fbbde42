#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "edgecache/common.hpp"
#include "edgecache/request_model.hpp"

namespace edgecache {

/// Shape of the sequence classifier: N one-hot history rows in, n softmax
/// heads over F files out, one tanh hidden layer in between.
struct ModelArch {
  std::size_t history = 10;  // N
  std::size_t horizon = 5;   // n
  std::size_t num_files = 60;
  std::size_t hidden = 64;

  std::size_t input_size() const noexcept { return history * num_files; }
  std::size_t output_size() const noexcept { return horizon * num_files; }
  std::size_t param_count() const noexcept {
    return hidden * input_size() + hidden + output_size() * hidden + output_size();
  }
  bool operator==(const ModelArch&) const = default;
};

/// Flat parameter vector laid out as [W1 | b1 | W2 | b2] with
/// W1: hidden x (N*F), W2: (n*F) x hidden, both row-major.
struct ModelParams {
  ModelArch arch;
  std::vector<double> theta;

  bool operator==(const ModelParams&) const = default;
};

ModelParams zero_params(const ModelArch& arch);
// Uniform(-s, s) with s = scale / sqrt(fan_in) per layer; biases start at zero.
ModelParams init_params(const ModelArch& arch, std::uint64_t seed, double scale = 1.0);

/// One supervised example with one-hot rows stored as file ids.
struct TrainingSample {
  std::vector<FileId> history;  // x: requests t-N .. t-1
  std::vector<FileId> target;   // y: requests t .. t+n-1
};

/// Stride-1 samples whose history and target both lie inside `window`.
std::vector<TrainingSample> build_dataset(const RequestTrace& trace, UserId user, SlotRange window,
                                          std::size_t history, std::size_t horizon);

/// n x F matrix of per-position request probabilities.
Matrix predict(const ModelParams& params, std::span<const FileId> history);
/// Same as above for an explicit N x F one-hot history.
Matrix predict(const ModelParams& params, const Matrix& one_hot_history);

/// Mean over `batch` of the summed per-position cross-entropy. When `gradient`
/// is non-empty it receives the gradient of that mean (same layout as theta).
double loss_and_gradient(const ModelParams& params, std::span<const TrainingSample> batch,
                         std::span<double> gradient);

struct LocalTrainOptions {
  std::size_t epochs = 2;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
};

struct LocalUpdateResult {
  ModelParams params;
  double mean_loss = 0.0;  // averaged over the mini-batches visited
};

/// Mini-batch SGD over `data`, reshuffled every epoch from `rng`. Indices
/// inside a mini-batch are accumulated in ascending order, so a full-batch
/// step does not depend on the shuffle.
LocalUpdateResult local_update(const ModelParams& start, std::span<const TrainingSample> data,
                               const LocalTrainOptions& options, Rng& rng);
LocalUpdateResult local_update(const ModelParams& start, std::span<const TrainingSample> data,
                               const LocalTrainOptions& options, std::uint64_t seed);

struct FLConfig {
  std::size_t rounds = 60;
  std::size_t local_epochs = 2;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
};

struct RoundResult {
  ModelParams params;
  double mean_loss = 0.0;  // mean of the users' local losses
};

/// One FedAvg round: every user starts from `global`, trains locally with its
/// own shuffle stream, and the server takes the uniform average.
RoundResult fedavg_round(const ModelParams& global, std::span<const std::vector<TrainingSample>> user_data,
                         const FLConfig& config, std::span<Rng> user_rngs);

/// Per-user shuffle streams, derived from the master seed and the user index.
std::vector<Rng> user_shuffle_streams(std::uint64_t seed, std::size_t num_users);

using RoundCallback = std::function<void(std::size_t round, const RoundResult&)>;

ModelParams train_federated(ModelParams global, std::span<const std::vector<TrainingSample>> user_data,
                            const FLConfig& config, std::uint64_t seed, const RoundCallback& on_round = {});

/// Pooled-data SGD for rounds * local_epochs epochs, shuffled with the stream
/// user 0 would get under FedAvg.
ModelParams train_centralized(ModelParams params, std::span<const TrainingSample> pooled, const FLConfig& config,
                              std::uint64_t seed);

/// Top-1 accuracy of each output position over `samples`.
std::vector<double> top1_accuracy(const ModelParams& params, std::span<const TrainingSample> samples);

/// Controlled-accuracy surrogate: position s is right with probability
/// accuracy[s]; otherwise the mass goes to a distractor drawn from
/// `popularity` with the true file excluded.
Matrix noisy_oracle_predict(std::span<const FileId> true_future, std::span<const double> accuracy,
                            std::span<const double> popularity, Rng& rng);

inline constexpr double kOracleConfidence = 0.95;

enum class AccuracyMode {
  kPerFile,      // a[s][f], literal per-file estimate
  kPerPosition,  // a[s] shared by all files, pooled over truth counts
  kPerfect,      // a == 1
};

/// Validation-based accuracy for one user: a[s][f] is the fraction of
/// validation slots whose position s truly requested f and whose prediction
/// argmax also picked f. Cells with no true request of f at s are zero.
Matrix estimate_accuracy(std::span<const Matrix> predictions, std::span<const std::vector<FileId>> truth,
                         std::size_t horizon, std::size_t num_files, AccuracyMode mode = AccuracyMode::kPerFile);

/// Per-user prediction state shipped into the estimator.
struct PredictionBundle {
  std::vector<Matrix> probs;                 // [u] n x F
  std::vector<Matrix> accuracy;              // [u] n x F
  std::vector<std::vector<double>> popularity;  // [u] F
};

// Checkpoint: raw little-endian doubles; architecture goes to a JSON sidecar.
void write_params_binary(const ModelParams& params, std::ostream& out);
ModelParams read_params_binary(const ModelArch& arch, std::istream& in);

}  // namespace edgecache
