#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgecache/baselines.hpp"
#include "edgecache/planner.hpp"
#include "edgecache/predictor.hpp"
#include "edgecache/request_model.hpp"

namespace edgecache {

enum class PredictorMode { kTrained, kOracle };
enum class InitialCache { kPopularity, kEmpty };

/// Full-scale sequence model settings. Kept for provenance only; the
/// simulator trains the lightweight classifier described by PredictorConfig.
struct ReferenceModel {
  std::size_t encoder_layers = 6;
  std::size_t decoder_layers = 6;
  std::size_t embedding_dim = 512;
  std::size_t feedforward_dim = 1024;
  std::size_t attention_heads = 2;
  std::size_t local_epochs = 4;
  std::size_t global_rounds = 450;
  double learning_rate = 0.18;

  bool operator==(const ReferenceModel&) const = default;
};

struct PredictorConfig {
  PredictorMode mode = PredictorMode::kOracle;
  std::size_t history_length = 10;  // N
  std::size_t hidden_units = 64;
  FLConfig fl{60, 2, 32, 0.1};
  double init_scale = 1.0;
  std::vector<double> oracle_accuracy{0.8531, 0.8167, 0.7968, 0.7771, 0.7414};
  AccuracyMode accuracy_mode = AccuracyMode::kPerFile;
};

struct TraceConfig {
  std::size_t history_days = 40;
  std::size_t test_days = 8;
  double validation_fraction = 0.1;
  std::size_t requests_per_day = 107;
  std::size_t recent_window = 7;
  std::size_t batch_size = 5;
  double similarity_decay = 0.5;
  double mixture_weight = 0.7;
  bool sample_with_replacement = true;

  std::size_t validation_days() const;
  GenerationParams generation() const;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  CatalogParams catalog;
  std::size_t num_users = 10;
  double dirichlet_alpha = 0.3;
  TraceConfig trace;
  std::size_t slot_length = 5;  // n
  PredictorConfig predictor;
  ReferenceModel reference_model;
  // Capacity is ignored here; each run takes it from cache_sizes.
  CostModel cost;
  std::vector<std::uint64_t> cache_sizes{24};
  std::vector<PolicyKind> policies{std::begin(kAllPolicies), std::end(kAllPolicies)};
  InitialCache initial_cache = InitialCache::kPopularity;

  /// Throws Error{kConfig} naming the first offending field.
  void validate() const;
  ModelArch model_arch() const;
  CostModel cost_for(std::uint64_t cache_size) const;
};

/// Desk-scale defaults (10 users, 60 files, n = 5).
RunConfig desk_config(std::size_t slot_length = 5);
/// Full-scale settings (50 users, 240 files, 160 history days).
RunConfig full_scale_config(std::size_t slot_length = 5);

nlohmann::json to_json(const RunConfig& cfg);
/// Rejects unknown keys at every level; absent keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

nlohmann::json catalog_to_json(const ContentCatalog& catalog, std::uint64_t seed);
nlohmann::json arch_to_json(const ModelArch& arch, std::uint64_t seed);
ModelArch arch_from_json(const nlohmann::json& j);

std::string_view predictor_mode_name(PredictorMode mode);
std::string_view accuracy_mode_name(AccuracyMode mode);

}  // namespace edgecache
