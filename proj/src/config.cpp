#include "edgecache/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace edgecache {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and remembers which keys were consumed so
// that leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_{j}, path_{std::move(path)} {
    if (!j_.is_object()) throw Error{ErrorKind::kConfig, path_label() + " must be a JSON object"};
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw Error{ErrorKind::kConfig, "field " + field(key) + ": " + e.what()};
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw Error{ErrorKind::kConfig, "unknown config key: " + field(key.c_str())};
    }
  }

 private:
  std::string path_label() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void read_child(ObjectReader& parent, const char* key, Fn&& fn) {
  if (const json* node = parent.child(key)) {
    ObjectReader reader{*node, parent.field(key)};
    fn(reader);
    reader.finish();
  }
}

PredictorMode parse_predictor_mode(const std::string& s) {
  if (s == "trained") return PredictorMode::kTrained;
  if (s == "oracle") return PredictorMode::kOracle;
  throw Error{ErrorKind::kConfig, "predictor.mode must be 'trained' or 'oracle', got '" + s + "'"};
}

AccuracyMode parse_accuracy_mode(const std::string& s) {
  if (s == "per_file") return AccuracyMode::kPerFile;
  if (s == "per_position") return AccuracyMode::kPerPosition;
  if (s == "perfect") return AccuracyMode::kPerfect;
  throw Error{ErrorKind::kConfig, "predictor.accuracy_mode must be per_file, per_position or perfect"};
}

InitialCache parse_initial_cache(const std::string& s) {
  if (s == "popularity") return InitialCache::kPopularity;
  if (s == "empty") return InitialCache::kEmpty;
  throw Error{ErrorKind::kConfig, "initial_cache must be 'popularity' or 'empty'"};
}

}  // namespace

std::string_view predictor_mode_name(PredictorMode mode) {
  return mode == PredictorMode::kTrained ? "trained" : "oracle";
}

std::string_view accuracy_mode_name(AccuracyMode mode) {
  switch (mode) {
    case AccuracyMode::kPerFile:
      return "per_file";
    case AccuracyMode::kPerPosition:
      return "per_position";
    case AccuracyMode::kPerfect:
      return "perfect";
  }
  return "per_file";
}

std::size_t TraceConfig::validation_days() const {
  const auto days = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(history_days)));
  return std::max<std::size_t>(days, 1);
}

GenerationParams TraceConfig::generation() const {
  GenerationParams g;
  g.days = history_days + test_days;
  g.requests_per_day = requests_per_day;
  g.recent_window = recent_window;
  g.batch_size = batch_size;
  g.similarity_decay = similarity_decay;
  g.mixture_weight = mixture_weight;
  g.sample_with_replacement = sample_with_replacement;
  return g;
}

ModelArch RunConfig::model_arch() const {
  return ModelArch{predictor.history_length, slot_length, catalog.num_files, predictor.hidden_units};
}

CostModel RunConfig::cost_for(std::uint64_t cache_size) const {
  CostModel c = cost;
  c.capacity = cache_size;
  return c;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error{ErrorKind::kConfig, msg}; };
  if (catalog.num_genres == 0 || catalog.num_files == 0 || catalog.num_files % catalog.num_genres != 0) {
    fail("catalog.num_files must be a positive multiple of catalog.num_genres");
  }
  if (catalog.feature_dim < 2) fail("catalog.feature_dim must be at least 2");
  if (!(catalog.zipf_exponent > 0.0)) fail("catalog.zipf_exponent must be positive");
  if (catalog.feature_noise < 0.0) fail("catalog.feature_noise must be non-negative");
  if (num_users == 0) fail("users.num_users must be positive");
  if (!(dirichlet_alpha > 0.0)) fail("users.dirichlet_alpha must be positive");
  if (slot_length == 0) fail("slot_length must be at least 1");
  if (trace.recent_window == 0 || trace.batch_size == 0) fail("trace.recent_window and trace.batch_size must be positive");
  if (trace.requests_per_day < trace.recent_window) fail("trace.requests_per_day must be at least trace.recent_window");
  if (catalog.num_files / catalog.num_genres < trace.recent_window + trace.batch_size) {
    fail("each genre needs at least recent_window + batch_size files");
  }
  if (!(trace.similarity_decay > 0.0)) fail("trace.similarity_decay must be positive");
  if (!(trace.mixture_weight > 0.0 && trace.mixture_weight < 1.0)) fail("trace.mixture_weight must lie in (0, 1)");
  if (trace.test_days == 0) fail("trace.test_days must be positive");
  if (!(trace.validation_fraction > 0.0 && trace.validation_fraction < 1.0)) {
    fail("trace.validation_fraction must lie in (0, 1)");
  }
  if (trace.validation_days() >= trace.history_days) fail("trace.history_days leaves no training days");
  if (trace.test_days * trace.requests_per_day < slot_length) fail("test window shorter than one placement slot");

  if (predictor.mode == PredictorMode::kTrained) {
    if (predictor.history_length == 0) fail("predictor.history_length must be positive");
    if (predictor.hidden_units == 0) fail("predictor.hidden_units must be positive");
    if (predictor.fl.rounds == 0) fail("predictor.rounds must be at least 1");
    if (predictor.fl.local_epochs == 0) fail("predictor.local_epochs must be at least 1");
    if (predictor.fl.batch_size == 0) fail("predictor.batch_size must be positive");
    if (!(predictor.fl.learning_rate > 0.0)) fail("predictor.learning_rate must be positive");
  } else {
    if (predictor.oracle_accuracy.size() < slot_length) {
      fail("predictor.oracle_accuracy needs one entry per mini-slot of a placement slot");
    }
    for (const double a : predictor.oracle_accuracy) {
      if (!(a >= 0.0 && a <= 1.0)) fail("predictor.oracle_accuracy entries must lie in [0, 1]");
    }
  }

  if (cost.benefit < 0.0 || cost.delivery_cost < 0.0 || cost.backhaul_cost < 0.0 || cost.placement_cost < 0.0) {
    fail("cost entries must be non-negative");
  }
  if (!(cost.discount > 0.0 && cost.discount < 1.0)) fail("cost.discount must lie in (0, 1)");
  if (cost.file_size == 0) fail("cost.file_size must be positive");
  const std::uint64_t full = catalog.num_files * cost.file_size;
  for (const auto size : cache_sizes) {
    if (size < cost.file_size || size > full) {
      fail("cache size " + std::to_string(size) + " outside [B, F*B] = [" + std::to_string(cost.file_size) + ", " +
           std::to_string(full) + "]");
    }
    if (size % cost.file_size != 0) fail("cache size " + std::to_string(size) + " is not a multiple of the file size");
  }
  if (policies.empty()) fail("policies must not be empty");
}

RunConfig desk_config(std::size_t slot_length) {
  RunConfig cfg;
  cfg.slot_length = slot_length;
  cfg.cost.placement_cost = slot_length == 2 ? 0.7 : 1.0;
  cfg.predictor.oracle_accuracy.resize(std::max<std::size_t>(slot_length, 1),
                                       cfg.predictor.oracle_accuracy.back());
  cfg.predictor.hidden_units = 32;
  cfg.predictor.fl = FLConfig{10, 1, 32, 0.5};
  cfg.predictor.accuracy_mode = AccuracyMode::kPerPosition;
  cfg.cache_sizes = {6, 12, 18, 24, 30, 36, 42, 48, 54, 60};
  return cfg;
}

RunConfig full_scale_config(std::size_t slot_length) {
  RunConfig cfg = desk_config(slot_length);
  cfg.catalog.num_files = 240;
  cfg.num_users = 50;
  cfg.trace.history_days = 160;
  cfg.trace.test_days = 20;
  cfg.predictor.hidden_units = 64;
  cfg.predictor.fl = FLConfig{450, 4, 32, 0.18};
  cfg.predictor.accuracy_mode = AccuracyMode::kPerFile;
  cfg.cache_sizes.clear();
  for (std::uint64_t s = 20; s <= 240; s += 20) cfg.cache_sizes.push_back(s);
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json policies = json::array();
  for (const auto p : cfg.policies) policies.push_back(std::string{policy_name(p)});
  return json{
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"catalog",
       {{"num_files", cfg.catalog.num_files},
        {"num_genres", cfg.catalog.num_genres},
        {"zipf_exponent", cfg.catalog.zipf_exponent},
        {"feature_dim", cfg.catalog.feature_dim},
        {"feature_noise", cfg.catalog.feature_noise}}},
      {"users", {{"num_users", cfg.num_users}, {"dirichlet_alpha", cfg.dirichlet_alpha}}},
      {"trace",
       {{"history_days", cfg.trace.history_days},
        {"test_days", cfg.trace.test_days},
        {"validation_fraction", cfg.trace.validation_fraction},
        {"requests_per_day", cfg.trace.requests_per_day},
        {"recent_window", cfg.trace.recent_window},
        {"batch_size", cfg.trace.batch_size},
        {"similarity_decay", cfg.trace.similarity_decay},
        {"mixture_weight", cfg.trace.mixture_weight},
        {"sample_with_replacement", cfg.trace.sample_with_replacement}}},
      {"slot_length", cfg.slot_length},
      {"predictor",
       {{"mode", std::string{predictor_mode_name(cfg.predictor.mode)}},
        {"history_length", cfg.predictor.history_length},
        {"hidden_units", cfg.predictor.hidden_units},
        {"rounds", cfg.predictor.fl.rounds},
        {"local_epochs", cfg.predictor.fl.local_epochs},
        {"batch_size", cfg.predictor.fl.batch_size},
        {"learning_rate", cfg.predictor.fl.learning_rate},
        {"init_scale", cfg.predictor.init_scale},
        {"oracle_accuracy", cfg.predictor.oracle_accuracy},
        {"accuracy_mode", std::string{accuracy_mode_name(cfg.predictor.accuracy_mode)}}}},
      {"reference_model",
       {{"encoder_layers", cfg.reference_model.encoder_layers},
        {"decoder_layers", cfg.reference_model.decoder_layers},
        {"embedding_dim", cfg.reference_model.embedding_dim},
        {"feedforward_dim", cfg.reference_model.feedforward_dim},
        {"attention_heads", cfg.reference_model.attention_heads},
        {"local_epochs", cfg.reference_model.local_epochs},
        {"global_rounds", cfg.reference_model.global_rounds},
        {"learning_rate", cfg.reference_model.learning_rate}}},
      {"cost",
       {{"benefit", cfg.cost.benefit},
        {"delivery_cost", cfg.cost.delivery_cost},
        {"backhaul_cost", cfg.cost.backhaul_cost},
        {"placement_cost", cfg.cost.placement_cost},
        {"discount", cfg.cost.discount},
        {"file_size", cfg.cost.file_size}}},
      {"cache_sizes", cfg.cache_sizes},
      {"policies", policies},
      {"initial_cache", cfg.initial_cache == InitialCache::kPopularity ? "popularity" : "empty"},
  };
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  ObjectReader root{j, ""};
  root.get("seed", cfg.seed);
  root.get("output_dir", cfg.output_dir);
  read_child(root, "catalog", [&](ObjectReader& r) {
    r.get("num_files", cfg.catalog.num_files);
    r.get("num_genres", cfg.catalog.num_genres);
    r.get("zipf_exponent", cfg.catalog.zipf_exponent);
    r.get("feature_dim", cfg.catalog.feature_dim);
    r.get("feature_noise", cfg.catalog.feature_noise);
  });
  read_child(root, "users", [&](ObjectReader& r) {
    r.get("num_users", cfg.num_users);
    r.get("dirichlet_alpha", cfg.dirichlet_alpha);
  });
  read_child(root, "trace", [&](ObjectReader& r) {
    r.get("history_days", cfg.trace.history_days);
    r.get("test_days", cfg.trace.test_days);
    r.get("validation_fraction", cfg.trace.validation_fraction);
    r.get("requests_per_day", cfg.trace.requests_per_day);
    r.get("recent_window", cfg.trace.recent_window);
    r.get("batch_size", cfg.trace.batch_size);
    r.get("similarity_decay", cfg.trace.similarity_decay);
    r.get("mixture_weight", cfg.trace.mixture_weight);
    r.get("sample_with_replacement", cfg.trace.sample_with_replacement);
  });
  root.get("slot_length", cfg.slot_length);
  read_child(root, "predictor", [&](ObjectReader& r) {
    std::string mode{predictor_mode_name(cfg.predictor.mode)};
    std::string acc_mode{accuracy_mode_name(cfg.predictor.accuracy_mode)};
    r.get("mode", mode);
    cfg.predictor.mode = parse_predictor_mode(mode);
    r.get("history_length", cfg.predictor.history_length);
    r.get("hidden_units", cfg.predictor.hidden_units);
    r.get("rounds", cfg.predictor.fl.rounds);
    r.get("local_epochs", cfg.predictor.fl.local_epochs);
    r.get("batch_size", cfg.predictor.fl.batch_size);
    r.get("learning_rate", cfg.predictor.fl.learning_rate);
    r.get("init_scale", cfg.predictor.init_scale);
    r.get("oracle_accuracy", cfg.predictor.oracle_accuracy);
    r.get("accuracy_mode", acc_mode);
    cfg.predictor.accuracy_mode = parse_accuracy_mode(acc_mode);
  });
  read_child(root, "reference_model", [&](ObjectReader& r) {
    r.get("encoder_layers", cfg.reference_model.encoder_layers);
    r.get("decoder_layers", cfg.reference_model.decoder_layers);
    r.get("embedding_dim", cfg.reference_model.embedding_dim);
    r.get("feedforward_dim", cfg.reference_model.feedforward_dim);
    r.get("attention_heads", cfg.reference_model.attention_heads);
    r.get("local_epochs", cfg.reference_model.local_epochs);
    r.get("global_rounds", cfg.reference_model.global_rounds);
    r.get("learning_rate", cfg.reference_model.learning_rate);
  });
  read_child(root, "cost", [&](ObjectReader& r) {
    r.get("benefit", cfg.cost.benefit);
    r.get("delivery_cost", cfg.cost.delivery_cost);
    r.get("backhaul_cost", cfg.cost.backhaul_cost);
    r.get("placement_cost", cfg.cost.placement_cost);
    r.get("discount", cfg.cost.discount);
    r.get("file_size", cfg.cost.file_size);
  });
  root.get("cache_sizes", cfg.cache_sizes);
  std::vector<std::string> policy_names;
  root.get("policies", policy_names);
  if (j.contains("policies")) {
    cfg.policies.clear();
    for (const auto& name : policy_names) {
      const auto kind = parse_policy(name);
      if (!kind) throw Error{ErrorKind::kConfig, "unknown policy: " + name};
      cfg.policies.push_back(*kind);
    }
  }
  std::string initial{cfg.initial_cache == InitialCache::kPopularity ? "popularity" : "empty"};
  root.get("initial_cache", initial);
  cfg.initial_cache = parse_initial_cache(initial);
  root.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in{path};
  if (!in) throw Error{ErrorKind::kConfig, "cannot open config file " + path};
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error{ErrorKind::kConfig, "config " + path + " is not valid JSON: " + e.what()};
  }
  return config_from_json(j);
}

json catalog_to_json(const ContentCatalog& catalog, std::uint64_t seed) {
  json features = json::array();
  for (std::size_t f = 0; f < catalog.num_files; ++f) {
    const auto row = catalog.features.row(f);
    features.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return json{{"seed", seed},
              {"num_files", catalog.num_files},
              {"num_genres", catalog.num_genres},
              {"zipf_exponent", catalog.zipf_exponent},
              {"feature_dim", catalog.feature_dim()},
              {"genre_of", catalog.genre_of},
              {"popularity", catalog.popularity},
              {"features", features}};
}

json arch_to_json(const ModelArch& arch, std::uint64_t seed) {
  return json{{"seed", seed},
              {"model", "tanh_mlp_multihead_softmax"},
              {"history", arch.history},
              {"horizon", arch.horizon},
              {"num_files", arch.num_files},
              {"hidden", arch.hidden},
              {"param_count", arch.param_count()},
              {"layout", "W1[hidden][history*num_files], b1[hidden], W2[horizon*num_files][hidden], b2[horizon*num_files]"},
              {"encoding", "float64 little-endian"}};
}

ModelArch arch_from_json(const json& j) {
  ModelArch arch;
  try {
    arch.history = j.at("history").get<std::size_t>();
    arch.horizon = j.at("horizon").get<std::size_t>();
    arch.num_files = j.at("num_files").get<std::size_t>();
    arch.hidden = j.at("hidden").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error{ErrorKind::kIo, std::string{"malformed model descriptor: "} + e.what()};
  }
  if (j.contains("param_count") && j["param_count"].get<std::size_t>() != arch.param_count()) {
    throw Error{ErrorKind::kIo, "model descriptor parameter count disagrees with its shape"};
  }
  return arch;
}

}  // namespace edgecache
