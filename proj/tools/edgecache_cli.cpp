#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edgecache/config.hpp"
#include "edgecache/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace edgecache;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> policies;
  std::vector<std::uint64_t> cache_sizes;
  std::string predictor;
  bool dump_decisions = false;
};

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg = o.config_path.empty() ? desk_config(5) : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  if (!o.policies.empty()) {
    cfg.policies.clear();
    for (const auto& name : o.policies) {
      const auto kind = parse_policy(name);
      if (!kind) throw Error{ErrorKind::kConfig, "unknown policy: " + name};
      cfg.policies.push_back(*kind);
    }
  }
  if (!o.cache_sizes.empty()) cfg.cache_sizes = o.cache_sizes;
  if (o.predictor == "trained") {
    cfg.predictor.mode = PredictorMode::kTrained;
  } else if (o.predictor == "oracle") {
    cfg.predictor.mode = PredictorMode::kOracle;
  } else if (!o.predictor.empty()) {
    throw Error{ErrorKind::kConfig, "unknown predictor: " + o.predictor};
  }
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out{path, mode};
  if (!out) throw Error{ErrorKind::kIo, "cannot write " + path.string()};
  return out;
}

fs::path prepare_output(const RunConfig& cfg) {
  const fs::path dir{cfg.output_dir};
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error{ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message()};
  open_output(dir / "config.echo.json") << to_json(cfg).dump(2) << '\n';
  return dir;
}

void cmd_generate(const RunConfig& cfg) {
  const auto dir = prepare_output(cfg);
  const Scenario scenario = build_scenario(cfg);
  open_output(dir / "catalog.json") << catalog_to_json(scenario.catalog, cfg.seed).dump(2) << '\n';
  auto trace_out = open_output(dir / "trace.csv");
  write_trace_csv(scenario.trace, trace_out);
}

void cmd_train(RunConfig cfg) {
  cfg.predictor.mode = PredictorMode::kTrained;
  const auto dir = prepare_output(cfg);
  const Scenario scenario = build_scenario(cfg);
  const TrainedPredictor trained = train_predictor(cfg, scenario);
  auto bin = open_output(dir / "model.bin", std::ios::out | std::ios::binary);
  write_params_binary(trained.model, bin);
  json meta = arch_to_json(trained.model.arch, cfg.seed);
  meta["test_top1"] = trained.test_top1;
  open_output(dir / "model.json") << meta.dump(2) << '\n';
  auto curve = open_output(dir / "train_curve.csv");
  write_train_curve_csv(trained.curve, curve);
}

void write_experiment(const fs::path& dir, const ExperimentResult& result, bool decisions) {
  auto slots = open_output(dir / "slots.csv");
  write_slots_csv(result.slots, slots);
  auto summary = open_output(dir / "summary.csv");
  write_summary_csv(result.summary, summary);
  if (!result.curve.empty()) {
    auto curve = open_output(dir / "train_curve.csv");
    write_train_curve_csv(result.curve, curve);
  }
  if (decisions) {
    auto out = open_output(dir / "decisions.csv");
    write_decisions_csv(result.decisions, out);
  }
}

void cmd_run(const RunConfig& cfg, bool decisions) {
  const auto dir = prepare_output(cfg);
  write_experiment(dir, run_experiment(cfg, RunOptions{decisions}), decisions);
}

void cmd_sweep(const RunConfig& cfg, bool decisions) {
  if (!std::is_sorted(cfg.cache_sizes.begin(), cfg.cache_sizes.end())) {
    throw Error{ErrorKind::kConfig, "cache sizes must be sorted ascending"};
  }
  cmd_run(cfg, decisions);
}

void cmd_compare(const RunConfig& cfg) {
  if (cfg.predictor.mode != PredictorMode::kTrained) {
    throw Error{ErrorKind::kConfig, "compare-fl needs the trained predictor (--predictor trained)"};
  }
  const auto dir = prepare_output(cfg);
  const FlComparison cmp = compare_fl_vs_centralized(cfg);
  const json j{{"federated_top1", cmp.federated_top1},
               {"centralized_top1", cmp.centralized_top1},
               {"ratio", cmp.centralized_top1 > 0 ? cmp.federated_top1 / cmp.centralized_top1 : 0.0},
               {"federated_per_position", cmp.federated_per_position},
               {"centralized_per_position", cmp.centralized_per_position}};
  open_output(dir / "compare_fl.json") << j.dump(2) << '\n';
  std::cout << j.dump() << '\n';
}

int report(const std::string& kind, const std::string& message, std::optional<UserId> user = std::nullopt) {
  json j{{"error", kind}, {"message", message}};
  if (user) j["user"] = *user;
  std::cerr << j.dump() << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proactive edge cache placement simulator"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--predictor", o.predictor, "trained or oracle")
        ->check(CLI::IsMember({"trained", "oracle"}));
  };
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--policy", o.policies, "comma-separated policy names")->delimiter(',');
    sub->add_option("--cache-sizes", o.cache_sizes, "comma-separated cache sizes")->delimiter(',');
    sub->add_flag("--dump-decisions", o.dump_decisions, "write decisions.csv for the proposed policy");
  };

  auto* gen = app.add_subcommand("generate", "generate catalog and request trace");
  auto* train = app.add_subcommand("train", "train the request predictor with FedAvg");
  auto* run = app.add_subcommand("run", "run the placement experiment");
  auto* sweep = app.add_subcommand("sweep", "run the experiment over ascending cache sizes");
  auto* compare = app.add_subcommand("compare-fl", "compare federated and centralized training");
  for (auto* sub : {gen, train, run, sweep, compare}) add_common(sub);
  add_run_flags(run);
  add_run_flags(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what());
  }

  try {
    const RunConfig cfg = resolve_config(o);
    if (*gen) cmd_generate(cfg);
    if (*train) cmd_train(cfg);
    if (*run) cmd_run(cfg, o.dump_decisions);
    if (*sweep) cmd_sweep(cfg, o.dump_decisions);
    if (*compare) cmd_compare(cfg);
  } catch (const Error& e) {
    return report(error_kind_name(e.kind()), e.what(), e.user());
  } catch (const std::exception& e) {
    return report("internal", e.what());
  }
  return 0;
}
