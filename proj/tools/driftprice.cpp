#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "driftprice/environments.hpp"
#include "driftprice/errors.hpp"
#include "driftprice/harness.hpp"

namespace fs = std::filesystem;
using namespace driftprice;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::string out = "results";
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "Base seed; replication r uses seed + r");
  cmd->add_option("--reps", flags.reps, "Number of replications")->check(CLI::PositiveNumber);
  cmd->add_option("--out", flags.out, "Output directory");
}

ExperimentConfig load_with_flags(const CommonFlags& flags) {
  auto cfg = load_experiment_config(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.reps) cfg.replications = *flags.reps;
  return cfg;
}

void print_finals(const ExperimentResult& result, const std::string& label) {
  for (const auto& p : result.policies) {
    const auto finals = p.final_regret();
    double ss = 0.0;
    const double m = mean_of(finals);
    for (double f : finals) ss += (f - m) * (f - m);
    const double se = finals.size() > 1 ? std::sqrt(ss / (finals.size() - 1) / finals.size()) : 0.0;
    std::printf("%s%-24s final regret %12.4f +/- %.4f\n", label.c_str(), p.name.c_str(), m, 1.96 * se);
  }
}

void write_stream(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  fn(out);
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number in list: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

std::string format_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic pricing under drift with one-point revenue feedback"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Run one experiment");
  add_common(run, run_flags);

  CommonFlags sweep_flags;
  std::string sweep_v;
  auto* sweep = app.add_subcommand("sweep", "Run a walk experiment for each variation budget");
  add_common(sweep, sweep_flags);
  sweep->add_option("--v", sweep_v, "Comma-separated budgets, e.g. 0,10,20,30,40")->required();

  CommonFlags ablation_flags;
  std::string patterns = "none,low,high";
  auto* ablation = app.add_subcommand("ablation", "Run a quadratic experiment under each drift pattern");
  add_common(ablation, ablation_flags);
  ablation->add_option("--patterns", patterns, "Comma-separated drift patterns");

  std::string panel_path, model_out;
  auto* calibrate = app.add_subcommand("calibrate", "Fit a demand model from a weekly panel CSV");
  calibrate->add_option("--panel", panel_path, "Panel CSV (item,period,price,quantity)")
      ->required()->check(CLI::ExistingFile);
  calibrate->add_option("--out", model_out, "Demand-model CSV to write")->required();

  std::string model_path, oracle_out;
  auto* oracle = app.add_subcommand("oracle", "Per-period oracle prices for a demand model");
  oracle->add_option("--model", model_path, "Demand-model CSV")->required()->check(CLI::ExistingFile);
  oracle->add_option("--out", oracle_out, "Oracle path CSV to write")->required();

  int synth_items = 54, synth_periods = 200;
  std::uint64_t synth_seed = 0;
  bool synth_noiseless = false;
  std::string synth_out, synth_truth;
  auto* synth = app.add_subcommand("synth-panel", "Generate a synthetic weekly panel CSV");
  synth->add_option("--items", synth_items, "Number of items")->check(CLI::PositiveNumber);
  synth->add_option("--periods", synth_periods, "Number of weeks")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_flag("--noiseless", synth_noiseless, "Quantities equal the true demand rate");
  synth->add_option("--out", synth_out, "Panel CSV to write")->required();
  synth->add_option("--truth", synth_truth, "Also write the ground-truth model CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (app.get_subcommands().empty()) std::cerr << app.help();
    return 1;
  }
  set_warnings_enabled(!quiet);

  try {
    if (*run) {
      const auto cfg = load_with_flags(run_flags);
      const auto result = run_experiment(cfg, fs::path(run_flags.out));
      print_finals(result, "");
    } else if (*sweep) {
      const auto base = load_with_flags(sweep_flags);
      if (base.environment.kind != EnvironmentKind::kWalk)
        throw ConfigError("sweep needs a walk environment");
      for (double v : parse_number_list(sweep_v)) {
        auto cfg = base;
        cfg.environment.v = v;
        if (!(v >= 0.0)) throw ConfigError("variation budgets must be >= 0");
        const auto dir = fs::path(sweep_flags.out) / ("v_" + format_label(v));
        const auto result = run_experiment(cfg, dir);
        print_finals(result, "V=" + format_label(v) + "  ");
      }
    } else if (*ablation) {
      const auto base = load_with_flags(ablation_flags);
      if (base.environment.kind != EnvironmentKind::kQuadratic || base.environment.b_path)
        throw ConfigError("ablation needs a quadratic environment described by a drift pattern");
      std::stringstream ss(patterns);
      std::string name;
      while (std::getline(ss, name, ',')) {
        auto cfg = base;
        const auto kind = parse_drift_pattern(name);
        const auto anchor = cfg.environment.pattern.anchor;
        cfg.environment.pattern = default_pattern_spec(kind);
        cfg.environment.pattern.anchor = anchor;
        const auto result = run_experiment(cfg, fs::path(ablation_flags.out) / name);
        print_finals(result, name + "  ");
      }
    } else if (*calibrate) {
      std::ifstream in(panel_path);
      if (!in) throw ConfigError("cannot open panel '" + panel_path + "'");
      const auto model = fit_demand(read_panel_csv(in));
      write_stream(model_out, [&](std::ostream& os) { write_model_csv(os, model); });
      std::printf("fitted %zu items over %d periods\n", model.item_count(), model.horizon());
    } else if (*oracle) {
      std::ifstream in(model_path);
      if (!in) throw ConfigError("cannot open model '" + model_path + "'");
      const auto model = read_model_csv(in);
      write_stream(oracle_out, [&](std::ostream& os) {
        os << "t,period,oracle_value";
        for (std::size_t i = 0; i < model.item_count(); ++i) os << ",price_" << i;
        os << '\n' << std::setprecision(17);
        for (int t = 1; t <= model.horizon(); ++t) {
          const auto choice = oracle_grid(model, t);
          os << t << ',' << model.periods[t - 1] << ',' << choice.value;
          for (double p : choice.prices) os << ',' << p;
          os << '\n';
        }
      });
    } else if (*synth) {
      auto rng = make_stream(synth_seed, StreamTag::kPanel);
      SyntheticPanelOptions options;
      options.noiseless = synth_noiseless;
      const auto panel = gen_synthetic_panel(synth_items, synth_periods, rng, options);
      write_stream(synth_out, [&](std::ostream& os) { write_panel_csv(os, panel.panel); });
      if (!synth_truth.empty()) {
        const auto fitted = fit_demand(panel.panel);
        DemandModel truth = fitted;
        truth.coef = panel.truth;
        write_stream(synth_truth, [&](std::ostream& os) { write_model_csv(os, truth); });
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
