#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "icguard/config.hpp"
#include "icguard/errors.hpp"
#include "icguard/sim.hpp"

namespace {

using icguard::ModelBundle;
using icguard::ScenarioConfig;
using icguard::Vec4;

nlohmann::json vec4_json(const Vec4& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) a.push_back(v[i]);
  return a;
}

std::string fmt_vec4(const Vec4& v) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < 4; ++i) os << (i ? ", " : "") << v[i];
  os << "]";
  return os.str();
}

void warn_gain(const ModelBundle& bundle) {
  if (!bundle.gain_check.pass) {
    std::cerr << "warning: switching gain is below the validated sufficient "
                 "level (margins "
              << fmt_vec4(bundle.gain_check.margin)
              << "); sliding guarantees are void\n";
  }
}

int do_check_model(const std::string& config_path, bool as_json) {
  const ScenarioConfig cfg = icguard::load_config(config_path);
  const ModelBundle bundle = icguard::validate_and_build(cfg);

  const Eigen::Vector2cd hidden_ev = bundle.canonical.A11.eigenvalues();

  if (as_json) {
    nlohmann::json j;
    j["ok"] = true;
    nlohmann::json ev = nlohmann::json::array();
    for (int i = 0; i < 2; ++i) {
      ev.push_back({{"re", hidden_ev(i).real()}, {"im", hidden_ev(i).imag()}});
    }
    j["hidden_eigenvalues"] = ev;
    j["has_inert_blend"] = bundle.canonical.has_inert_blend;
    nlohmann::json zeros = nlohmann::json::array();
    for (const auto& z : bundle.zeros.zeros) {
      zeros.push_back({{"re", z.value.real()},
                       {"im", z.value.imag()},
                       {"structural", z.structural}});
    }
    j["invariant_zeros"] = zeros;
    nlohmann::json obs = nlohmann::json::array();
    for (const auto& z : bundle.zeros.observable_zeros) {
      obs.push_back({{"re", z.real()}, {"im", z.imag()}});
    }
    j["observable_zeros"] = obs;
    nlohmann::json gdir = nlohmann::json::array();
    for (int i = 0; i < 4; ++i) gdir.push_back(bundle.matching.matched_direction(i));
    j["matched_direction"] = gdir;
    j["matching_sigma_min"] = bundle.matching.sigma_min;
    j["gain_check"] = {{"pass", bundle.gain_check.pass},
                       {"rhs", vec4_json(bundle.gain_check.rhs)},
                       {"margin", vec4_json(bundle.gain_check.margin)}};
    // Unbounded hidden-envelope entries serialize as null.
    j["e1_tilde"] = {bundle.limits.e1_tilde(0), bundle.limits.e1_tilde(1)};
    j["u_bar"] = vec4_json(bundle.limits.u_bar);
    j["t_star"] = vec4_json(bundle.limits.t_star);
    j["settled_rate_upper"] = vec4_json(bundle.bounds.rate_upper_limit());
    j["settled_rate_lower"] = vec4_json(bundle.bounds.rate_lower_limit_raw());
    j["eoi_thresholds"] = vec4_json(bundle.eoi_thresholds);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "model: OK\n";
    std::cout << "  hidden eigenvalues: ";
    for (int i = 0; i < 2; ++i) {
      std::cout << (i ? ", " : "") << hidden_ev(i).real();
      if (hidden_ev(i).imag() != 0.0) {
        std::cout << (hidden_ev(i).imag() > 0 ? "+" : "")
                  << hidden_ev(i).imag() << "i";
      }
    }
    std::cout << (bundle.canonical.has_inert_blend
                      ? "  (zero mode verified inert)\n"
                      : "\n");
    std::cout << "  invariant zeros:";
    if (bundle.zeros.zeros.empty()) {
      std::cout << " none";
    }
    for (const auto& z : bundle.zeros.zeros) {
      std::cout << " " << z.value.real();
      if (z.value.imag() != 0.0) {
        std::cout << (z.value.imag() > 0 ? "+" : "") << z.value.imag() << "i";
      }
      std::cout << (z.structural ? " (structural)" : " (input-coupled)");
    }
    std::cout << "\n  observable-subsystem zeros:";
    if (bundle.zeros.observable_zeros.empty()) {
      std::cout << " none";
    }
    for (const auto& z : bundle.zeros.observable_zeros) {
      std::cout << " " << z.real();
      if (z.imag() != 0.0) std::cout << (z.imag() > 0 ? "+" : "") << z.imag() << "i";
    }
    std::cout << "\n  matched direction: [";
    for (int i = 0; i < 4; ++i) {
      std::cout << (i ? ", " : "") << bundle.matching.matched_direction(i);
    }
    std::cout << "]  (sigma_min " << bundle.matching.sigma_min << ")\n";
    std::cout << "  switching gain margins: "
              << fmt_vec4(bundle.gain_check.margin)
              << (bundle.gain_check.pass ? "  PASS" : "  WARN") << "\n";
    std::cout << "  settled rate band: upper "
              << fmt_vec4(bundle.bounds.rate_upper_limit()) << " lower "
              << fmt_vec4(bundle.bounds.rate_lower_limit_raw()) << "\n";
    std::cout << "  re-convergence horizon t*: " << fmt_vec4(bundle.limits.t_star)
              << "\n";
    std::cout << "  EOI thresholds: " << fmt_vec4(bundle.eoi_thresholds) << "\n";
  }
  warn_gain(bundle);
  return 0;
}

int do_run(const std::string& config_path, bool seed_set, std::uint64_t seed,
           const std::string& out_dir) {
  const ScenarioConfig cfg = icguard::load_config(config_path);
  const ModelBundle bundle = icguard::validate_and_build(cfg);
  warn_gain(bundle);
  const std::uint64_t use_seed = seed_set ? seed : cfg.noise.seed;
  const icguard::RunResult result = icguard::run_scenario(cfg, bundle, use_seed);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    if (cfg.output.csv) {
      icguard::export_csv(result.rows, (dir / "run.csv").string());
    }
    if (cfg.output.metrics) {
      std::ofstream mf(dir / "metrics.json");
      if (!mf) {
        throw icguard::SimulationError("cannot write metrics file");
      }
      mf << icguard::metrics_to_json(result.metrics);
    }
  }
  std::cout << icguard::metrics_to_json(result.metrics);
  return 0;
}

int do_montecarlo(const std::string& config_path, int runs, bool base_set,
                  std::uint64_t seed_base, const std::string& out_dir) {
  const ScenarioConfig cfg = icguard::load_config(config_path);
  const ModelBundle bundle = icguard::validate_and_build(cfg);
  warn_gain(bundle);
  const std::uint64_t base = base_set ? seed_base : cfg.noise.seed;
  const icguard::MonteCarloSummary summary =
      icguard::monte_carlo(cfg, bundle, runs, base);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream sf(std::filesystem::path(out_dir) / "summary.json");
    if (!sf) {
      throw icguard::SimulationError("cannot write summary file");
    }
    sf << icguard::summary_to_json(summary);
  }
  std::cout << icguard::summary_to_json(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "icguard: two-car intersection-approach simulator with a sliding-mode "
      "observer that detects and reconstructs corrupted leader inputs"};
  app.require_subcommand(1);

  std::string check_config;
  bool check_json = false;
  CLI::App* check = app.add_subcommand(
      "check-model", "Validate the scenario's model-level assumptions");
  check->add_option("--config", check_config, "Scenario JSON file")->required();
  check->add_flag("--json", check_json, "Machine-readable report");

  std::string run_config;
  std::uint64_t run_seed = 0;
  std::string run_out;
  CLI::App* run = app.add_subcommand("run", "Simulate one closed-loop run");
  run->add_option("--config", run_config, "Scenario JSON file")->required();
  CLI::Option* run_seed_opt =
      run->add_option("--seed", run_seed, "Noise seed (default: from config)");
  run->add_option("--out", run_out, "Output directory for run.csv/metrics.json");

  std::string mc_config;
  int mc_runs = 100;
  std::uint64_t mc_base = 0;
  std::string mc_out;
  CLI::App* mc = app.add_subcommand(
      "montecarlo", "Simulate many runs over consecutive noise seeds");
  mc->add_option("--config", mc_config, "Scenario JSON file")->required();
  mc->add_option("--runs", mc_runs, "Number of runs")
      ->check(CLI::PositiveNumber);
  CLI::Option* mc_base_opt = mc->add_option(
      "--seed-base", mc_base, "First seed (default: from config)");
  mc->add_option("--out", mc_out, "Output directory for summary.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(check)) {
      return do_check_model(check_config, check_json);
    }
    if (app.got_subcommand(run)) {
      return do_run(run_config, run_seed_opt->count() > 0, run_seed, run_out);
    }
    return do_montecarlo(mc_config, mc_runs, mc_base_opt->count() > 0, mc_base,
                         mc_out);
  } catch (const icguard::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const icguard::SimulationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
