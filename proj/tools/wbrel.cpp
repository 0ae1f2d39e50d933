// wbrel: command-line front end for Weibull component reliability estimation.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wbrel/app.hpp"

namespace {

using namespace wbrel;

void add_fit_flags(CLI::App& cmd, FitConfig& cfg) {
  cmd.add_option_function<double>("--v", [&cfg](double v) { cfg.set_v(v); }, "Prior variance for all four gammas");
  cmd.add_option("--v-beta", cfg.v_beta, "Prior variance of the shape gamma");
  cmd.add_option("--v-eta", cfg.v_eta, "Prior variance of the scale gamma");
  cmd.add_option_function<std::size_t>(
      "--np", [&cfg](std::size_t n) { cfg.mcmc.n_p = cfg.final_mcmc.n_p = n; }, "Posterior draws per chain");
  cmd.add_option("--burnin", cfg.final_mcmc.burn_in, "Burn-in of the final chain")->capture_default_str();
  cmd.add_option("--em-burnin", cfg.mcmc.burn_in, "Burn-in of each EM-iteration chain")->capture_default_str();
  cmd.add_option_function<std::size_t>(
      "--thin", [&cfg](std::size_t t) { cfg.mcmc.thin = cfg.final_mcmc.thin = t; }, "Thinning interval");
  cmd.add_option("--tol", cfg.tol, "EM tolerance on the hyper-means")->capture_default_str();
  cmd.add_option("--max-iter", cfg.max_iter, "EM iteration cap")->capture_default_str();
  cmd.add_flag("!--fresh-streams", cfg.common_random_numbers,
               "Use a new random stream for every EM iteration instead of common random numbers");
}

/// Returns an exit status when parsing ends the command (help or a usage error).
std::optional<int> parse_args(CLI::App& cmd, int argc, char** argv) {
  try {
    cmd.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cmd.exit(e);
    return rc == 0 ? 0 : 1;
  }
  return std::nullopt;
}

template <class E>
CLI::Validator enum_check(E (*parse)(std::string_view), const std::string& name) {
  return CLI::Validator(
      [parse](std::string& s) {
        try {
          parse(s);
        } catch (const Error& e) {
          return std::string(e.what());
        }
        return std::string();
      },
      name);
}

int run_fit(int argc, char** argv) {
  CLI::App cmd{"Fit the hierarchical Weibull model to system or component data", "wbrel fit"};
  cmd.set_config("--config", "", "Key/value config file; flags override");
  app::FitOptions opt;
  std::string kind, side;
  cmd.add_option("data", opt.data, "CSV with header time,cause or time,event")->required();
  cmd.add_option("--kind", kind, "series|parallel (system data)")->check(enum_check(parse_kind, "KIND"));
  cmd.add_option("--k", opt.k, "Number of components (default: largest cause)");
  cmd.add_option("--side", side, "right|left (component data)")->check(enum_check(parse_side, "SIDE"));
  add_fit_flags(cmd, opt.cfg);
  cmd.add_option("--seed", opt.seed, "Random seed")->required();
  cmd.add_option("--out", opt.out, "Output directory")->capture_default_str();
  if (auto rc = parse_args(cmd, argc, argv)) return *rc;
  if (!kind.empty()) opt.kind = parse_kind(kind);
  if (!side.empty()) opt.side = parse_side(side);
  app::cmd_fit(opt, std::cout);
  return 0;
}

int run_reliability(int argc, char** argv) {
  CLI::App cmd{"Reliability curves with pointwise credible bands from posterior draws", "wbrel reliability"};
  cmd.set_config("--config", "", "Key/value config file; flags override");
  app::ReliabilityOptions opt;
  std::string method = "hpd";
  double grid_max = 0.0;
  cmd.add_option("draws_dir", opt.draws_dir, "Directory written by 'wbrel fit'")->required();
  auto* gm = cmd.add_option("--grid-max", grid_max, "Largest grid time (default: 99th pct of data)");
  cmd.add_option("--grid-points", opt.grid_points, "Number of grid points")->capture_default_str();
  cmd.add_option("--level", opt.level, "Credible level in (0,1)")->capture_default_str();
  cmd.add_option("--method", method, "hpd|quantile")->capture_default_str()->check(enum_check(parse_band_method, "METHOD"));
  cmd.add_option("--out", opt.out, "Output directory (default: draws_dir)");
  if (auto rc = parse_args(cmd, argc, argv)) return *rc;
  if (gm->count() > 0) opt.grid_max = grid_max;
  opt.method = parse_band_method(method);
  app::cmd_reliability(opt, std::cout);
  return 0;
}

int run_simulate(int argc, char** argv) {
  CLI::App cmd{"Simulate masked series or parallel system lifetimes", "wbrel simulate"};
  cmd.set_config("--spec", "", "Spec file with kind, n and component entries");
  app::SimulateOptions opt;
  std::string kind = "series";
  std::vector<std::string> comps;
  cmd.add_option("--kind", kind, "series|parallel")->capture_default_str()->check(enum_check(parse_kind, "KIND"));
  cmd.add_option("--n", opt.n, "Number of systems")->capture_default_str();
  cmd.add_option("--component", comps, "family:mean:variance, one per component");
  cmd.add_option("--seed", opt.seed, "Random seed")->required();
  cmd.add_option("--out", opt.out, "Output directory")->capture_default_str();
  if (auto rc = parse_args(cmd, argc, argv)) return *rc;
  opt.kind = parse_kind(kind);
  for (std::size_t j = 0; j < comps.size(); ++j) {
    try {
      opt.components.push_back(app::parse_generator(comps[j]));
    } catch (const Error& e) {
      throw UsageError("component " + std::to_string(j + 1) + ": " + e.what());
    }
  }
  app::cmd_simulate(opt, std::cout);
  return 0;
}

int run_study(int argc, char** argv) {
  CLI::App cmd{"Replicated bias/MSE study over a scenario grid", "wbrel study"};
  cmd.set_config("--config", "", "Key/value config file; flags override");
  app::StudyOptions opt;
  std::string grid = "full";
  std::vector<std::string> families, sides;
  std::vector<double> means, censor;
  std::vector<std::size_t> sizes;
  cmd.add_option("--grid", grid, "full|subset")->capture_default_str()->check(CLI::IsMember({"full", "subset"}));
  cmd.add_option("--family", families, "Subset: weibull|gamma|lognormal");
  cmd.add_option("--side", sides, "Subset: right|left");
  cmd.add_option("--mean", means, "Subset: generator means");
  cmd.add_option("--censor", censor, "Subset: censored fractions in [0,1)");
  cmd.add_option("--n", sizes, "Subset: sample sizes");
  cmd.add_option("--variance", opt.dims.variance, "Generator variance")->capture_default_str();
  cmd.add_option("--replicates", opt.dims.replicates, "Replicates per scenario")->capture_default_str();
  cmd.add_option("--workers", opt.workers, "Worker threads")->default_val(default_workers());
  add_fit_flags(cmd, opt.cfg);
  cmd.add_option("--seed", opt.seed, "Random seed")->required();
  cmd.add_option("--out", opt.out, "Output directory")->capture_default_str();
  if (auto rc = parse_args(cmd, argc, argv)) return *rc;
  if (grid == "subset") {
    if (!families.empty()) {
      opt.dims.families.clear();
      for (const auto& f : families) opt.dims.families.push_back(parse_family(f));
    }
    if (!sides.empty()) {
      opt.dims.sides.clear();
      for (const auto& s : sides) opt.dims.sides.push_back(parse_side(s));
    }
    if (!means.empty()) opt.dims.means = means;
    if (!censor.empty()) opt.dims.censor_fractions = censor;
    if (!sizes.empty()) opt.dims.sizes = sizes;
  } else if (!families.empty() || !sides.empty() || !means.empty() || !censor.empty() || !sizes.empty()) {
    throw UsageError("subset filters need --grid subset");
  }
  app::cmd_study(opt, std::cout);
  return 0;
}

const char* usage =
    "usage: wbrel <command> [options]\n"
    "commands:\n"
    "  simulate     simulate masked system lifetimes\n"
    "  fit          fit component reliability models\n"
    "  reliability  reliability curves and credible bands from draws\n"
    "  study        replicated bias/MSE study\n"
    "run 'wbrel <command> --help' for options\n";

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << usage;
    return 1;
  }
  const std::string command = argv[1];
  if (command == "-h" || command == "--help") {
    std::cout << usage;
    return 0;
  }
  static const std::map<std::string, int (*)(int, char**)> commands = {
      {"fit", run_fit}, {"reliability", run_reliability}, {"simulate", run_simulate}, {"study", run_study}};
  const auto it = commands.find(command);
  if (it == commands.end()) {
    std::cerr << "unknown command '" << command << "'\n" << usage;
    return 1;
  }
  try {
    return it->second(argc - 1, argv + 1);
  } catch (const Error& e) {
    std::cerr << "wbrel " << command << ": " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "wbrel " << command << ": " << e.what() << "\n";
    return 3;
  }
}
