#pragma once

// Command implementations behind the `wbrel` executable. Each command takes a
// fully parsed option struct, writes its outputs, and throws wbrel::Error on
// failure; the executable maps the error kind to the exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wbrel/curves.hpp"
#include "wbrel/io.hpp"
#include "wbrel/mcem.hpp"
#include "wbrel/simlab.hpp"
#include "wbrel/sysmodel.hpp"

namespace wbrel::app {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* version = "1.0.0";

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Timestamps live under one key so outputs can be compared with it removed.
class RunClock {
 public:
  RunClock() : wall_start_(std::chrono::system_clock::now()), start_(std::chrono::steady_clock::now()) {}
  json stamp() const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return {{"started_at", utc_timestamp(wall_start_)},
            {"finished_at", utc_timestamp(std::chrono::system_clock::now())},
            {"wall_time_s", secs}};
  }

 private:
  std::chrono::system_clock::time_point wall_start_;
  std::chrono::steady_clock::time_point start_;
};

inline void prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

inline std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

inline json mcmc_json(const McmcConfig& c) {
  return {{"n_p", c.n_p}, {"burn_in", c.burn_in}, {"thin", c.thin}, {"adapt_target", c.adapt_target},
          {"step_init", c.step_init}};
}

inline json fit_config_json(const FitConfig& c) {
  return {{"v_beta", c.v_beta},
          {"v_eta", c.v_eta},
          {"tol", c.tol},
          {"max_iter", c.max_iter},
          {"common_random_numbers", c.common_random_numbers},
          {"mcmc", mcmc_json(c.mcmc)},
          {"final_mcmc", mcmc_json(c.final_mcmc)}};
}

/// Parses "family:mean:variance", e.g. "weibull:2:4".
inline GeneratorSpec parse_generator(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(std::string(io::trim(p)));
  if (parts.size() != 3) throw UsageError("component spec '" + text + "' must look like family:mean:variance");
  GeneratorSpec g;
  g.family = parse_family(parts[0]);
  try {
    g.mean = std::stod(parts[1]);
    g.variance = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw UsageError("component spec '" + text + "': mean and variance must be numbers");
  }
  return g;
}

inline double empirical_quantile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  return sorted_quantile(xs, q);
}

// ---------------------------------------------------------------- fit

struct FitOptions {
  std::string data;
  std::optional<SystemKind> kind;  // required for time,cause data
  int k = 0;                       // 0: largest cause in the file
  std::optional<Side> side;        // required for time,event data
  FitConfig cfg;
  std::uint64_t seed = 1;
  std::string out = ".";
};

struct FitReport {
  std::size_t components = 0;
  std::vector<bool> converged;
  std::vector<MeanTime> mean_times;
};

inline FitReport cmd_fit(const FitOptions& opt, std::ostream& log) {
  const RunClock clock;
  opt.cfg.validate();
  const std::string content = io::read_file(opt.data);
  std::istringstream in(content);
  const auto table = io::read_csv(in, opt.data);
  const auto layout = io::detect_layout(table, opt.data);

  std::vector<ComponentSample> samples;
  SystemFit fit;
  json hyper;
  if (layout == io::DataLayout::system) {
    if (!opt.kind) throw UsageError("time,cause data needs --kind series|parallel");
    const auto sys = io::parse_system_table(table, *opt.kind, opt.k, opt.data);
    samples = decompose(sys);
    log << "fitting " << sys.k << "-component " << to_string(sys.kind) << " system, n = " << sys.records.size() << "\n";
    fit = fit_system(sys, opt.cfg, RngStream(opt.seed), false);
    hyper["kind"] = to_string(sys.kind);
  } else {
    if (!opt.side) throw UsageError("time,event data needs --side right|left");
    samples.push_back(io::parse_component_table(table, *opt.side, opt.data));
    log << "fitting single component, " << to_string(*opt.side) << "-censored, n = " << samples[0].records.size()
        << "\n";
    fit.kind = *opt.side == Side::right ? SystemKind::series : SystemKind::parallel;
    fit.component_fits.push_back(fit_component(samples[0], opt.cfg, RngStream(opt.seed).child(std::uint64_t{0})));
    hyper["kind"] = "component";
    hyper["side"] = to_string(*opt.side);
  }

  std::vector<double> times;
  for (const auto& r : samples.front().records) times.push_back(r.t);
  hyper["k"] = fit.component_fits.size();
  hyper["v_beta"] = opt.cfg.v_beta;
  hyper["v_eta"] = opt.cfg.v_eta;
  hyper["grid_max_default"] = empirical_quantile(times, 0.99);
  hyper["components"] = json::array();

  prepare_dir(opt.out);
  FitReport report;
  report.components = fit.component_fits.size();
  std::string results;
  json manifest_components = json::array();
  for (std::size_t j = 0; j < fit.component_fits.size(); ++j) {
    const auto& cf = fit.component_fits[j];
    const int idx = static_cast<int>(j) + 1;
    const auto draws = io::draws_csv(idx, cf.draws);
    io::write_file(join_path(opt.out, "draws_" + std::to_string(idx) + ".csv"), draws);
    results += draws;

    const auto mt = mean_time_posterior(cf.draws);
    report.converged.push_back(cf.converged);
    report.mean_times.push_back(mt);
    json c = {{"component", idx},
              {"m_beta_hat", cf.m_beta_hat},
              {"m_eta_hat", cf.m_eta_hat},
              {"converged", cf.converged},
              {"em_iterations", cf.em_trace.size() - 1},
              {"censored_pct", 100.0 * samples[j].censored_fraction()},
              {"mean_time", {{"estimate", mt.estimate}, {"sd", mt.sd}}}};
    if (cf.draws.size() >= 2) {
      const auto s = posterior_summary(cf.draws);
      c["posterior"] = {{"beta_mean", s.mean_beta}, {"beta_sd", s.sd_beta}, {"eta_mean", s.mean_eta}, {"eta_sd", s.sd_eta}};
    }
    hyper["components"].push_back(c);
    manifest_components.push_back({{"component", idx},
                                   {"converged", cf.converged},
                                   {"acceptance_rate", cf.draws.acceptance_rate},
                                   {"step_final", cf.draws.step_final},
                                   {"lag1_beta", lag1_autocorrelation(cf.draws.betas())},
                                   {"lag1_eta", lag1_autocorrelation(cf.draws.etas())},
                                   {"warnings", cf.warnings}});
    log << "component " << idx << ": m_beta " << cf.m_beta_hat << ", m_eta " << cf.m_eta_hat << ", E(T) "
        << mt.estimate << " (" << mt.sd << ")" << (cf.converged ? "" : "  [not converged]") << "\n";
  }
  const auto trace = io::trace_csv(fit.component_fits);
  io::write_file(join_path(opt.out, "trace.csv"), trace);
  const auto hyper_text = hyper.dump(2) + "\n";
  io::write_file(join_path(opt.out, "hyper.json"), hyper_text);
  results += trace + hyper_text;

  json manifest = {{"command", "fit"},
                   {"version", version},
                   {"seed", opt.seed},
                   {"config", fit_config_json(opt.cfg)},
                   {"input", {{"path", opt.data}, {"digest", io::hex_digest(content)}}},
                   {"components", manifest_components},
                   {"result_digest", io::hex_digest(results)},
                   {"timestamps", clock.stamp()}};
  io::write_file(join_path(opt.out, "manifest.json"), manifest.dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------- reliability

struct ReliabilityOptions {
  std::string draws_dir;
  std::optional<double> grid_max;
  std::size_t grid_points = 200;
  double level = 0.95;
  BandMethod method = BandMethod::hpd;
  std::string out;  // empty: alongside the draws
};

inline void cmd_reliability(const ReliabilityOptions& opt, std::ostream& log) {
  const RunClock clock;
  require_level(opt.level);
  const std::string hyper_path = join_path(opt.draws_dir, "hyper.json");
  json hyper;
  try {
    hyper = json::parse(io::read_file(hyper_path));
  } catch (const json::exception& e) {
    throw DataError(hyper_path + ": " + e.what());
  }
  const auto k = hyper.at("k").get<std::size_t>();
  std::vector<std::string> expected;
  for (std::size_t j = 1; j <= k; ++j) expected.push_back(join_path(opt.draws_dir, "draws_" + std::to_string(j) + ".csv"));
  std::string missing;
  for (const auto& p : expected)
    if (!fs::exists(p)) missing += " " + p;
  if (!missing.empty()) {
    std::string all;
    for (const auto& p : expected) all += " " + p;
    throw DataError("missing component draws:" + missing + " (expected:" + all + ")");
  }

  const double grid_max = opt.grid_max.value_or(hyper.at("grid_max_default").get<double>());
  const auto grid = TimeGrid::uniform(grid_max, opt.grid_points);
  const std::string out = opt.out.empty() ? opt.draws_dir : opt.out;
  prepare_dir(out);

  SystemFit fit;
  const std::string kind = hyper.at("kind").get<std::string>();
  fit.kind = kind == "parallel" ? SystemKind::parallel : SystemKind::series;
  std::string results;
  for (std::size_t j = 0; j < k; ++j) {
    std::istringstream in(io::read_file(expected[j]));
    ComponentFit cf;
    cf.draws = io::parse_draws(in, expected[j]);
    const auto band = io::band_csv(reliability_band(cf.draws, grid, opt.level, opt.method));
    io::write_file(join_path(out, "band_" + std::to_string(j + 1) + ".csv"), band);
    results += band;
    fit.component_fits.push_back(std::move(cf));
  }
  if (kind != "component") {
    const auto band = io::band_csv(system_band(fit, grid, opt.level, opt.method));
    io::write_file(join_path(out, "band_system.csv"), band);
    results += band;
  }
  log << "wrote " << k << " component band(s)" << (kind != "component" ? " and the system band" : "") << " to "
      << out << "\n";

  json manifest = {{"command", "reliability"},
                   {"version", version},
                   {"draws_dir", opt.draws_dir},
                   {"grid", {{"max", grid_max}, {"points", opt.grid_points}}},
                   {"level", opt.level},
                   {"method", to_string(opt.method)},
                   {"result_digest", io::hex_digest(results)},
                   {"timestamps", clock.stamp()}};
  io::write_file(join_path(out, "manifest_reliability.json"), manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::vector<GeneratorSpec> components;
  SystemKind kind = SystemKind::series;
  std::size_t n = 100;
  std::uint64_t seed = 1;
  std::string out = ".";
};

/// Returns the achieved censoring percentage of each component.
inline std::vector<double> cmd_simulate(const SimulateOptions& opt, std::ostream& log) {
  const RunClock clock;
  if (opt.components.empty()) throw UsageError("simulate: at least one component is required");
  if (opt.n < 1) throw UsageError("simulate: n must be at least 1");
  RngStream rng = RngStream(opt.seed).child("simulate");
  const auto s = generate_system_sample(opt.components, opt.kind, opt.n, rng);

  std::vector<double> pct;
  for (const auto& c : decompose(s)) pct.push_back(100.0 * c.censored_fraction());

  prepare_dir(opt.out);
  const auto data = io::system_csv(s);
  io::write_file(join_path(opt.out, "system.csv"), data);

  json comps = json::array();
  for (std::size_t j = 0; j < opt.components.size(); ++j) {
    const auto& g = opt.components[j];
    comps.push_back({{"component", j + 1},
                     {"family", to_string(g.family)},
                     {"mean", g.mean},
                     {"variance", g.variance},
                     {"censored_pct", pct[j]}});
    log << "component " << j + 1 << " (" << to_string(g.family) << "): " << pct[j] << "% censored\n";
  }
  json manifest = {{"command", "simulate"},
                   {"version", version},
                   {"seed", opt.seed},
                   {"kind", to_string(opt.kind)},
                   {"n", opt.n},
                   {"components", comps},
                   {"result_digest", io::hex_digest(data)},
                   {"timestamps", clock.stamp()}};
  io::write_file(join_path(opt.out, "manifest.json"), manifest.dump(2) + "\n");
  return pct;
}

// ---------------------------------------------------------------- study

struct StudyOptions {
  GridDims dims;
  FitConfig cfg;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string out = ".";
};

inline std::vector<ScenarioResult> cmd_study(const StudyOptions& opt, std::ostream& log) {
  const RunClock clock;
  if (opt.dims.replicates < 1) throw UsageError("study: --replicates must be at least 1");
  if (opt.dims.cell_count() == 0) throw UsageError("study: empty grid");
  log << "running " << opt.dims.cell_count() << " scenario(s) x " << opt.dims.replicates << " replicate(s)\n";
  const auto results = run_grid(opt.dims, opt.cfg, opt.seed, opt.workers);

  prepare_dir(opt.out);
  const auto table = io::study_csv(results);
  io::write_file(join_path(opt.out, "study.csv"), table);

  json cells = json::array();
  for (const auto& r : results)
    cells.push_back({{"key", scenario_key(r.spec)},
                     {"side", to_string(r.spec.side)},
                     {"valid", r.valid},
                     {"n_failed", r.n_failed},
                     {"n_unconverged", r.n_unconverged},
                     {"failures", r.failures}});
  json dims = {{"families", json::array()},
               {"means", opt.dims.means},
               {"censor_fractions", opt.dims.censor_fractions},
               {"sizes", opt.dims.sizes},
               {"sides", json::array()},
               {"variance", opt.dims.variance},
               {"replicates", opt.dims.replicates}};
  for (auto f : opt.dims.families) dims["families"].push_back(to_string(f));
  for (auto s : opt.dims.sides) dims["sides"].push_back(to_string(s));
  json manifest = {{"command", "study"},
                   {"version", version},
                   {"seed", opt.seed},
                   {"grid", dims},
                   {"config", fit_config_json(opt.cfg)},
                   {"cells", cells},
                   {"result_digest", io::hex_digest(table)},
                   {"timestamps", clock.stamp()}};
  io::write_file(join_path(opt.out, "manifest.json"), manifest.dump(2) + "\n");
  std::size_t invalid = 0;
  for (const auto& r : results) invalid += !r.valid;
  log << "wrote " << results.size() << " rows" << (invalid ? ", " + std::to_string(invalid) + " invalid" : "") << "\n";
  return results;
}

}  // namespace wbrel::app
