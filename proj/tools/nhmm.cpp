// Command-line front end: fit, simulate, forecast, score, synth, diagnose.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nhmm/errors.hpp"
#include "nhmm/inference.hpp"
#include "nhmm/io.hpp"
#include "nhmm/model_selection.hpp"
#include "nhmm/simulation.hpp"
#include "nhmm/states.hpp"
#include "nhmm/stats.hpp"
#include "nhmm/store.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string config;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Root random seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads (default: NHMM_THREADS or all cores)");
  cmd->add_option("--config", c.config, "JSON file of option values; command-line flags take precedence");
  cmd->add_flag("--quiet", c.quiet, "No progress output");
}

void apply_threads(const Common& c) {
  int threads = c.threads;
  if (threads == 0) {
    if (const char* env = std::getenv("NHMM_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        throw nhmm::ConfigError("NHMM_THREADS must be an integer");
      }
    }
  }
  if (threads < 0) throw nhmm::ConfigError("thread count must be non-negative");
  nhmm::set_threads(threads);
}

struct DataArgs {
  std::string obs;
  std::string x;
  std::string w;
  std::string w_dir;
  std::string harmonics = "none";
};

void add_data(CLI::App* cmd, DataArgs& d, bool obs_required) {
  auto* o = cmd->add_option("--obs", d.obs, "Rainfall panel CSV (station ids in the header, NA for missing)");
  if (obs_required) o->required();
  cmd->add_option("--x", d.x, "Transition covariates CSV (days x B)");
  cmd->add_option("--w", d.w, "Emission covariates, long CSV with day,station,name,value");
  cmd->add_option("--w-dir", d.w_dir, "Emission covariates, one <station>.csv per station");
  cmd->add_option("--add-harmonics", d.harmonics,
                  "Append annual and semi-annual sin/cos covariates to x, w, both or none")
      ->expected(0, 1);
}

std::string harmonics_value(const CLI::App* cmd, const DataArgs& d) {
  const auto* opt = cmd->get_option("--add-harmonics");
  if (opt->count() == 0) return d.harmonics.empty() ? "none" : d.harmonics;
  const auto& given = opt->results();
  if (given.empty() || given.front().empty()) return "both";
  return given.front();
}

std::string absolute_or_empty(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

void write_json(const json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw nhmm::InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw nhmm::InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw nhmm::InputError(path.string() + ": " + e.what());
  }
}

// Panel and covariates of a fit, split into training and held-out days.
struct Dataset {
  nhmm::ObservationPanel train;
  nhmm::CovariateSet train_cov;
  std::optional<nhmm::ObservationPanel> held;
  std::optional<nhmm::CovariateSet> held_cov;
};

nhmm::CovariateSet raw_covariates(const json& run, Eigen::Index days, const std::vector<std::string>& stations,
                                  Eigen::Index first_day) {
  nhmm::CovariateSources src;
  src.x = run.value("x", "");
  src.w_long = run.value("w", "");
  src.w_dir = run.value("w_dir", "");
  nhmm::CovariateSet cov = nhmm::load_covariates(src, days, stations);
  nhmm::add_harmonics(cov, nhmm::parse_harmonic_target(run.value("harmonics", "none")), first_day,
                      static_cast<Eigen::Index>(stations.size()));
  return cov;
}

// With `scaling` set, covariates are standardized with the stored constants;
// otherwise the constants are fitted on the training rows.
Dataset load_dataset(const json& run, const nhmm::PosteriorStore* scaling) {
  const nhmm::ObservationPanel panel = nhmm::load_panel(run.at("obs").get<std::string>());
  const long holdout = run.value("holdout", 0L);
  const Eigen::Index days = panel.days();
  if (holdout < 0 || holdout >= days - 1) {
    throw nhmm::ConfigError("holdout must leave at least 2 training days (panel has " + std::to_string(days) +
                            " days)");
  }
  const Eigen::Index train_days = days - holdout;
  nhmm::CovariateSet cov = raw_covariates(run, days, panel.station_ids, 0);
  if (scaling) {
    nhmm::apply_scaling(cov, scaling->x_names, scaling->x_scaling, scaling->w_names, scaling->w_scaling);
  } else {
    nhmm::standardize(cov, train_days);
  }
  Dataset d;
  d.train = panel.slice(0, train_days);
  d.train_cov = cov.slice(0, train_days);
  if (holdout > 0) {
    d.held = panel.slice(train_days, holdout);
    d.held_cov = cov.slice(train_days, holdout);
  }
  return d;
}

json summary_json(const nhmm::ParameterSummary& s) {
  return {{"name", s.name},   {"index", s.index}, {"mean", s.mean},
          {"lower", s.lower}, {"upper", s.upper}, {"significant", s.significant}};
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  Common common;
  DataArgs data;
  int states = 2;
  long iterations = 2000;
  double burn_in = 0.1;
  long thinning = 1;
  long holdout = 0;
  double credibility = 0.95;
  double prior_variance = 0.0;
  double gamma_cap = 10.0;
  bool no_store_states = false;
  bool no_store_imputed = false;
  std::string out;
};

void run_fit(const FitArgs& a, const CLI::App* cmd) {
  apply_threads(a.common);
  json run = {{"obs", absolute_or_empty(a.data.obs)},
              {"x", absolute_or_empty(a.data.x)},
              {"w", absolute_or_empty(a.data.w)},
              {"w_dir", absolute_or_empty(a.data.w_dir)},
              {"harmonics", harmonics_value(cmd, a.data)},
              {"holdout", a.holdout}};
  const Dataset data = load_dataset(run, nullptr);

  nhmm::McmcConfig config;
  config.states = a.states;
  config.iterations = a.iterations;
  config.burn_in_fraction = a.burn_in;
  config.thinning = a.thinning;
  config.seed = a.common.seed;
  config.threads = a.common.threads;
  config.store_states = !a.no_store_states;
  config.store_imputed = !a.no_store_imputed;
  config.validate();
  if (config.retained() < 1) throw nhmm::ConfigError("thinning leaves no retained draws");

  nhmm::ModelPriors priors;
  if (a.prior_variance < 0.0) throw nhmm::ConfigError("prior variance must be positive");
  if (a.prior_variance > 0.0) {
    priors.transition =
        nhmm::TransitionPrior::isotropic(a.states, static_cast<int>(data.train_cov.x_count()), a.prior_variance);
  }
  priors.emission.gamma_cap = a.gamma_cap;

  long last_report = -1;
  const nhmm::ProgressFn progress = [&](long done, long total) {
    if (a.common.quiet) return;
    const long pct = done * 10 / total;
    if (pct != last_report) {
      last_report = pct;
      std::cerr << "fit: " << done << "/" << total << " sweeps\n";
    }
  };
  const nhmm::PosteriorStore store = nhmm::run_chain(data.train, data.train_cov, config, priors, progress);

  const fs::path out = a.out;
  nhmm::save_store(store, out / "store");
  run["states"] = a.states;
  run["seed"] = a.common.seed;
  run["training_days"] = data.train.days();
  write_json(run, out / "run.json");

  json summary;
  summary["states"] = a.states;
  summary["draws"] = store.size();
  summary["credibility"] = a.credibility;
  json params = json::array();
  if (store.size() >= 2) {
    for (const auto& s : nhmm::summarize(store, a.credibility)) params.push_back(summary_json(s));
  }
  summary["parameters"] = params;
  double ll_mean = 0.0;
  for (double v : store.log_likelihood) ll_mean += v;
  summary["log_likelihood_mean"] = ll_mean / static_cast<double>(store.size());
  summary["diagnostics"] = {{"cutpoint_retained", store.cutpoint_retained}, {"ridge_jitter", store.ridge_jitter}};
  write_json(summary, out / "summary.json");

  const nhmm::StateChain mode = nhmm::most_probable_states(store.state_counts);
  Eigen::MatrixXd table(static_cast<Eigen::Index>(mode.size()), 2);
  for (std::size_t t = 0; t < mode.size(); ++t) {
    table(static_cast<Eigen::Index>(t), 0) = static_cast<double>(t + 1);
    table(static_cast<Eigen::Index>(t), 1) = mode[t] + 1;
  }
  nhmm::write_table(table, {"day", "state"}, out / "most_probable_states.csv");
}

// ------------------------------------------------------- simulate / forecast

struct SimArgs {
  Common common;
  std::string fit;
  std::string out;
  std::size_t draws = 100;
  std::string scenario;
  std::string level = "mean";
  // forecast only
  long days = 0;
  std::string x_new;
  std::string w_new;
  std::string w_new_dir;
  int init_state = 0;
};

std::vector<std::size_t> spread_draws(std::size_t available, std::size_t wanted) {
  const std::size_t used = wanted == 0 ? available : std::min(available, wanted);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < used; ++i) idx.push_back(i * available / used);
  return idx;
}

// Per-day-of-year mean of each simulation, then mean and 95% band across them.
void write_band_summary(const std::vector<Eigen::MatrixXd>& sims, const std::vector<std::string>& stations,
                        const fs::path& path) {
  const int period = 365;
  const Eigen::Index days = sims.front().rows();
  const Eigen::Index rows = std::min<Eigen::Index>(period, days);
  const auto S = static_cast<Eigen::Index>(stations.size());
  std::vector<Eigen::MatrixXd> means;
  for (const auto& y : sims) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, S);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(rows);
    for (Eigen::Index t = 0; t < days; ++t) {
      sum.row(t % period) += y.row(t);
      count[t % period] += 1.0;
    }
    for (Eigen::Index r = 0; r < rows; ++r) sum.row(r) /= count[r];
    means.push_back(std::move(sum));
  }
  std::ofstream out(path);
  if (!out) throw nhmm::InputError("cannot write " + path.string());
  out << "day_of_year,station,mean,lower,upper\n";
  std::vector<double> v(means.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index s = 0; s < S; ++s) {
      double mean = 0.0;
      for (std::size_t n = 0; n < means.size(); ++n) {
        v[n] = means[n](r, s);
        mean += v[n];
      }
      mean /= static_cast<double>(v.size());
      std::sort(v.begin(), v.end());
      out << r + 1 << ',' << stations[static_cast<std::size_t>(s)] << ',' << nhmm::format_double(mean) << ','
          << nhmm::format_double(nhmm::quantile_sorted(v, 0.025)) << ','
          << nhmm::format_double(nhmm::quantile_sorted(v, 0.975)) << '\n';
    }
  }
}

nhmm::ScenarioLevel parse_level(const std::string& s) {
  if (s == "min") return nhmm::ScenarioLevel::Min;
  if (s == "max") return nhmm::ScenarioLevel::Max;
  if (s == "mean") return nhmm::ScenarioLevel::Mean;
  throw nhmm::ConfigError("scenario level must be min, max or mean");
}

void run_simulate(const SimArgs& a) {
  apply_threads(a.common);
  const fs::path fit = a.fit;
  const json run = read_json(fit / "run.json");
  const nhmm::PosteriorStore store = nhmm::load_store(fit / "store");
  const Dataset data = load_dataset(run, &store);
  const fs::path out = a.out.empty() ? fit / "simulations" : fs::path(a.out);
  fs::create_directories(out);

  if (!a.scenario.empty()) {
    nhmm::ScenarioTarget target;
    auto find = [&](const std::vector<std::string>& names) {
      return static_cast<int>(std::find(names.begin(), names.end(), a.scenario) - names.begin());
    };
    target.index = find(store.x_names);
    if (target.index == static_cast<int>(store.x_names.size())) {
      target.emission = true;
      target.index = find(store.w_names);
      if (target.index == static_cast<int>(store.w_names.size())) {
        throw nhmm::InputError("unknown covariate '" + a.scenario + "'");
      }
    }
    nhmm::ScenarioOptions opts;
    opts.keep = nhmm::harmonic_names();
    opts.max_draws = a.draws;
    opts.seed = a.common.seed;
    const Eigen::MatrixXd mean =
        nhmm::covariate_scenario_sweep(store, target, parse_level(a.level), data.train_cov, opts);
    nhmm::write_table(mean, store.station_ids, out / ("scenario_" + a.scenario + "_" + a.level + ".csv"));
    return;
  }

  std::vector<Eigen::MatrixXd> sims;
  for (std::size_t draw : spread_draws(store.size(), a.draws)) {
    nhmm::Rng rng(a.common.seed, {static_cast<std::uint64_t>(draw)});
    nhmm::ForecastDraw f = nhmm::simulate_in_sample(store.zeta[draw], store.emission[draw], data.train_cov, rng);
    nhmm::ObservationPanel panel = nhmm::ObservationPanel::complete(f.y_star);
    panel.station_ids = store.station_ids;
    char name[32];
    std::snprintf(name, sizeof(name), "sim_%05zu.csv", draw + 1);
    nhmm::write_panel(panel, out / name);
    sims.push_back(std::move(f.y_star));
  }
  write_band_summary(sims, store.station_ids, out / "day_of_year_summary.csv");
}

void run_forecast(const SimArgs& a) {
  apply_threads(a.common);
  const fs::path fit = a.fit;
  const json run = read_json(fit / "run.json");
  const nhmm::PosteriorStore store = nhmm::load_store(fit / "store");
  if (a.days < 1) throw nhmm::ConfigError("--days must be at least 1");
  if (a.init_state < 0 || a.init_state > store.dims.states) throw nhmm::ConfigError("--init-state out of range");

  json src = run;
  src["x"] = absolute_or_empty(a.x_new);
  src["w"] = absolute_or_empty(a.w_new);
  src["w_dir"] = absolute_or_empty(a.w_new_dir);
  nhmm::CovariateSet cov =
      raw_covariates(src, a.days, store.station_ids, run.value("training_days", static_cast<long>(store.dims.days)));
  nhmm::apply_scaling(cov, store.x_names, store.x_scaling, store.w_names, store.w_scaling);

  const fs::path out = a.out.empty() ? fit / "forecasts" : fs::path(a.out);
  fs::create_directories(out);
  std::vector<Eigen::MatrixXd> sims;
  for (std::size_t draw : spread_draws(store.size(), a.draws)) {
    nhmm::Rng rng(a.common.seed, {static_cast<std::uint64_t>(draw)});
    const int init = a.init_state > 0 ? a.init_state - 1 : store.final_state[draw];
    nhmm::ForecastDraw f = nhmm::simulate_chain(store.zeta[draw], store.emission[draw], cov, init, rng);
    nhmm::ObservationPanel panel = nhmm::ObservationPanel::complete(f.y_star);
    panel.station_ids = store.station_ids;
    char name[32];
    std::snprintf(name, sizeof(name), "forecast_%05zu.csv", draw + 1);
    nhmm::write_panel(panel, out / name);
    sims.push_back(std::move(f.y_star));
  }
  write_band_summary(sims, store.station_ids, out / "day_of_year_summary.csv");
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  Common common;
  std::string fit;
  std::string out;
};

void run_score(const ScoreArgs& a) {
  apply_threads(a.common);
  const fs::path fit = a.fit;
  const json run = read_json(fit / "run.json");
  const nhmm::PosteriorStore store = nhmm::load_store(fit / "store");
  const Dataset data = load_dataset(run, &store);
  const nhmm::ModelScore score =
      nhmm::score_model(store, data.train, data.train_cov, data.held ? &*data.held : nullptr,
                        data.held_cov ? &*data.held_cov : nullptr, a.common.seed);
  json report = {{"K", score.states},   {"p", score.param_count},       {"loglik", score.log_likelihood},
                 {"bic", score.bic},    {"pls", nullptr},               {"n_obs", score.n_observations},
                 {"seed", score.seed}};
  if (score.has_pls) report["pls"] = score.pls;
  write_json(report, a.out.empty() ? fit / "scores.json" : fs::path(a.out));
  std::cout << report.dump() << '\n';
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  std::string out;
  int states = 2;
  int stations = 5;
  long days = 2000;
  int x_count = 1;
  int w_count = 1;
  double missing = 0.1;
  double autocorrelation = 0.9;
};

void run_synth(const SynthArgs& a) {
  const auto [coeffs, params] = nhmm::reference_truth(a.states, a.stations, a.w_count, a.x_count);
  nhmm::CovariateSpec spec;
  spec.x_count = a.x_count;
  spec.w_count = a.w_count;
  spec.autocorrelation = a.autocorrelation;
  const nhmm::SyntheticData data = nhmm::generate_synthetic(coeffs, params, a.days, spec, a.missing, a.common.seed);

  const fs::path out = a.out;
  fs::create_directories(out);
  nhmm::write_panel(data.panel, out / "obs.csv");
  if (a.x_count > 0) nhmm::write_table(data.covariates.x, data.covariates.x_names, out / "x.csv");
  if (a.w_count > 0) {
    std::ofstream w(out / "w.csv");
    if (!w) throw nhmm::InputError("cannot write " + (out / "w.csv").string());
    w << "day,station,name,value\n";
    for (Eigen::Index t = 0; t < data.panel.days(); ++t) {
      for (Eigen::Index s = 0; s < data.panel.stations(); ++s) {
        for (std::size_t c = 0; c < data.covariates.w.size(); ++c) {
          w << t + 1 << ',' << data.panel.station_ids[static_cast<std::size_t>(s)] << ','
            << data.covariates.w_names[c] << ',' << nhmm::format_double(data.covariates.w[c](t, s)) << '\n';
        }
      }
    }
  }
  Eigen::MatrixXd chain(data.panel.days(), 2);
  for (Eigen::Index t = 0; t < data.panel.days(); ++t) {
    chain(t, 0) = static_cast<double>(t + 1);
    chain(t, 1) = data.states[static_cast<std::size_t>(t)] + 1;
  }
  nhmm::write_table(chain, {"day", "state"}, out / "true_states.csv");

  auto mat = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json r = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
      rows.push_back(r);
    }
    return rows;
  };
  json truth = {{"seed", a.common.seed},
                {"zeta", mat(coeffs.zeta)},
                {"lambda_light", mat(params.lambda[0])},
                {"lambda_heavy", mat(params.lambda[1])},
                {"beta0", mat(params.beta0)},
                {"beta1", mat(params.beta1)},
                {"gamma", std::vector<double>(params.gamma.data(), params.gamma.data() + params.gamma.size())}};
  write_json(truth, out / "truth.json");
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  Common common;
  std::string obs;
  std::string against;
  std::string out;
};

json pair_json(const nhmm::PairStatistics& p) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return {{"log_odds", num(p.log_odds)}, {"spearman", num(p.spearman)}, {"days", p.days}};
}

void run_diagnose(const DiagnoseArgs& a) {
  const nhmm::ObservationPanel first = nhmm::load_panel(a.obs);
  const nhmm::ObservationPanel second = nhmm::load_panel(a.against);
  json pairs = json::array();
  for (const auto& d : nhmm::spatial_diagnostics(first, second)) {
    pairs.push_back({{"station_i", first.station_ids[static_cast<std::size_t>(d.station_i)]},
                     {"station_j", first.station_ids[static_cast<std::size_t>(d.station_j)]},
                     {"first", pair_json(d.first)},
                     {"second", pair_json(d.second)}});
  }
  const json report = {{"log_odds_cap", nhmm::kLogOddsCap}, {"pairs", pairs}};
  if (a.out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_json(report, a.out);
  }
}

// ------------------------------------------------------------- config file

// Append `--key value` for every config entry the command line did not set.
void merge_config_file(std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return;
  const json cfg = read_json(path);
  if (!cfg.is_object()) throw nhmm::ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(),
                                   [&](const std::string& s) { return s == flag || s.rfind(flag + "=", 0) == 0; });
    if (given) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag);
      args.push_back(value.dump());
    } else {
      throw nhmm::ConfigError("config entry '" + key + "' must be a string, number or boolean");
    }
  }
}

int emit_error(const std::string& type, const std::string& message, int code) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian non-homogeneous hidden Markov models for daily rainfall"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Run the Gibbs sampler and write the posterior store");
  add_common(fit_cmd, fit.common);
  add_data(fit_cmd, fit.data, true);
  fit_cmd->add_option("--states", fit.states, "Number of hidden states K")->capture_default_str();
  fit_cmd->add_option("--iterations", fit.iterations, "Retained-phase sweeps")->capture_default_str();
  fit_cmd->add_option("--burn-in", fit.burn_in, "Extra burn-in as a fraction of iterations")->capture_default_str();
  fit_cmd->add_option("--thinning", fit.thinning, "Keep every n-th sweep")->capture_default_str();
  fit_cmd->add_option("--holdout", fit.holdout, "Trailing days excluded from fitting")->capture_default_str();
  fit_cmd->add_option("--credibility", fit.credibility, "Credible-interval level")->capture_default_str();
  fit_cmd->add_option("--prior-variance", fit.prior_variance, "Normal prior variance on zeta (default flat)");
  fit_cmd->add_option("--gamma-cap", fit.gamma_cap, "Upper bound of the cutpoint")->capture_default_str();
  fit_cmd->add_flag("--no-store-states", fit.no_store_states, "Do not keep state paths");
  fit_cmd->add_flag("--no-store-imputed", fit.no_store_imputed, "Do not keep imputed values");
  fit_cmd->add_option("--out", fit.out, "Output directory")->required();

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate rainfall over the training period from a fit");
  add_common(sim_cmd, sim.common);
  sim_cmd->add_option("--fit", sim.fit, "Directory written by fit")->required();
  sim_cmd->add_option("--out", sim.out, "Output directory (default <fit>/simulations)");
  sim_cmd->add_option("--draws", sim.draws, "Posterior draws to simulate (0 = all)")->capture_default_str();
  sim_cmd->add_option("--scenario", sim.scenario, "Covariate to pin for a scenario sweep");
  sim_cmd->add_option("--level", sim.level, "Scenario level: min, max or mean")->capture_default_str();

  SimArgs fc;
  auto* fc_cmd = app.add_subcommand("forecast", "Simulate beyond the training period");
  add_common(fc_cmd, fc.common);
  fc_cmd->add_option("--fit", fc.fit, "Directory written by fit")->required();
  fc_cmd->add_option("--days", fc.days, "Forecast length")->required();
  fc_cmd->add_option("--x-new", fc.x_new, "Transition covariates for the forecast days");
  fc_cmd->add_option("--w-new", fc.w_new, "Emission covariates (long CSV) for the forecast days");
  fc_cmd->add_option("--w-new-dir", fc.w_new_dir, "Emission covariates directory for the forecast days");
  fc_cmd->add_option("--init-state", fc.init_state, "Start state 1..K (default: last fitted state of each draw)");
  fc_cmd->add_option("--draws", fc.draws, "Posterior draws to simulate (0 = all)")->capture_default_str();
  fc_cmd->add_option("--out", fc.out, "Output directory (default <fit>/forecasts)");

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "BIC and predictive log score of a fit");
  add_common(score_cmd, score.common);
  score_cmd->add_option("--fit", score.fit, "Directory written by fit")->required();
  score_cmd->add_option("--out", score.out, "Report path (default <fit>/scores.json)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic data set with known parameters");
  add_common(synth_cmd, synth.common);
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--states", synth.states, "Hidden states")->capture_default_str();
  synth_cmd->add_option("--stations", synth.stations, "Stations")->capture_default_str();
  synth_cmd->add_option("--days", synth.days, "Days")->capture_default_str();
  synth_cmd->add_option("--x-count", synth.x_count, "Transition covariates")->capture_default_str();
  synth_cmd->add_option("--w-count", synth.w_count, "Emission covariates")->capture_default_str();
  synth_cmd->add_option("--missing", synth.missing, "Fraction of cells to mask")->capture_default_str();
  synth_cmd->add_option("--autocorrelation", synth.autocorrelation, "AR(1) coefficient of the covariates")
      ->capture_default_str();

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Pairwise occurrence log-odds and rank correlations");
  add_common(diag_cmd, diag.common);
  diag_cmd->add_option("--obs", diag.obs, "First panel (e.g. observed)")->required();
  diag_cmd->add_option("--against", diag.against, "Second panel (e.g. simulated)")->required();
  diag_cmd->add_option("--out", diag.out, "Report path (default stdout)");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    merge_config_file(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);

    if (*fit_cmd) run_fit(fit, fit_cmd);
    if (*sim_cmd) run_simulate(sim);
    if (*fc_cmd) run_forecast(fc);
    if (*score_cmd) run_score(score);
    if (*synth_cmd) run_synth(synth);
    if (*diag_cmd) run_diagnose(diag);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error("usage", e.what(), 2);
  } catch (const nhmm::InputError& e) {
    return emit_error("input", e.what(), 2);
  } catch (const nhmm::ConfigError& e) {
    return emit_error("config", e.what(), 2);
  } catch (const nhmm::NumericalError& e) {
    return emit_error("numerical", e.what(), 3);
  } catch (const std::exception& e) {
    return emit_error("internal", e.what(), 1);
  }
  return 0;
}
