#include "nhmm/store.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nhmm/errors.hpp"

namespace nhmm {

namespace fs = std::filesystem;
using json = nlohmann::json;

void McmcConfig::validate() const {
  if (states < 1) throw ConfigError("number of states must be at least 1");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (thinning < 1) throw ConfigError("thinning must be at least 1");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) throw ConfigError("burn-in fraction must lie in [0, 1)");
  if (threads < 0) throw ConfigError("thread count must be non-negative");
}

long McmcConfig::burn_in() const {
  return static_cast<long>(std::floor(burn_in_fraction * static_cast<double>(iterations)));
}

std::pair<TransitionCoefficients, EmissionParams> posterior_mean(const PosteriorStore& store) {
  if (store.size() == 0) throw InputError("posterior store is empty");
  TransitionCoefficients coeffs = store.zeta.front();
  EmissionParams params = store.emission.front();
  for (std::size_t n = 1; n < store.size(); ++n) {
    coeffs.zeta += store.zeta[n].zeta;
    params.lambda[0] += store.emission[n].lambda[0];
    params.lambda[1] += store.emission[n].lambda[1];
    params.beta0 += store.emission[n].beta0;
    params.beta1 += store.emission[n].beta1;
    params.gamma += store.emission[n].gamma;
  }
  const double inv = 1.0 / static_cast<double>(store.size());
  coeffs.zeta *= inv;
  params.lambda[0] *= inv;
  params.lambda[1] *= inv;
  params.beta0 *= inv;
  params.beta1 *= inv;
  params.gamma *= inv;
  return {coeffs, params};
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw InputError("cannot write " + path.string());
    out_ << header << '\n';
  }

  void row(std::initializer_list<long> index, double value) {
    line_.clear();
    char buf[32];
    for (long i : index) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), i);
      line_.append(buf, res.ptr);
      line_.push_back(',');
    }
    line_ += format_double(value);
    line_.push_back('\n');
    out_ << line_;
  }

 private:
  std::ofstream out_;
  std::string line_;
};

struct CsvRow {
  std::vector<long> index;
  double value = 0.0;
};

std::vector<CsvRow> read_family(const fs::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw InputError("missing store file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw InputError(path.string() + ": expected header '" + header + "'");
  }
  const auto fields = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::vector<CsvRow> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    CsvRow row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t f = 0; f < fields; ++f) {
      const char* stop = f + 1 < fields ? std::find(p, end, ',') : end;
      std::from_chars_result res{};
      if (f + 1 < fields) {
        long v = 0;
        res = std::from_chars(p, stop, v);
        row.index.push_back(v);
      } else {
        res = std::from_chars(p, stop, row.value);
      }
      if (res.ec != std::errc() || res.ptr != stop) {
        throw InputError(path.string() + ": malformed line " + std::to_string(line_no));
      }
      p = stop == end ? end : stop + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json scaling_json(const std::vector<std::string>& names, const std::vector<Standardization>& scaling) {
  json out = json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Standardization s = i < scaling.size() ? scaling[i] : Standardization{};
    out.push_back({{"name", names[i]}, {"mean", s.mean}, {"scale", s.scale}});
  }
  return out;
}

void read_scaling(const json& arr, std::vector<std::string>& names, std::vector<Standardization>& scaling) {
  for (const auto& item : arr) {
    names.push_back(item.at("name").get<std::string>());
    scaling.push_back({item.at("mean").get<double>(), item.at("scale").get<double>()});
  }
}

void check_index(bool ok, const fs::path& path) {
  if (!ok) throw InputError(path.string() + ": index out of range");
}

}  // namespace

void save_store(const PosteriorStore& store, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& d = store.dims;

  json manifest;
  manifest["format"] = "nhmm-store-1";
  manifest["dimensions"] = {{"states", d.states},   {"stations", d.stations}, {"w_count", d.w_count},
                            {"x_count", d.x_count}, {"days", d.days},         {"draws", store.size()}};
  manifest["config"] = {{"states", store.config.states},
                        {"iterations", store.config.iterations},
                        {"burn_in_fraction", store.config.burn_in_fraction},
                        {"thinning", store.config.thinning},
                        {"seed", store.config.seed},
                        {"threads", store.config.threads},
                        {"store_states", store.config.store_states},
                        {"store_imputed", store.config.store_imputed}};
  manifest["station_ids"] = store.station_ids;
  manifest["x_covariates"] = scaling_json(store.x_names, store.x_scaling);
  manifest["w_covariates"] = scaling_json(store.w_names, store.w_scaling);
  manifest["diagnostics"] = {{"cutpoint_retained", store.cutpoint_retained}, {"ridge_jitter", store.ridge_jitter}};
  manifest["missing_cells"] = store.missing_cells.size();
  {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }

  CsvWriter zeta(dir / "zeta.csv", "draw,to,from_or_covariate,value");
  CsvWriter lambda(dir / "lambda.csv", "draw,component,state,station,value");
  CsvWriter beta0(dir / "beta0.csv", "draw,state,station,value");
  CsvWriter beta1(dir / "beta1.csv", "draw,covariate,station,value");
  CsvWriter gamma(dir / "gamma.csv", "draw,station,value");
  CsvWriter loglik(dir / "loglik.csv", "draw,value");
  CsvWriter final_state(dir / "final_state.csv", "draw,value");
  for (std::size_t n = 0; n < store.size(); ++n) {
    const long draw = static_cast<long>(n) + 1;
    const auto& z = store.zeta[n].zeta;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (Eigen::Index j = 0; j < z.cols(); ++j) zeta.row({draw, i + 1, j + 1}, z(i, j));
    }
    const auto& e = store.emission[n];
    for (long c = 0; c < 2; ++c) {
      for (Eigen::Index k = 0; k < e.beta0.rows(); ++k) {
        for (Eigen::Index s = 0; s < e.beta0.cols(); ++s) {
          lambda.row({draw, c + 1, k + 1, s + 1}, e.lambda[static_cast<std::size_t>(c)](k, s));
        }
      }
    }
    for (Eigen::Index k = 0; k < e.beta0.rows(); ++k) {
      for (Eigen::Index s = 0; s < e.beta0.cols(); ++s) beta0.row({draw, k + 1, s + 1}, e.beta0(k, s));
    }
    for (Eigen::Index a = 0; a < e.beta1.rows(); ++a) {
      for (Eigen::Index s = 0; s < e.beta1.cols(); ++s) beta1.row({draw, a + 1, s + 1}, e.beta1(a, s));
    }
    for (Eigen::Index s = 0; s < e.gamma.size(); ++s) gamma.row({draw, s + 1}, e.gamma[s]);
    loglik.row({draw}, store.log_likelihood[n]);
    final_state.row({draw}, store.final_state[n] + 1);
  }

  CsvWriter counts(dir / "state_counts.csv", "day,state,value");
  for (Eigen::Index t = 0; t < store.state_counts.rows(); ++t) {
    for (Eigen::Index k = 0; k < store.state_counts.cols(); ++k) counts.row({t + 1, k + 1}, store.state_counts(t, k));
  }
  CsvWriter missing(dir / "missing_cells.csv", "cell,day,value");
  for (std::size_t c = 0; c < store.missing_cells.size(); ++c) {
    missing.row({static_cast<long>(c) + 1, store.missing_cells[c].day + 1}, store.missing_cells[c].station + 1);
  }
  if (store.config.store_states) {
    CsvWriter states(dir / "states.csv", "draw,day,value");
    for (std::size_t n = 0; n < store.states.size(); ++n) {
      for (std::size_t t = 0; t < store.states[n].size(); ++t) {
        states.row({static_cast<long>(n) + 1, static_cast<long>(t) + 1}, store.states[n][t] + 1);
      }
    }
  }
  if (store.config.store_imputed) {
    CsvWriter imputed(dir / "imputed.csv", "draw,cell,value");
    for (std::size_t n = 0; n < store.imputed.size(); ++n) {
      for (std::size_t c = 0; c < store.imputed[n].size(); ++c) {
        imputed.row({static_cast<long>(n) + 1, static_cast<long>(c) + 1}, store.imputed[n][c]);
      }
    }
  }
}

PosteriorStore load_store(const fs::path& dir) {
  json manifest;
  {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw InputError("missing store manifest in " + dir.string());
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw InputError("malformed store manifest: " + std::string(e.what()));
    }
  }

  PosteriorStore store;
  std::size_t draws = 0;
  std::size_t missing_count = 0;
  try {
    if (manifest.at("format") != "nhmm-store-1") throw InputError("unsupported store format");
    const auto& dm = manifest.at("dimensions");
    store.dims.states = dm.at("states").get<int>();
    store.dims.stations = dm.at("stations").get<int>();
    store.dims.w_count = dm.at("w_count").get<int>();
    store.dims.x_count = dm.at("x_count").get<int>();
    store.dims.days = dm.at("days").get<long>();
    draws = dm.at("draws").get<std::size_t>();
    const auto& c = manifest.at("config");
    store.config.states = c.at("states").get<int>();
    store.config.iterations = c.at("iterations").get<long>();
    store.config.burn_in_fraction = c.at("burn_in_fraction").get<double>();
    store.config.thinning = c.at("thinning").get<long>();
    store.config.seed = c.at("seed").get<std::uint64_t>();
    store.config.threads = c.at("threads").get<int>();
    store.config.store_states = c.at("store_states").get<bool>();
    store.config.store_imputed = c.at("store_imputed").get<bool>();
    store.station_ids = manifest.at("station_ids").get<std::vector<std::string>>();
    read_scaling(manifest.at("x_covariates"), store.x_names, store.x_scaling);
    read_scaling(manifest.at("w_covariates"), store.w_names, store.w_scaling);
    store.cutpoint_retained = manifest.at("diagnostics").at("cutpoint_retained").get<long>();
    store.ridge_jitter = manifest.at("diagnostics").at("ridge_jitter").get<long>();
    missing_count = manifest.at("missing_cells").get<std::size_t>();
  } catch (const json::exception& e) {
    throw InputError("malformed store manifest: " + std::string(e.what()));
  }

  const auto& d = store.dims;
  if (d.states < 1 || d.stations < 1 || d.w_count < 0 || d.x_count < 0 || d.days < 1) {
    throw InputError("store manifest has invalid dimensions");
  }
  store.zeta.assign(draws, TransitionCoefficients(d.states, d.x_count));
  store.emission.assign(draws, EmissionParams(d.states, d.stations, d.w_count));
  store.log_likelihood.assign(draws, 0.0);
  store.final_state.assign(draws, 0);

  auto in_draws = [&](long n) { return n >= 1 && static_cast<std::size_t>(n) <= draws; };

  fs::path path = dir / "zeta.csv";
  for (const auto& r : read_family(path, "draw,to,from_or_covariate,value")) {
    check_index(in_draws(r.index[0]) && r.index[1] >= 1 && r.index[1] <= d.states && r.index[2] >= 1 &&
                    r.index[2] <= d.states + d.x_count,
                path);
    store.zeta[static_cast<std::size_t>(r.index[0] - 1)].zeta(r.index[1] - 1, r.index[2] - 1) = r.value;
  }
  path = dir / "lambda.csv";
  for (const auto& r : read_family(path, "draw,component,state,station,value")) {
    check_index(in_draws(r.index[0]) && (r.index[1] == 1 || r.index[1] == 2) && r.index[2] >= 1 &&
                    r.index[2] <= d.states && r.index[3] >= 1 && r.index[3] <= d.stations,
                path);
    store.emission[static_cast<std::size_t>(r.index[0] - 1)].lambda[static_cast<std::size_t>(r.index[1] - 1)](
        r.index[2] - 1, r.index[3] - 1) = r.value;
  }
  path = dir / "beta0.csv";
  for (const auto& r : read_family(path, "draw,state,station,value")) {
    check_index(in_draws(r.index[0]) && r.index[1] >= 1 && r.index[1] <= d.states && r.index[2] >= 1 &&
                    r.index[2] <= d.stations,
                path);
    store.emission[static_cast<std::size_t>(r.index[0] - 1)].beta0(r.index[1] - 1, r.index[2] - 1) = r.value;
  }
  path = dir / "beta1.csv";
  for (const auto& r : read_family(path, "draw,covariate,station,value")) {
    check_index(in_draws(r.index[0]) && r.index[1] >= 1 && r.index[1] <= d.w_count && r.index[2] >= 1 &&
                    r.index[2] <= d.stations,
                path);
    store.emission[static_cast<std::size_t>(r.index[0] - 1)].beta1(r.index[1] - 1, r.index[2] - 1) = r.value;
  }
  path = dir / "gamma.csv";
  for (const auto& r : read_family(path, "draw,station,value")) {
    check_index(in_draws(r.index[0]) && r.index[1] >= 1 && r.index[1] <= d.stations, path);
    store.emission[static_cast<std::size_t>(r.index[0] - 1)].gamma[r.index[1] - 1] = r.value;
  }
  path = dir / "loglik.csv";
  for (const auto& r : read_family(path, "draw,value")) {
    check_index(in_draws(r.index[0]), path);
    store.log_likelihood[static_cast<std::size_t>(r.index[0] - 1)] = r.value;
  }
  path = dir / "final_state.csv";
  for (const auto& r : read_family(path, "draw,value")) {
    check_index(in_draws(r.index[0]) && r.value >= 1 && r.value <= d.states, path);
    store.final_state[static_cast<std::size_t>(r.index[0] - 1)] = static_cast<int>(r.value) - 1;
  }
  path = dir / "state_counts.csv";
  store.state_counts = Eigen::MatrixXi::Zero(d.days, d.states);
  for (const auto& r : read_family(path, "day,state,value")) {
    check_index(r.index[0] >= 1 && r.index[0] <= d.days && r.index[1] >= 1 && r.index[1] <= d.states, path);
    store.state_counts(r.index[0] - 1, r.index[1] - 1) = static_cast<int>(r.value);
  }
  path = dir / "missing_cells.csv";
  store.missing_cells.assign(missing_count, CellIndex{});
  for (const auto& r : read_family(path, "cell,day,value")) {
    check_index(r.index[0] >= 1 && static_cast<std::size_t>(r.index[0]) <= missing_count && r.index[1] >= 1 &&
                    r.index[1] <= d.days && r.value >= 1 && r.value <= d.stations,
                path);
    store.missing_cells[static_cast<std::size_t>(r.index[0] - 1)] = {r.index[1] - 1, static_cast<long>(r.value) - 1};
  }
  if (store.config.store_states) {
    path = dir / "states.csv";
    store.states.assign(draws, StateChain{std::vector<int>(static_cast<std::size_t>(d.days), 0)});
    for (const auto& r : read_family(path, "draw,day,value")) {
      check_index(in_draws(r.index[0]) && r.index[1] >= 1 && r.index[1] <= d.days && r.value >= 1 &&
                      r.value <= d.states,
                  path);
      store.states[static_cast<std::size_t>(r.index[0] - 1)][static_cast<std::size_t>(r.index[1] - 1)] =
          static_cast<int>(r.value) - 1;
    }
  }
  if (store.config.store_imputed) {
    path = dir / "imputed.csv";
    store.imputed.assign(draws, std::vector<double>(missing_count, 0.0));
    for (const auto& r : read_family(path, "draw,cell,value")) {
      check_index(in_draws(r.index[0]) && r.index[1] >= 1 && static_cast<std::size_t>(r.index[1]) <= missing_count,
                  path);
      store.imputed[static_cast<std::size_t>(r.index[0] - 1)][static_cast<std::size_t>(r.index[1] - 1)] = r.value;
    }
  }
  for (std::size_t n = 0; n < draws; ++n) {
    store.zeta[n].validate();
    store.emission[n].validate();
  }
  return store;
}

}  // namespace nhmm
