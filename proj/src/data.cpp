#include "nhmm/data.hpp"

#include <algorithm>
#include <cmath>

#include "nhmm/errors.hpp"

namespace nhmm {

ObservationPanel ObservationPanel::complete(Eigen::MatrixXd values) {
  ObservationPanel panel;
  panel.mask = BoolMatrix::Constant(values.rows(), values.cols(), true);
  panel.values = std::move(values);
  for (Eigen::Index s = 0; s < panel.values.cols(); ++s) {
    panel.station_ids.push_back("s" + std::to_string(s + 1));
  }
  return panel;
}

ObservationPanel ObservationPanel::slice(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > days()) throw InputError("panel slice out of range");
  ObservationPanel out;
  out.values = values.middleRows(first, count);
  out.mask = mask.middleRows(first, count);
  out.station_ids = station_ids;
  return out;
}

CovariateSet CovariateSet::empty(Eigen::Index days) {
  CovariateSet c;
  c.x.resize(days, 0);
  return c;
}

CovariateSet CovariateSet::slice(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > days()) throw InputError("covariate slice out of range");
  CovariateSet out = *this;
  out.x = x.middleRows(first, count);
  for (auto& m : out.w) m = m.middleRows(first, count).eval();
  return out;
}

void CovariateSet::validate(Eigen::Index days, Eigen::Index stations) const {
  if (x.rows() != days) {
    throw InputError("transition covariates have " + std::to_string(x.rows()) + " rows, expected " +
                     std::to_string(days));
  }
  if (!x.allFinite()) throw InputError("transition covariates contain non-finite values");
  for (std::size_t a = 0; a < w.size(); ++a) {
    if (w[a].rows() != days || w[a].cols() != stations) {
      throw InputError("emission covariate " + std::to_string(a + 1) + " has shape " +
                       std::to_string(w[a].rows()) + "x" + std::to_string(w[a].cols()) + ", expected " +
                       std::to_string(days) + "x" + std::to_string(stations));
    }
    if (!w[a].allFinite()) throw InputError("emission covariates contain non-finite values");
  }
}

namespace {

std::pair<double, double> moments(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  const auto n = static_cast<double>(m.size());
  const double mean = m.mean();
  const double ss = (m.array() - mean).square().sum();
  return {mean, n > 1 ? std::sqrt(ss / (n - 1)) : 0.0};
}

std::string label(const std::vector<std::string>& names, std::size_t i, const char* prefix) {
  return i < names.size() ? names[i] : prefix + std::to_string(i + 1);
}

}  // namespace

void standardize(CovariateSet& covariates, Eigen::Index training_rows) {
  const Eigen::Index rows = training_rows < 0 ? covariates.days() : training_rows;
  if (rows > covariates.days()) throw InputError("training rows exceed covariate length");
  covariates.x_scaling.assign(static_cast<std::size_t>(covariates.x_count()), Standardization{});
  covariates.w_scaling.assign(covariates.w.size(), Standardization{});
  for (Eigen::Index b = 0; b < covariates.x_count(); ++b) {
    const auto [mean, sd] = moments(covariates.x.col(b).head(rows));
    if (!(sd > 0.0)) {
      throw InputError("covariate '" + label(covariates.x_names, static_cast<std::size_t>(b), "x") +
                       "' is constant and cannot be standardized");
    }
    covariates.x_scaling[static_cast<std::size_t>(b)] = {mean, sd};
    covariates.x.col(b) = (covariates.x.col(b).array() - mean) / sd;
  }
  for (std::size_t a = 0; a < covariates.w.size(); ++a) {
    Eigen::MatrixXd& m = covariates.w[a];
    const auto [mean, sd] = moments(m.topRows(rows));
    if (!(sd > 0.0)) {
      throw InputError("covariate '" + label(covariates.w_names, a, "w") + "' is constant and cannot be standardized");
    }
    covariates.w_scaling[a] = {mean, sd};
    m = (m.array() - mean) / sd;
  }
}

void apply_scaling(CovariateSet& covariates, const std::vector<std::string>& x_names,
                   const std::vector<Standardization>& x_scaling, const std::vector<std::string>& w_names,
                   const std::vector<Standardization>& w_scaling) {
  auto reorder = [](const std::vector<std::string>& have, const std::vector<std::string>& want, const char* kind) {
    if (have.size() != want.size()) {
      throw InputError(std::string("expected ") + std::to_string(want.size()) + " " + kind + " covariates, got " +
                       std::to_string(have.size()));
    }
    std::vector<std::size_t> pos;
    for (const auto& name : want) {
      const auto it = std::find(have.begin(), have.end(), name);
      if (it == have.end()) throw InputError(std::string(kind) + " covariate '" + name + "' is missing");
      pos.push_back(static_cast<std::size_t>(it - have.begin()));
    }
    return pos;
  };
  const auto xpos = reorder(covariates.x_names, x_names, "transition");
  const auto wpos = reorder(covariates.w_names, w_names, "emission");

  Eigen::MatrixXd x(covariates.x.rows(), static_cast<Eigen::Index>(x_names.size()));
  for (std::size_t b = 0; b < xpos.size(); ++b) {
    const Standardization& sc = x_scaling.at(b);
    x.col(static_cast<Eigen::Index>(b)) =
        (covariates.x.col(static_cast<Eigen::Index>(xpos[b])).array() - sc.mean) / sc.scale;
  }
  std::vector<Eigen::MatrixXd> w;
  for (std::size_t a = 0; a < wpos.size(); ++a) {
    const Standardization& sc = w_scaling.at(a);
    w.push_back(((covariates.w[wpos[a]].array() - sc.mean) / sc.scale).matrix());
  }
  covariates.x = std::move(x);
  covariates.w = std::move(w);
  covariates.x_names = x_names;
  covariates.w_names = w_names;
  covariates.x_scaling = x_scaling;
  covariates.w_scaling = w_scaling;
}

ModelDims dims_of(const ObservationPanel& panel, const CovariateSet& covariates, int states) {
  ModelDims d;
  d.states = states;
  d.stations = static_cast<int>(panel.stations());
  d.w_count = static_cast<int>(covariates.w_count());
  d.x_count = static_cast<int>(covariates.x_count());
  d.days = static_cast<long>(panel.days());
  return d;
}

}  // namespace nhmm
