#pragma once

// Multivariate AR(1) lateral-inflow model.
//
// Standardized anomalies follow
//
//   (a_{t+1} - mu_{t+1}) / sigma_{t+1}
//       = rho_t (a_t - mu_t) / sigma_t + sqrt(1 - rho_t^2) xi_t
//
// per hydro, with xi_t standard normal and spatially correlated across
// hydros.  Parameters are periodic over `seasons` stages-of-year; rho for
// season p links season p to season p + 1.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gtep {

class DegenerateInflowModel : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct InflowModel {
  int seasons = 1;
  // Indexed [season][hydro].
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> stddev;
  std::vector<std::vector<double>> serial_corr;
  Eigen::MatrixXd spatial_corr;  // hydro x hydro

  int hydro_count() const {
    return mean.empty() ? 0 : static_cast<int>(mean.front().size());
  }
  int season_of(int stage) const { return stage % seasons; }  // 0-based stage

  // Independent hydros with the same parameters in every season.
  static InflowModel stationary(std::vector<double> mu, std::vector<double> sigma,
                                std::vector<double> rho) {
    InflowModel m;
    const auto n = static_cast<Eigen::Index>(mu.size());
    m.mean = {std::move(mu)};
    m.stddev = {std::move(sigma)};
    m.serial_corr = {std::move(rho)};
    m.spatial_corr = Eigen::MatrixXd::Identity(n, n);
    return m;
  }

  bool operator==(const InflowModel& o) const {
    return seasons == o.seasons && mean == o.mean && stddev == o.stddev &&
           serial_corr == o.serial_corr && spatial_corr.rows() == o.spatial_corr.rows() &&
           spatial_corr.cols() == o.spatial_corr.cols() &&
           (spatial_corr.size() == 0 || spatial_corr == o.spatial_corr);
  }
};

using NoiseDraw = std::vector<double>;

// Problems with the model's shape and parameter ranges; empty when valid.
inline std::vector<std::string> check_inflow_model(const InflowModel& m,
                                                   int hydros) {
  std::vector<std::string> out;
  if (m.seasons < 1) out.push_back("seasons must be >= 1");
  auto shape_ok = [&](const std::vector<std::vector<double>>& v,
                      const char* what) {
    if (static_cast<int>(v.size()) != m.seasons) {
      out.push_back(std::string(what) + " must have one row per season");
      return false;
    }
    for (const auto& row : v) {
      if (static_cast<int>(row.size()) != hydros) {
        out.push_back(std::string(what) + " must have one entry per hydro");
        return false;
      }
    }
    return true;
  };
  const bool ok = shape_ok(m.mean, "mean") & shape_ok(m.stddev, "stddev") &
                  shape_ok(m.serial_corr, "serial_corr");
  if (ok) {
    for (int p = 0; p < m.seasons; ++p) {
      for (int i = 0; i < hydros; ++i) {
        const std::string where =
            "[season " + std::to_string(p) + "][hydro " + std::to_string(i) + "]";
        if (!std::isfinite(m.mean[p][i])) out.push_back("mean" + where + " not finite");
        if (!(m.stddev[p][i] >= 0.0)) out.push_back("stddev" + where + " must be >= 0");
        if (!(std::abs(m.serial_corr[p][i]) <= 1.0))
          out.push_back("serial_corr" + where + " must lie in [-1, 1]");
        if (m.stddev[p][i] == 0.0 && m.serial_corr[p][i] != 0.0)
          out.push_back("serial_corr" + where +
                        " must be 0 when stddev is 0 (degenerate model)");
      }
    }
  }
  if (m.spatial_corr.rows() != hydros || m.spatial_corr.cols() != hydros) {
    out.push_back("spatial_corr must be hydros x hydros");
  } else if (hydros > 0) {
    for (int i = 0; i < hydros; ++i) {
      if (std::abs(m.spatial_corr(i, i) - 1.0) > 1e-9)
        out.push_back("spatial_corr must have unit diagonal");
      for (int j = 0; j < hydros; ++j)
        if (std::abs(m.spatial_corr(i, j) - m.spatial_corr(j, i)) > 1e-9)
          out.push_back("spatial_corr must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.spatial_corr);
    if (es.eigenvalues().minCoeff() < -1e-8)
      out.push_back("spatial_corr must be positive semidefinite");
  }
  return out;
}

struct ConditionedInflow {
  std::vector<double> inflow;
  // d inflow_i / d current_i (zero where the clamp at 0 is active).
  std::vector<double> sensitivity;
  int clamp_events = 0;
};

// Next-stage inflow for a transition out of 0-based `stage`.
inline ConditionedInflow condition_next(const InflowModel& m, int stage,
                                        std::span<const double> current,
                                        std::span<const double> noise) {
  const int n = m.hydro_count();
  if (static_cast<int>(current.size()) != n || static_cast<int>(noise.size()) != n)
    throw std::invalid_argument("condition_next: dimension mismatch");
  const int p = m.season_of(stage);
  const int q = m.season_of(stage + 1);
  ConditionedInflow out;
  out.inflow.resize(n);
  out.sensitivity.resize(n);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(current[i]))
      throw std::invalid_argument("condition_next: non-finite current inflow");
    const double sd_now = m.stddev[p][i];
    const double rho = m.serial_corr[p][i];
    double anomaly = 0.0;
    double slope = 0.0;
    if (sd_now > 0.0) {
      anomaly = (current[i] - m.mean[p][i]) / sd_now;
      slope = rho * m.stddev[q][i] / sd_now;
    } else if (rho != 0.0) {
      throw DegenerateInflowModel("hydro " + std::to_string(i) +
                                  ": zero stddev with nonzero serial correlation");
    }
    const double z = rho * anomaly + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * noise[i];
    double a = m.mean[q][i] + m.stddev[q][i] * z;
    if (a < 0.0) {
      a = 0.0;
      slope = 0.0;
      ++out.clamp_events;
    }
    out.inflow[i] = a;
    out.sensitivity[i] = slope;
  }
  return out;
}

// Symmetric square root F of a PSD correlation matrix (F F' = C), with
// eigenvalues floored at 1e-10.
inline Eigen::MatrixXd spatial_factor(const Eigen::MatrixXd& corr) {
  if (corr.rows() == 0) return corr;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spatial correlation eigen-decomposition failed");
  Eigen::VectorXd lambda = es.eigenvalues();
  if (lambda.minCoeff() < -1e-8)
    throw std::domain_error("spatial correlation matrix is not positive semidefinite");
  for (auto& l : lambda) l = std::sqrt(std::max(l, 1e-10));
  return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

inline std::vector<NoiseDraw> sample_noise(const InflowModel& m, int count,
                                           std::mt19937_64& rng) {
  if (count < 1) throw std::invalid_argument("sample_noise: count must be >= 1");
  const int n = m.hydro_count();
  const Eigen::MatrixXd f = spatial_factor(m.spatial_corr);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<NoiseDraw> draws(count, NoiseDraw(n));
  Eigen::VectorXd z(n);
  for (auto& d : draws) {
    for (int i = 0; i < n; ++i) z[i] = normal(rng);
    const Eigen::VectorXd c = f * z;
    for (int i = 0; i < n; ++i) d[i] = c[i];
  }
  return draws;
}

inline std::vector<NoiseDraw> sample_noise(const InflowModel& m, int count,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_noise(m, count, rng);
}

// ---------------------------------------------------------------------------
// Method-of-moments fit.

struct InflowFit {
  InflowModel model;
  std::vector<std::string> warnings;
};

// series[i][k]: observation k of hydro i; observation k belongs to season
// k mod seasons.
inline InflowFit fit_ar1(const std::vector<std::vector<double>>& series,
                         int seasons = 1) {
  if (seasons < 1) throw std::invalid_argument("fit_ar1: seasons must be >= 1");
  const int n = static_cast<int>(series.size());
  if (n == 0) throw std::invalid_argument("fit_ar1: no hydro series");
  const int len = static_cast<int>(series.front().size());
  for (const auto& s : series)
    if (static_cast<int>(s.size()) != len)
      throw std::invalid_argument("fit_ar1: series lengths differ");
  for (int p = 0; p < seasons; ++p) {
    const int count = len > p ? (len - p + seasons - 1) / seasons : 0;
    if (count < 2)
      throw std::invalid_argument("fit_ar1: need >= 2 observations per season");
  }

  InflowFit fit;
  InflowModel& m = fit.model;
  m.seasons = seasons;
  m.mean.assign(seasons, std::vector<double>(n, 0.0));
  m.stddev.assign(seasons, std::vector<double>(n, 0.0));
  m.serial_corr.assign(seasons, std::vector<double>(n, 0.0));

  for (int i = 0; i < n; ++i) {
    const auto& s = series[i];
    for (int p = 0; p < seasons; ++p) {
      double sum = 0.0;
      int cnt = 0;
      for (int k = p; k < len; k += seasons) {
        sum += s[k];
        ++cnt;
      }
      const double mu = sum / cnt;
      double ss = 0.0;
      for (int k = p; k < len; k += seasons) ss += (s[k] - mu) * (s[k] - mu);
      m.mean[p][i] = mu;
      m.stddev[p][i] = std::sqrt(ss / (cnt - 1));
      // Exactly constant data gives a tiny nonzero rounding residue.
      if (m.stddev[p][i] <= 1e-12 * std::max(1.0, std::abs(mu))) m.stddev[p][i] = 0.0;
    }
    for (int p = 0; p < seasons; ++p) {
      const int q = (p + 1) % seasons;
      const double sp = m.stddev[p][i];
      const double sq = m.stddev[q][i];
      if (sp == 0.0 || sq == 0.0) {
        fit.warnings.push_back("hydro " + std::to_string(i) + " season " +
                               std::to_string(p) +
                               ": constant series, serial correlation set to 0");
        continue;
      }
      double acc = 0.0;
      int pairs = 0;
      for (int k = p; k + 1 < len; k += seasons) {
        acc += (s[k] - m.mean[p][i]) * (s[k + 1] - m.mean[q][i]);
        ++pairs;
      }
      const double rho = pairs > 1 ? acc / ((pairs - 1) * sp * sq) : 0.0;
      m.serial_corr[p][i] = std::clamp(rho, -1.0, 1.0);
    }
  }

  // Residual spatial correlation from standardized residuals.
  const int steps = len - 1;
  Eigen::MatrixXd resid = Eigen::MatrixXd::Zero(std::max(steps, 0), n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < steps; ++k) {
      const int p = k % seasons;
      const int q = (k + 1) % seasons;
      const double sp = m.stddev[p][i];
      const double sq = m.stddev[q][i];
      if (sp == 0.0 || sq == 0.0) continue;
      const double rho = m.serial_corr[p][i];
      const double z0 = (series[i][k] - m.mean[p][i]) / sp;
      const double z1 = (series[i][k + 1] - m.mean[q][i]) / sq;
      const double w = std::sqrt(std::max(0.0, 1.0 - rho * rho));
      resid(k, i) = w > 0.0 ? (z1 - rho * z0) / w : 0.0;
    }
  }
  m.spatial_corr = Eigen::MatrixXd::Identity(n, n);
  if (steps >= 2) {
    Eigen::MatrixXd centered = resid.rowwise() - resid.colwise().mean();
    Eigen::VectorXd norms = centered.colwise().norm();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (norms[i] == 0.0 || norms[j] == 0.0) continue;
        const double c = centered.col(i).dot(centered.col(j)) / (norms[i] * norms[j]);
        m.spatial_corr(i, j) = m.spatial_corr(j, i) = std::clamp(c, -1.0, 1.0);
      }
    }
  }
  return fit;
}

// Tabular history "stage,hydro,value" (header row optional).  Returns the
// series per hydro id ordered by stage; stages must be 1..N for every hydro.
inline std::map<std::string, std::vector<double>> read_inflow_history(
    std::istream& in) {
  std::map<std::string, std::map<long, double>> raw;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string stage_s, hydro, value_s;
    if (!std::getline(ss, stage_s, ',') || !std::getline(ss, hydro, ',') ||
        !std::getline(ss, value_s))
      throw std::runtime_error("inflow history line " + std::to_string(lineno) +
                               ": expected stage,hydro,value");
    if (lineno == 1 && stage_s == "stage") continue;
    try {
      const long stage = std::stol(stage_s);
      const double value = std::stod(value_s);
      if (!raw[hydro].emplace(stage, value).second)
        throw std::runtime_error("duplicate stage");
    } catch (const std::exception& e) {
      throw std::runtime_error("inflow history line " + std::to_string(lineno) +
                               ": " + e.what());
    }
  }
  std::map<std::string, std::vector<double>> out;
  for (auto& [hydro, by_stage] : raw) {
    long expect = 1;
    for (const auto& [stage, value] : by_stage) {
      if (stage != expect)
        throw std::runtime_error("inflow history for " + hydro +
                                 ": stages must be consecutive from 1");
      out[hydro].push_back(value);
      ++expect;
    }
  }
  return out;
}

}  // namespace gtep
