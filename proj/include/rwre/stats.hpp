#pragma once

// Estimators for the limit objects: the speed v = E|X_{tau_1}| / E[tau_1]
// from regeneration blocks, the CLT variance sigma^2 from the typed block
// covariance, a Kolmogorov normality check, and the geometric-tail fit for
// the first regeneration level.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rwre/regeneration.hpp"

namespace rwre {

struct SpeedEstimate {
  double v_hat = 0.0;
  double ci95 = 0.0;  // half-width
  std::size_t n_blocks = 0;
};

/// Ratio estimator (sum Z) / (sum Y) with a delta-method 95% CI from the
/// block (Y, Z) covariance.
inline SpeedEstimate estimate_speed(const std::vector<BlockRow>& blocks) {
  const std::size_t n = blocks.size();
  if (n < 30)
    throw std::runtime_error("insufficient-blocks: need >= 30 blocks");
  double sy = 0.0, sz = 0.0;
  for (const auto& b : blocks) {
    sy += static_cast<double>(b.y);
    sz += static_cast<double>(b.z);
  }
  const double ybar = sy / n, zbar = sz / n;
  const double v = sz / sy;
  double syy = 0.0, szz = 0.0, szy = 0.0;
  for (const auto& b : blocks) {
    const double dy = static_cast<double>(b.y) - ybar;
    const double dz = static_cast<double>(b.z) - zbar;
    syy += dy * dy;
    szz += dz * dz;
    szy += dz * dy;
  }
  const double denom = static_cast<double>(n - 1);
  const double var_ratio =
      (szz / denom - 2.0 * v * (szy / denom) + v * v * (syy / denom)) /
      (static_cast<double>(n) * ybar * ybar);
  SpeedEstimate est;
  est.v_hat = v;
  est.ci95 = 1.96 * std::sqrt(std::max(0.0, var_ratio));
  est.n_blocks = n;
  return est;
}

struct CltEstimate {
  double sigma2_hat = 0.0;
  std::vector<double> sigma_typed;  // d*d typed block covariance, row-major
  double etau_hat = 0.0;
  std::size_t n_blocks = 0;
  int degree = 0;
};

/// Typed block covariance and the CLT variance. Per block exactly one
/// type fires, so W_k(s) = (Z_k - v Y_k) 1{type = s}; sigma^2 is
/// (1^t Sigma 1) / E[tau_1]. The untyped shortcut Var(Z - vY)/E[tau_1]
/// must agree to numerical tolerance; the collapse is asserted here.
inline CltEstimate estimate_sigma2(const std::vector<BlockRow>& blocks,
                                   double v_hat, int degree) {
  const std::size_t n = blocks.size();
  if (n < 100)
    throw std::runtime_error("insufficient-blocks: need >= 100 blocks");
  if (!(v_hat > 0.0) || v_hat > 1.0)
    throw std::invalid_argument("invalid-input: v_hat must lie in (0, 1]");
  const std::size_t d = static_cast<std::size_t>(degree);

  std::vector<double> mean(d, 0.0);
  double sy = 0.0;
  for (const auto& b : blocks) {
    const double w = static_cast<double>(b.z) - v_hat * static_cast<double>(b.y);
    mean[static_cast<std::size_t>(b.type)] += w;
    sy += static_cast<double>(b.y);
  }
  for (double& m : mean) m /= static_cast<double>(n);

  std::vector<double> cov(d * d, 0.0);
  double scalar_var = 0.0, scalar_mean = 0.0;
  for (const auto& b : blocks) {
    const double w = static_cast<double>(b.z) - v_hat * static_cast<double>(b.y);
    scalar_mean += w;
    std::vector<double> row(d, 0.0);
    row[static_cast<std::size_t>(b.type)] = w;
    for (std::size_t s = 0; s < d; ++s)
      for (std::size_t u = 0; u < d; ++u)
        cov[s * d + u] += (row[s] - mean[s]) * (row[u] - mean[u]);
  }
  scalar_mean /= static_cast<double>(n);
  for (const auto& b : blocks) {
    const double w = static_cast<double>(b.z) - v_hat * static_cast<double>(b.y);
    scalar_var += (w - scalar_mean) * (w - scalar_mean);
  }
  const double denom = static_cast<double>(n - 1);
  for (double& c : cov) c /= denom;
  scalar_var /= denom;

  double quad = 0.0;  // 1^t Sigma 1
  for (double c : cov) quad += c;
  if (std::abs(quad - scalar_var) > 1e-9 * std::max(1.0, scalar_var))
    throw std::logic_error("typed covariance does not collapse to Var(Z - vY)");

  CltEstimate est;
  est.sigma_typed = std::move(cov);
  est.etau_hat = sy / static_cast<double>(n);
  est.sigma2_hat = std::max(0.0, quad) / est.etau_hat;
  est.n_blocks = n;
  est.degree = degree;
  return est;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct NormalityResult {
  double ks_distance = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::size_t m = 0;
};

/// Kolmogorov sup-distance of the standardized sample to the standard
/// normal CDF; passes iff D_m <= c(alpha)/sqrt(m) with c(0.05) = 1.36.
/// `estimated_params` widens the threshold by the slack factor 1.2 when
/// the standardization constants are themselves estimates.
inline NormalityResult normality_check(std::vector<double> samples, double mean0,
                                       double var0, bool estimated_params = false,
                                       double c_alpha = 1.36) {
  if (!(var0 > 0.0)) throw std::invalid_argument("invalid-input: var0 <= 0");
  const std::size_t m = samples.size();
  if (m < 100) throw std::invalid_argument("invalid-input: need >= 100 samples");
  const double sd = std::sqrt(var0);
  for (double& x : samples) x = (x - mean0) / sd;
  std::sort(samples.begin(), samples.end());
  double dist = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double phi = normal_cdf(samples[i]);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(m) - phi;
    const double lo = phi - static_cast<double>(i) / static_cast<double>(m);
    dist = std::max(dist, std::max(hi, lo));
  }
  NormalityResult res;
  res.ks_distance = dist;
  res.threshold =
      (estimated_params ? 1.2 : 1.0) * c_alpha / std::sqrt(static_cast<double>(m));
  res.pass = dist <= res.threshold;
  res.m = m;
  return res;
}

struct TailFit {
  bool degenerate = false;
  double slope = 0.0;        // of log survival vs level
  double slope_stderr = 0.0;
  double gamma_hat = 1.0;    // exp(slope * stride)
  std::vector<std::pair<double, double>> points;  // (level, survival)
};

/// Least-squares slope of the log empirical survival of l_1, sampled at
/// stride multiples over the range where survival >= 20/sample-size.
inline TailFit l1_tail_fit(const std::vector<double>& l1_samples, int stride) {
  if (l1_samples.size() < 1000)
    throw std::invalid_argument("invalid-input: need >= 1000 samples");
  if (stride < 1) throw std::invalid_argument("invalid-input: stride >= 1");
  const double n = static_cast<double>(l1_samples.size());
  std::vector<double> sorted = l1_samples;
  std::sort(sorted.begin(), sorted.end());
  TailFit fit;
  if (sorted.front() == sorted.back()) {
    fit.degenerate = true;
    return fit;
  }
  const double floor_count = 20.0;
  std::vector<double> xs, ys;
  for (int mult = 1;; ++mult) {
    const double t = static_cast<double>(mult * stride);
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
    const double surv = static_cast<double>(sorted.end() - it) / n;
    if (surv * n < floor_count) break;
    xs.push_back(t);
    ys.push_back(std::log(surv));
    fit.points.emplace_back(t, surv);
  }
  if (xs.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  const std::size_t m = xs.size();
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= static_cast<double>(m);
  ybar /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  fit.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double pred = ybar + fit.slope * (xs[i] - xbar);
    rss += (ys[i] - pred) * (ys[i] - pred);
  }
  fit.slope_stderr =
      m > 2 ? std::sqrt(rss / (static_cast<double>(m) - 2.0) / sxx) : 0.0;
  fit.gamma_hat = std::exp(fit.slope * static_cast<double>(stride));
  return fit;
}

/// Lag-1 autocorrelation; used to probe block independence.
inline double lag1_autocorrelation(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 3) throw std::invalid_argument("invalid-input: need >= 3 samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    den += (xs[i] - mean) * (xs[i] - mean);
    if (i + 1 < n) num += (xs[i] - mean) * (xs[i + 1] - mean);
  }
  return num / den;
}

}  // namespace rwre
