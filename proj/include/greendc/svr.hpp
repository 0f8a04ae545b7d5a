#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "greendc/errors.hpp"

namespace greendc {

// Support vector regression with an RBF kernel, trained by sequential
// minimal optimization on the beta formulation of the dual:
//
//   maximize  -1/2 b'Kb + y'b - eps * sum|b_i|
//   s.t.      sum b_i = 0,  -C <= b_i <= C
//
// Features and target are z-scored internally; C and the epsilon tube are
// interpreted in scaled space, matching the usual toolbox convention.

struct SvrParams {
  double c = 4.0;
  double epsilon_tube = 0.0;
  double gamma = 0.0;  // <= 0 selects the median-distance heuristic
  int max_steps = 200000;
  double tol = 1e-6;
};

class Svr {
public:
  static Svr fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                 const SvrParams& params = {}) {
    if (x.empty() || x.size() != y.size())
      throw InsufficientDataError("svr needs matching, non-empty x and y");
    const std::size_t n = x.size();
    const std::size_t d = x[0].size();
    for (const auto& row : x)
      if (row.size() != d) throw ConfigError("svr feature rows differ in width");
    if (params.c <= 0.0) throw ConfigError("svr C must be positive");
    if (params.epsilon_tube < 0.0) throw ConfigError("svr epsilon must be non-negative");

    Svr m;
    m.params_ = params;
    m.scale_features(x);
    m.scale_target(y);
    m.x_.resize(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        m.x_[i][j] = (x[i][j] - m.fmean_[j]) / m.fstd_[j];
    m.ys_.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.ys_[i] = (y[i] - m.ymean_) / m.ystd_;
    m.gamma_ = params.gamma > 0.0 ? params.gamma : m.median_gamma();
    m.solve();
    return m;
  }

  double predict(const std::vector<double>& x) const {
    if (x.size() != fmean_.size()) throw ConfigError("svr feature width mismatch");
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - fmean_[j]) / fstd_[j];
    double f = bias_;
    for (std::size_t i = 0; i < x_.size(); ++i)
      if (beta_[i] != 0.0) f += beta_[i] * kernel(x_[i], z);
    return f * ystd_ + ymean_;
  }

  // Dual objective in scaled space, for verification against direct solvers.
  double dual_objective() const {
    double obj = 0.0;
    for (std::size_t i = 0; i < beta_.size(); ++i)
      obj += ys_[i] * beta_[i] - 0.5 * beta_[i] * f_[i] -
             params_.epsilon_tube * std::abs(beta_[i]);
    return obj;
  }

  double gamma() const { return gamma_; }
  const std::vector<double>& beta() const { return beta_; }

private:
  double kernel(const std::vector<double>& a, const std::vector<double>& b) const {
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      double diff = a[j] - b[j];
      d2 += diff * diff;
    }
    return std::exp(-gamma_ * d2);
  }

  void scale_features(const std::vector<std::vector<double>>& x) {
    const std::size_t n = x.size(), d = x[0].size();
    fmean_.assign(d, 0.0);
    fstd_.assign(d, 1.0);
    for (const auto& row : x)
      for (std::size_t j = 0; j < d; ++j) fmean_[j] += row[j];
    for (std::size_t j = 0; j < d; ++j) fmean_[j] /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const auto& row : x)
      for (std::size_t j = 0; j < d; ++j) {
        double c = row[j] - fmean_[j];
        var[j] += c * c;
      }
    for (std::size_t j = 0; j < d; ++j) {
      double s = std::sqrt(var[j] / static_cast<double>(n));
      fstd_[j] = s > 1e-12 ? s : 1.0;
    }
  }

  void scale_target(const std::vector<double>& y) {
    const std::size_t n = y.size();
    ymean_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - ymean_) * (v - ymean_);
    double s = std::sqrt(var / static_cast<double>(n));
    ystd_ = s > 1e-12 ? s : 1.0;
  }

  // Median pairwise squared distance on scaled features; subsampled by
  // stride so huge inputs stay cheap.
  double median_gamma() const {
    const std::size_t n = x_.size();
    std::size_t stride = std::max<std::size_t>(1, n / 200);
    std::vector<double> d2s;
    for (std::size_t i = 0; i < n; i += stride)
      for (std::size_t j = i + stride; j < n; j += stride) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < x_[i].size(); ++k) {
          double diff = x_[i][k] - x_[j][k];
          d2 += diff * diff;
        }
        if (d2 > 0.0) d2s.push_back(d2);
      }
    if (d2s.empty()) return 1.0;
    std::nth_element(d2s.begin(), d2s.begin() + static_cast<std::ptrdiff_t>(d2s.size() / 2),
                     d2s.end());
    double med = d2s[d2s.size() / 2];
    return med > 0.0 ? 1.0 / med : 1.0;
  }

  void solve() {
    const std::size_t n = x_.size();
    const double c = params_.c;
    const double eps = params_.epsilon_tube;
    beta_.assign(n, 0.0);
    f_.assign(n, 0.0);  // f_ = K beta, kept incrementally
    k_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double v = kernel(x_[i], x_[j]);
        k_[i * n + j] = v;
        k_[j * n + i] = v;
      }

    auto up_rate = [&](std::size_t i) {
      double s = beta_[i] >= 0.0 ? 1.0 : -1.0;
      return ys_[i] - f_[i] - eps * s;
    };
    auto down_rate = [&](std::size_t i) {
      double s = beta_[i] > 0.0 ? 1.0 : -1.0;
      return ys_[i] - f_[i] - eps * s;
    };

    for (int step = 0; step < params_.max_steps; ++step) {
      // Most-violating pair: best ascent raising beta_i, lowering beta_j.
      std::size_t bi = n, bj = n;
      double best_up = -std::numeric_limits<double>::infinity();
      double best_dn = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (beta_[i] < c && up_rate(i) > best_up) {
          best_up = up_rate(i);
          bi = i;
        }
        if (beta_[i] > -c && down_rate(i) < best_dn) {
          best_dn = down_rate(i);
          bj = i;
        }
      }
      if (bi == n || bj == n || bi == bj) break;
      if (best_up - best_dn <= params_.tol) break;
      if (!pair_step(bi, bj)) break;
    }
    compute_bias();
  }

  // Exact maximization of the dual along beta_i += d, beta_j -= d, d >= 0.
  // Piecewise quadratic in d with kinks where beta_i + d or beta_j - d
  // crosses zero; evaluate the per-segment optima and kinks, keep the best.
  bool pair_step(std::size_t i, std::size_t j) {
    const std::size_t n = x_.size();
    const double c = params_.c;
    const double eps = params_.epsilon_tube;
    const double eta = k_[i * n + i] + k_[j * n + j] - 2.0 * k_[i * n + j];
    const double g0 = ys_[i] - ys_[j] - f_[i] + f_[j];
    const double dmax = std::min(c - beta_[i], beta_[j] + c);
    if (dmax <= 1e-12 * c) return false;

    auto phi = [&](double d) {
      return d * g0 - 0.5 * d * d * eta -
             eps * (std::abs(beta_[i] + d) - std::abs(beta_[i]) +
                    std::abs(beta_[j] - d) - std::abs(beta_[j]));
    };

    std::vector<double> cands{dmax};
    if (-beta_[i] > 0.0 && -beta_[i] < dmax) cands.push_back(-beta_[i]);
    if (beta_[j] > 0.0 && beta_[j] < dmax) cands.push_back(beta_[j]);
    if (eta > 0.0) {
      // Segment sign patterns for (beta_i + d, beta_j - d). The epsilon term
      // slopes at eps * (si - sj) along the move: |beta_j - d| shrinks while
      // its sign holds positive.
      for (double si : {-1.0, 1.0})
        for (double sj : {-1.0, 1.0}) {
          double d = (g0 - eps * (si - sj)) / eta;
          if (d > 0.0 && d <= dmax && std::signbit(beta_[i] + d) == (si < 0.0) &&
              std::signbit(beta_[j] - d) == (sj < 0.0))
            cands.push_back(d);
        }
    }
    double best_d = 0.0, best_v = 0.0;
    for (double d : cands) {
      double v = phi(d);
      if (v > best_v) {
        best_v = v;
        best_d = d;
      }
    }
    if (best_d <= 0.0 || best_v <= 0.0) return false;
    beta_[i] += best_d;
    beta_[j] -= best_d;
    // Snap values that landed within rounding of a bound onto it so the
    // selection loop cannot spin on vanishing slack.
    for (std::size_t idx : {i, j}) {
      if (std::abs(beta_[idx] - c) < 1e-12 * c) beta_[idx] = c;
      if (std::abs(beta_[idx] + c) < 1e-12 * c) beta_[idx] = -c;
    }
    for (std::size_t k = 0; k < n; ++k)
      f_[k] += best_d * (k_[k * n + i] - k_[k * n + j]);
    return true;
  }

  void compute_bias() {
    const double c = params_.c;
    const double eps = params_.epsilon_tube;
    const double edge = 1e-8 * c;
    std::vector<double> cands;
    for (std::size_t i = 0; i < beta_.size(); ++i) {
      if (eps == 0.0) {
        if (std::abs(beta_[i]) < c - edge) cands.push_back(ys_[i] - f_[i]);
      } else if (beta_[i] > edge && beta_[i] < c - edge) {
        cands.push_back(ys_[i] - f_[i] - eps);
      } else if (beta_[i] < -edge && beta_[i] > -c + edge) {
        cands.push_back(ys_[i] - f_[i] + eps);
      }
    }
    if (cands.empty())
      for (std::size_t i = 0; i < beta_.size(); ++i) cands.push_back(ys_[i] - f_[i]);
    bias_ = std::accumulate(cands.begin(), cands.end(), 0.0) /
            static_cast<double>(cands.size());
  }

  SvrParams params_;
  std::vector<std::vector<double>> x_;  // scaled training features
  std::vector<double> ys_;              // scaled target
  std::vector<double> beta_;
  std::vector<double> f_;  // K beta
  std::vector<double> k_;  // dense kernel matrix
  double bias_ = 0.0;
  double gamma_ = 1.0;
  std::vector<double> fmean_, fstd_;
  double ymean_ = 0.0, ystd_ = 1.0;
};

}  // namespace greendc
