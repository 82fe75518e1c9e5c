#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dualhjb/cone.hpp"
#include "dualhjb/diagnostics.hpp"

namespace dualhjb {

/// Piecewise-constant market: on [grid[k], grid[k+1]) the excess return is
/// b[k] and the volatility matrix sigma[k]. Wealth fractions pi live in `cone`.
class MarketParams {
 public:
  MarketParams(std::vector<double> grid, std::vector<Eigen::VectorXd> b,
               std::vector<Eigen::MatrixXd> sigma, ConeSpec cone, double theta_floor);

  /// Single interval [0, T].
  static MarketParams constant(const Eigen::VectorXd& b, const Eigen::MatrixXd& sigma, double T,
                               ConeSpec cone, double theta_floor);
  /// Scalar market with one asset.
  static MarketParams scalar(double b, double sigma, double T, ConeSpec cone,
                             double theta_floor = 1e-3);

  int dim() const { return n_; }
  double horizon() const { return grid_.back(); }
  const std::vector<double>& grid() const { return grid_; }
  std::size_t intervals() const { return b_.size(); }
  /// k with t in [grid[k], grid[k+1]); t = T maps to the last interval.
  std::size_t interval(double t) const;

  const Eigen::VectorXd& b(std::size_t k) const { return b_[k]; }
  const Eigen::MatrixXd& sigma(std::size_t k) const { return sigma_[k]; }
  double condition_number(std::size_t k) const { return cond_[k]; }
  const ConeSpec& cone() const { return cone_; }
  double theta_floor() const { return theta_floor_; }

 private:
  int n_ = 0;
  std::vector<double> grid_;
  std::vector<Eigen::VectorXd> b_;
  std::vector<Eigen::MatrixXd> sigma_;
  std::vector<double> cond_;
  ConeSpec cone_;
  double theta_floor_ = 0.0;
};

/// KKT residuals of the cone minimization.
struct QpCertificate {
  double complementarity = 0.0;  // |pi_hat' Df| relative to |pi_hat||Df|
  double dual_feasibility = 0.0;  // distance of Df to K relative to |Df|
  double generator_violation = 0.0;  // max over generators q of (-q'Df)^+ / (|q||Df|)
};

struct ConeQpResult {
  Eigen::VectorXd pi_hat;
  Eigen::VectorXd theta_hat;
  QpCertificate certificate;
};

/// Minimizes |theta + sigma^{-1} v|^2 over v in `ktilde`; `primal_cone` (the
/// polar of ktilde) is used to certify Df(v) in K. Throws SolverError if the
/// certificate exceeds tol.
ConeQpResult solve_cone_qp(const Eigen::VectorXd& theta, const Eigen::MatrixXd& sigma,
                           const ConeSpec& ktilde, double tol = 1e-10);

/// Per-interval theta = sigma^{-1} b, the cone minimizer pi_hat, the effective
/// price of risk theta_hat and the clock tau(t) = 1/2 int_t^T |theta_hat|^2 ds.
class EffectiveMarket {
 public:
  explicit EffectiveMarket(MarketParams mp, double qp_tol = 1e-10);

  const MarketParams& params() const { return mp_; }
  const ConeSpec& polar() const { return ktilde_; }
  double horizon() const { return mp_.horizon(); }
  std::size_t intervals() const { return mp_.intervals(); }
  std::size_t interval(double t) const { return mp_.interval(t); }

  const Eigen::VectorXd& theta(std::size_t k) const { return theta_[k]; }
  const Eigen::VectorXd& pi_hat(std::size_t k) const { return pi_hat_[k]; }
  const Eigen::VectorXd& theta_hat(std::size_t k) const { return theta_hat_[k]; }
  const QpCertificate& certificate(std::size_t k) const { return cert_[k]; }
  /// |theta_hat|^2 on the interval containing t.
  double theta_hat_sq(double t) const;
  /// (sigma')^{-1} theta_hat on the interval containing t: the optimal direction for a = 1.
  const Eigen::VectorXd& merton_direction(std::size_t k) const { return direction_[k]; }

  double tau_at(double t) const;

 private:
  MarketParams mp_;
  ConeSpec ktilde_;
  std::vector<Eigen::VectorXd> theta_, pi_hat_, theta_hat_, direction_;
  std::vector<QpCertificate> cert_;
  std::vector<double> tail_;  // tau at grid nodes
};

struct OptimalDirection {
  Eigen::VectorXd pi_star;
  double g_value = 0.0;
};

/// Minimizer of g(pi) = 1/2 |pi' sigma|^2 - a pi' b over K at time t.
OptimalDirection optimal_direction(double a, double t, const EffectiveMarket& em,
                                   const MarketParams& mp);
OptimalDirection optimal_direction(double a, double t, const EffectiveMarket& em);

/// g(pi) = 1/2 |pi' sigma|^2 - a pi' b on the interval containing t.
double direction_objective(const Eigen::VectorXd& pi, double a, double t, const MarketParams& mp);

double tau_profile(const EffectiveMarket& em, double t);

/// Passes iff |theta_hat| >= theta_floor on every interval. theta_floor <= 0 is a ConfigError.
DiagnosticsReport validate_parabolicity(const EffectiveMarket& em, double theta_floor);

}  // namespace dualhjb
