#include "dualhjb/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dualhjb/errors.hpp"

namespace dualhjb {

MarketParams::MarketParams(std::vector<double> grid, std::vector<Eigen::VectorXd> b,
                           std::vector<Eigen::MatrixXd> sigma, ConeSpec cone, double theta_floor)
    : grid_(std::move(grid)),
      b_(std::move(b)),
      sigma_(std::move(sigma)),
      cone_(std::move(cone)),
      theta_floor_(theta_floor) {
  if (grid_.size() < 2) throw ConfigError("market.grid needs at least two nodes");
  if (grid_.front() != 0.0) throw ConfigError("market.grid must start at 0");
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    if (!(grid_[i] > grid_[i - 1])) throw ConfigError("market.grid must be strictly increasing");
  }
  if (!std::isfinite(grid_.back())) throw ConfigError("market.T must be finite");
  const std::size_t m = grid_.size() - 1;
  if (b_.size() != m) throw ConfigError("market.b must have one vector per grid interval");
  if (sigma_.size() != m) throw ConfigError("market.sigma must have one matrix per grid interval");
  if (!(theta_floor_ > 0.0)) throw ConfigError("market.theta_floor must be positive");
  n_ = cone_.dim();
  for (std::size_t k = 0; k < m; ++k) {
    const std::string at = "[" + std::to_string(k) + "]";
    if (b_[k].size() != n_) throw ConfigError("market.b" + at + " has wrong dimension");
    if (!b_[k].allFinite()) throw ConfigError("market.b" + at + " not finite");
    if (sigma_[k].rows() != n_ || sigma_[k].cols() != n_) {
      throw ConfigError("market.sigma" + at + " has wrong shape");
    }
    if (!sigma_[k].allFinite()) throw ConfigError("market.sigma" + at + " not finite");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma_[k]);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    const double cond = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (!(smin > 0.0) || cond > 1e12) {
      std::ostringstream os;
      os << "market.sigma" << at << " singular (condition number " << cond << ")";
      throw ConfigError(os.str());
    }
    cond_.push_back(cond);
  }
}

MarketParams MarketParams::constant(const Eigen::VectorXd& b, const Eigen::MatrixXd& sigma,
                                    double T, ConeSpec cone, double theta_floor) {
  if (!(T > 0.0)) throw ConfigError("market.T must be positive");
  return MarketParams({0.0, T}, {b}, {sigma}, std::move(cone), theta_floor);
}

MarketParams MarketParams::scalar(double b, double sigma, double T, ConeSpec cone,
                                  double theta_floor) {
  Eigen::VectorXd bv(1);
  bv << b;
  Eigen::MatrixXd sm(1, 1);
  sm << sigma;
  return constant(bv, sm, T, std::move(cone), theta_floor);
}

std::size_t MarketParams::interval(double t) const {
  if (!(t >= 0.0 && t <= grid_.back())) throw DomainError("time outside [0, T]");
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  const auto k = static_cast<std::size_t>(it - grid_.begin());
  return std::min(k == 0 ? 0 : k - 1, b_.size() - 1);
}

ConeQpResult solve_cone_qp(const Eigen::VectorXd& theta, const Eigen::MatrixXd& sigma,
                           const ConeSpec& ktilde, double tol) {
  const auto n = theta.size();
  if (sigma.rows() != n || sigma.cols() != n || ktilde.dim() != n) {
    throw DomainError("solve_cone_qp: dimension mismatch");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sigma);
  if (!lu.isInvertible()) throw DomainError("solve_cone_qp: sigma is singular");
  const Eigen::MatrixXd sigma_inv = lu.inverse();

  // With w = sigma^{-1} v the problem is the projection of -theta onto sigma^{-1} K~.
  const ConeSpec image = ktilde.linear_image(sigma_inv);
  const Eigen::VectorXd w = image.project(-theta);

  ConeQpResult r;
  r.pi_hat = sigma * w;
  r.theta_hat = theta + w;

  // Df(v) = 2 (sigma^{-1})' (theta + sigma^{-1} v); K is the polar of K~.
  const Eigen::VectorXd df = 2.0 * sigma_inv.transpose() * r.theta_hat;
  const ConeSpec k = polar_cone(ktilde);
  const double dfn = df.norm();
  const double pin = r.pi_hat.norm();
  auto& c = r.certificate;
  c.complementarity = std::abs(r.pi_hat.dot(df)) / std::max(1.0, pin * dfn);
  c.dual_feasibility = k.distance(df) / std::max(1.0, dfn);
  if (ktilde.kind() == ConeKind::NonnegOrthant) {
    c.generator_violation = std::max(0.0, -df.minCoeff()) / std::max(1.0, dfn);
  } else if (ktilde.kind() == ConeKind::FinitelyGenerated) {
    const auto& g = ktilde.matrix();
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      c.generator_violation = std::max(
          c.generator_violation, -g.col(j).dot(df) / (g.col(j).norm() * std::max(1.0, dfn)));
    }
  }
  if (c.complementarity > tol || c.dual_feasibility > tol || c.generator_violation > tol) {
    std::ostringstream os;
    os << "cone QP certificate failed: complementarity=" << c.complementarity
       << " dual_feasibility=" << c.dual_feasibility
       << " generator_violation=" << c.generator_violation;
    throw SolverError(os.str());
  }
  return r;
}

EffectiveMarket::EffectiveMarket(MarketParams mp, double qp_tol)
    : mp_(std::move(mp)), ktilde_(polar_cone(mp_.cone())) {
  const std::size_t m = mp_.intervals();
  for (std::size_t k = 0; k < m; ++k) {
    const Eigen::VectorXd th = mp_.sigma(k).fullPivLu().solve(mp_.b(k));
    auto qp = solve_cone_qp(th, mp_.sigma(k), ktilde_, qp_tol);
    theta_.push_back(th);
    direction_.push_back(mp_.sigma(k).transpose().fullPivLu().solve(qp.theta_hat));
    pi_hat_.push_back(std::move(qp.pi_hat));
    theta_hat_.push_back(std::move(qp.theta_hat));
    cert_.push_back(qp.certificate);
  }
  const auto& g = mp_.grid();
  tail_.assign(g.size(), 0.0);
  for (std::size_t k = m; k-- > 0;) {
    tail_[k] = tail_[k + 1] + 0.5 * theta_hat_[k].squaredNorm() * (g[k + 1] - g[k]);
  }
}

double EffectiveMarket::theta_hat_sq(double t) const {
  return theta_hat_[interval(t)].squaredNorm();
}

double EffectiveMarket::tau_at(double t) const {
  const std::size_t k = interval(t);
  const auto& g = mp_.grid();
  return tail_[k + 1] + 0.5 * theta_hat_[k].squaredNorm() * (g[k + 1] - t);
}

double tau_profile(const EffectiveMarket& em, double t) { return em.tau_at(t); }

OptimalDirection optimal_direction(double a, double t, const EffectiveMarket& em,
                                   const MarketParams& mp) {
  if (!(t < mp.horizon())) throw DomainError("optimal_direction requires t < T");
  const std::size_t k = mp.interval(t);
  OptimalDirection out;
  if (a == 0.0) {
    out.pi_star = Eigen::VectorXd::Zero(mp.dim());
    return out;
  }
  Eigen::VectorXd theta_hat;
  if (a > 0.0) {
    theta_hat = em.theta_hat(k);
  } else {
    theta_hat = solve_cone_qp(-em.theta(k), mp.sigma(k), polar_cone(mp.cone())).theta_hat;
  }
  out.pi_star = std::abs(a) * mp.sigma(k).transpose().fullPivLu().solve(theta_hat);
  out.g_value = -0.5 * a * a * theta_hat.squaredNorm();
  return out;
}

OptimalDirection optimal_direction(double a, double t, const EffectiveMarket& em) {
  return optimal_direction(a, t, em, em.params());
}

double direction_objective(const Eigen::VectorXd& pi, double a, double t, const MarketParams& mp) {
  const std::size_t k = mp.interval(t);
  return 0.5 * (mp.sigma(k).transpose() * pi).squaredNorm() - a * pi.dot(mp.b(k));
}

DiagnosticsReport validate_parabolicity(const EffectiveMarket& em, double theta_floor) {
  if (!(theta_floor > 0.0)) throw ConfigError("theta_floor must be positive");
  DiagnosticsReport rep;
  const auto& g = em.params().grid();
  for (std::size_t k = 0; k < em.intervals(); ++k) {
    const double norm = em.theta_hat(k).norm();
    if (norm < theta_floor) {
      std::ostringstream os;
      os << "|theta_hat| = " << norm << " < " << theta_floor << " on interval [" << g[k] << ", "
         << g[k + 1] << ")";
      rep.add("parabolicity", false, os.str());
      return rep;
    }
  }
  rep.add("parabolicity", true);
  return rep;
}

}  // namespace dualhjb
