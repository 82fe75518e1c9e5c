#include "dualhjb/cone.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dualhjb/errors.hpp"

namespace dualhjb {

std::string to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::WholeSpace: return "whole_space";
    case ConeKind::NonnegOrthant: return "nonneg_orthant";
    case ConeKind::FinitelyGenerated: return "finitely_generated";
    case ConeKind::Polyhedral: return "polyhedral";
  }
  return "unknown";
}

ConeSpec ConeSpec::whole_space(int n) {
  if (n < 1) throw DomainError("cone dimension must be positive");
  return {ConeKind::WholeSpace, n, {}};
}

ConeSpec ConeSpec::nonneg_orthant(int n) {
  if (n < 1) throw DomainError("cone dimension must be positive");
  return {ConeKind::NonnegOrthant, n, {}};
}

ConeSpec ConeSpec::zero(int n) {
  if (n < 1) throw DomainError("cone dimension must be positive");
  return {ConeKind::FinitelyGenerated, n, Eigen::MatrixXd(n, 0)};
}

ConeSpec ConeSpec::generated_by(const std::vector<Eigen::VectorXd>& generators) {
  if (generators.empty()) throw DomainError("use ConeSpec::zero for an empty generator list");
  const auto n = generators.front().size();
  Eigen::MatrixXd g(n, static_cast<Eigen::Index>(generators.size()));
  for (std::size_t j = 0; j < generators.size(); ++j) {
    if (generators[j].size() != n) throw DomainError("generators differ in dimension");
    g.col(static_cast<Eigen::Index>(j)) = generators[j];
  }
  return generated_by(g);
}

ConeSpec ConeSpec::generated_by(const Eigen::MatrixXd& generators) {
  if (generators.rows() < 1) throw DomainError("cone dimension must be positive");
  for (Eigen::Index j = 0; j < generators.cols(); ++j) {
    if (!(generators.col(j).norm() > 0.0) || !generators.col(j).allFinite()) {
      throw DomainError("cone generator " + std::to_string(j) + " is zero or not finite");
    }
  }
  return {ConeKind::FinitelyGenerated, static_cast<int>(generators.rows()), generators};
}

ConeSpec ConeSpec::polyhedral(const Eigen::MatrixXd& normals) {
  if (normals.rows() < 1) throw DomainError("cone dimension must be positive");
  for (Eigen::Index j = 0; j < normals.cols(); ++j) {
    if (!(normals.col(j).norm() > 0.0) || !normals.col(j).allFinite()) {
      throw DomainError("cone normal " + std::to_string(j) + " is zero or not finite");
    }
  }
  if (normals.cols() == 0) return whole_space(static_cast<int>(normals.rows()));
  return {ConeKind::Polyhedral, static_cast<int>(normals.rows()), normals};
}

bool ConeSpec::is_zero() const {
  return kind_ == ConeKind::FinitelyGenerated && mat_.cols() == 0;
}

Eigen::VectorXd ConeSpec::project(const Eigen::VectorXd& v) const {
  if (v.size() != n_) throw DomainError("vector dimension does not match cone");
  switch (kind_) {
    case ConeKind::WholeSpace: return v;
    case ConeKind::NonnegOrthant: return v.cwiseMax(0.0);
    case ConeKind::FinitelyGenerated:
      if (mat_.cols() == 0) return Eigen::VectorXd::Zero(n_);
      return mat_ * nnls(mat_, v);
    case ConeKind::Polyhedral: {
      // Moreau: v = P_C v + P_{C°} v with C° = cone(-N).
      const Eigen::MatrixXd neg = -mat_;
      return v - neg * nnls(neg, v);
    }
  }
  return v;
}

double ConeSpec::distance(const Eigen::VectorXd& v) const { return (v - project(v)).norm(); }

bool ConeSpec::contains(const Eigen::VectorXd& v, double tol) const {
  if (v.size() != n_) return false;
  switch (kind_) {
    case ConeKind::WholeSpace: return true;
    case ConeKind::NonnegOrthant: return v.minCoeff() >= -tol;
    case ConeKind::Polyhedral:
      for (Eigen::Index j = 0; j < mat_.cols(); ++j) {
        if (mat_.col(j).dot(v) < -tol * mat_.col(j).norm()) return false;
      }
      return true;
    case ConeKind::FinitelyGenerated: return distance(v) <= tol * std::max(1.0, v.norm());
  }
  return false;
}

ConeSpec ConeSpec::linear_image(const Eigen::MatrixXd& m) const {
  if (m.rows() != n_ || m.cols() != n_) throw DomainError("linear map dimension mismatch");
  switch (kind_) {
    case ConeKind::WholeSpace: return *this;
    case ConeKind::NonnegOrthant: return generated_by(m);
    case ConeKind::FinitelyGenerated:
      if (mat_.cols() == 0) return *this;
      return generated_by(Eigen::MatrixXd(m * mat_));
    case ConeKind::Polyhedral:
      return polyhedral(Eigen::MatrixXd(m.transpose().fullPivLu().solve(mat_)));
  }
  return *this;
}

std::string ConeSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << "(n=" << n_;
  if (kind_ == ConeKind::FinitelyGenerated) os << ", generators=" << mat_.cols();
  if (kind_ == ConeKind::Polyhedral) os << ", normals=" << mat_.cols();
  os << ")";
  return os.str();
}

ConeSpec polar_cone(const ConeSpec& k) {
  switch (k.kind()) {
    case ConeKind::WholeSpace: return ConeSpec::zero(k.dim());
    case ConeKind::NonnegOrthant: return ConeSpec::nonneg_orthant(k.dim());
    case ConeKind::FinitelyGenerated:
      if (k.is_zero()) return ConeSpec::whole_space(k.dim());
      return ConeSpec::polyhedral(k.matrix());
    case ConeKind::Polyhedral: return ConeSpec::generated_by(k.matrix());
  }
  return k;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iter) {
  const Eigen::Index m = a.cols();
  if (a.rows() != b.size()) throw DomainError("nnls dimension mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  if (m == 0) return x;
  if (max_iter <= 0) max_iter = static_cast<int>(30 * m + 30);

  std::vector<bool> passive(static_cast<std::size_t>(m), false);
  const double tol = 1e-13 * (a.norm() * b.norm() + 1e-300);

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    const Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(b);
    z.setZero(m);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
  };

  std::vector<bool> blocked(static_cast<std::size_t>(m), false);
  Eigen::VectorXd w = a.transpose() * (b - a * x);
  int iter = 0;
  while (true) {
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (!passive[sj] && !blocked[sj] && w(j) > best) {
        best = w(j);
        t = j;
      }
    }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;

    Eigen::VectorXd z;
    while (true) {
      if (++iter > max_iter) throw SolverError("nnls: iteration cap reached");
      solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
      }
      if (feasible) break;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          alpha = std::min(alpha, x(j) / (x(j) - z(j)));
        }
      }
      x += alpha * (z - x);
      bool dropped = false;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-15 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
          dropped = true;
        }
      }
      if (!dropped) {
        // Rounding left no coordinate at zero; drop the most negative.
        Eigen::Index worst = -1;
        for (Eigen::Index j = 0; j < m; ++j) {
          if (passive[static_cast<std::size_t>(j)] && (worst < 0 || z(j) < z(worst))) worst = j;
        }
        passive[static_cast<std::size_t>(worst)] = false;
        x(worst) = 0.0;
      }
    }
    const bool stalled = !passive[static_cast<std::size_t>(t)] && (z - x).norm() == 0.0;
    x = z;
    w = a.transpose() * (b - a * x);
    // A column rejected by rounding would be picked again forever.
    if (stalled) {
      blocked[static_cast<std::size_t>(t)] = true;
    } else {
      std::fill(blocked.begin(), blocked.end(), false);
    }
  }
  return x;
}

}  // namespace dualhjb
