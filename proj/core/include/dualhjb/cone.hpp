#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dualhjb {

enum class ConeKind {
  WholeSpace,
  NonnegOrthant,
  FinitelyGenerated,  // {G c : c >= 0}; no generators is the zero cone
  Polyhedral,         // {v : N' v >= 0}
};

std::string to_string(ConeKind kind);

/// Closed convex cone in R^n. FinitelyGenerated stores generators as columns,
/// Polyhedral stores inward normals as columns.
class ConeSpec {
 public:
  static ConeSpec whole_space(int n);
  static ConeSpec nonneg_orthant(int n);
  static ConeSpec zero(int n);
  static ConeSpec generated_by(const std::vector<Eigen::VectorXd>& generators);
  static ConeSpec generated_by(const Eigen::MatrixXd& generators);
  static ConeSpec polyhedral(const Eigen::MatrixXd& normals);

  ConeKind kind() const { return kind_; }
  int dim() const { return n_; }
  bool is_zero() const;
  /// Generators (FinitelyGenerated) or normals (Polyhedral), one per column.
  const Eigen::MatrixXd& matrix() const { return mat_; }

  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
  double distance(const Eigen::VectorXd& v) const;
  bool contains(const Eigen::VectorXd& v, double tol = 1e-12) const;

  /// The image M C of this cone under an invertible linear map.
  ConeSpec linear_image(const Eigen::MatrixXd& m) const;

  std::string describe() const;

 private:
  ConeSpec(ConeKind kind, int n, Eigen::MatrixXd mat) : kind_(kind), n_(n), mat_(std::move(mat)) {}

  ConeKind kind_ = ConeKind::WholeSpace;
  int n_ = 0;
  Eigen::MatrixXd mat_;
};

/// Positive polar {p : p'v >= 0 for all v in K}.
ConeSpec polar_cone(const ConeSpec& k);

/// min |A c - b| over c >= 0 (Lawson-Hanson active set).
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iter = 0);

}  // namespace dualhjb
