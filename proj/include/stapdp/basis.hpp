#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace stapdp {

/// B-spline basis on [0, R] with equally spaced knots. Knots are padded
/// beyond both boundaries at the same spacing, so the L functions form a
/// partition of unity everywhere on [0, R].
class SplineBasis {
 public:
  SplineBasis(int degree, int num_basis, double radius);

  int degree() const { return degree_; }
  int size() const { return num_basis_; }
  double radius() const { return radius_; }
  const std::vector<double>& knots() const { return knots_; }

  // Writes the L basis values at d into out. Throws ErrorKind::domain when
  // d lies outside [0, R].
  void evaluate(double d, std::span<double> out) const;
  Eigen::VectorXd evaluate(double d) const;

  // f(d) = sum_l theta_l phi_l(d) for coefficients in the B-spline basis.
  double curve(const Eigen::Ref<const Eigen::VectorXd>& theta, double d) const;

 private:
  int degree_;
  int num_basis_;
  double radius_;
  double spacing_;
  std::vector<double> knots_;
};

SplineBasis build_basis(int degree, int num_basis, double radius);

/// Difference penalty S = D^T D and the reparameterization that makes the
/// coefficient prior diagonal.
///
/// Transformed coefficients beta relate to B-spline coefficients theta by
/// theta = to_original * beta. The first `rank` transformed coordinates span
/// range(S) scaled so that theta^T S theta = |beta_range|^2; the remaining
/// L - rank coordinates are an orthonormal basis of null(S).
struct PenaltyDecomposition {
  int order = 0;
  int rank = 0;
  Eigen::MatrixXd difference;   // (L - order) x L
  Eigen::MatrixXd penalty;      // L x L
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::MatrixXd eigenvectors; // columns ordered to match eigenvalues
  Eigen::MatrixXd to_original;
  Eigen::MatrixXd to_transformed;

  int dim() const { return static_cast<int>(penalty.rows()); }
  int null_dim() const { return dim() - rank; }
};

PenaltyDecomposition difference_penalty(int num_basis, int order);

/// Sum of untransformed basis rows over a set of distances: the row r with
/// dot(r, theta) = sum_{d in set} f(d).
Eigen::VectorXd exposure_row(const SplineBasis& basis, std::span<const double> distances);

/// A spline basis bundled with its penalty reparameterization. All sampler
/// coefficients live in the transformed coordinates of this object.
class StapBasis {
 public:
  StapBasis(int degree, int num_basis, double radius, int penalty_order);

  const SplineBasis& spline() const { return spline_; }
  const PenaltyDecomposition& penalty() const { return penalty_; }
  int size() const { return spline_.size(); }
  int range_dim() const { return penalty_.rank; }
  double radius() const { return spline_.radius(); }

  Eigen::VectorXd exposure_row(std::span<const double> distances) const;
  Eigen::VectorXd to_original(const Eigen::Ref<const Eigen::VectorXd>& beta) const;
  Eigen::VectorXd to_transformed(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
  double curve(const Eigen::Ref<const Eigen::VectorXd>& beta, double d) const;

  /// Row i holds the transformed basis at grid[i]; curve values on the grid
  /// are design * beta.
  Eigen::MatrixXd grid_design(std::span<const double> grid) const;

 private:
  SplineBasis spline_;
  PenaltyDecomposition penalty_;
};

struct CurvePoint {
  double distance;
  double value;
};

/// Evaluates the transformed-coordinate curve at each grid distance.
std::vector<CurvePoint> curve_on_grid(const StapBasis& basis,
                                      const Eigen::Ref<const Eigen::VectorXd>& beta,
                                      std::span<const double> grid);

std::vector<double> uniform_grid(double radius, int points);

}  // namespace stapdp
