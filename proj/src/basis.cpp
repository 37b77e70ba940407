#include "stapdp/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stapdp/errors.hpp"

namespace stapdp {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::domain: return "domain";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::convergence: return "convergence";
  }
  return "unknown";
}

SplineBasis::SplineBasis(int degree, int num_basis, double radius)
    : degree_(degree), num_basis_(num_basis), radius_(radius) {
  if (degree < 0) fail(ErrorKind::dimension, "spline degree must be nonnegative");
  if (num_basis < degree + 1) {
    fail(ErrorKind::dimension, "need at least degree + 1 = " + std::to_string(degree + 1) +
                                   " basis functions, got " + std::to_string(num_basis));
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::dimension, "exposure radius must be positive");
  const int intervals = num_basis - degree;
  spacing_ = radius / intervals;
  knots_.resize(static_cast<std::size_t>(num_basis + degree + 1));
  for (std::size_t j = 0; j < knots_.size(); ++j) {
    knots_[j] = (static_cast<double>(j) - degree) * spacing_;
  }
  // Pin the boundary knots exactly so d = R lands on the closing knot.
  knots_[static_cast<std::size_t>(degree)] = 0.0;
  knots_[static_cast<std::size_t>(num_basis)] = radius;
}

void SplineBasis::evaluate(double d, std::span<double> out) const {
  if (!(d >= 0.0 && d <= radius_)) {
    fail(ErrorKind::domain, "distance " + std::to_string(d) + " outside [0, " + std::to_string(radius_) + "]");
  }
  std::fill(out.begin(), out.end(), 0.0);
  const int p = degree_;
  int span = p + static_cast<int>(std::floor(d / spacing_));
  span = std::clamp(span, p, num_basis_ - 1);
  // Guard against rounding in d / spacing near interior knots.
  while (span > p && d < knots_[span]) --span;
  while (span < num_basis_ - 1 && d >= knots_[span + 1]) ++span;

  double values[32];
  double left[32];
  double right[32];
  values[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = d - knots_[span + 1 - j];
    right[j] = knots_[span + j] - d;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[r] / (right[r + 1] + left[j - r]);
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  for (int r = 0; r <= p; ++r) out[static_cast<std::size_t>(span - p + r)] = values[r];
}

Eigen::VectorXd SplineBasis::evaluate(double d) const {
  Eigen::VectorXd row(num_basis_);
  evaluate(d, std::span<double>(row.data(), static_cast<std::size_t>(row.size())));
  return row;
}

double SplineBasis::curve(const Eigen::Ref<const Eigen::VectorXd>& theta, double d) const {
  return evaluate(d).dot(theta);
}

SplineBasis build_basis(int degree, int num_basis, double radius) {
  if (degree > 30) fail(ErrorKind::dimension, "spline degree above 30 is not supported");
  return SplineBasis(degree, num_basis, radius);
}

PenaltyDecomposition difference_penalty(int num_basis, int order) {
  if (order < 1 || order >= num_basis) {
    fail(ErrorKind::dimension, "difference order must satisfy 1 <= order < L (order=" + std::to_string(order) +
                                   ", L=" + std::to_string(num_basis) + ")");
  }
  PenaltyDecomposition out;
  out.order = order;
  const Eigen::Index L = num_basis;

  Eigen::MatrixXd diff = Eigen::MatrixXd::Identity(L, L);
  for (int k = 0; k < order; ++k) {
    const Eigen::Index rows = diff.rows() - 1;
    diff = (diff.bottomRows(rows) - diff.topRows(rows)).eval();
  }
  out.difference = diff;
  out.penalty = diff.transpose() * diff;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.penalty);
  if (eig.info() != Eigen::Success) fail(ErrorKind::numerical, "eigendecomposition of penalty failed");
  out.eigenvalues = eig.eigenvalues().reverse();
  out.eigenvectors = eig.eigenvectors().rowwise().reverse();

  const double cutoff = 1e-10 * out.eigenvalues(0);
  out.rank = static_cast<int>((out.eigenvalues.array() > cutoff).count());

  out.to_original = out.eigenvectors;
  out.to_transformed = out.eigenvectors.transpose();
  for (int j = 0; j < out.rank; ++j) {
    const double root = std::sqrt(out.eigenvalues(j));
    out.to_original.col(j) /= root;
    out.to_transformed.row(j) *= root;
  }
  return out;
}

Eigen::VectorXd exposure_row(const SplineBasis& basis, std::span<const double> distances) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(basis.size());
  std::vector<double> scratch(static_cast<std::size_t>(basis.size()));
  for (double d : distances) {
    basis.evaluate(d, scratch);
    for (int l = 0; l < basis.size(); ++l) row(l) += scratch[static_cast<std::size_t>(l)];
  }
  return row;
}

StapBasis::StapBasis(int degree, int num_basis, double radius, int penalty_order)
    : spline_(build_basis(degree, num_basis, radius)), penalty_(difference_penalty(num_basis, penalty_order)) {}

Eigen::VectorXd StapBasis::exposure_row(std::span<const double> distances) const {
  return penalty_.to_original.transpose() * stapdp::exposure_row(spline_, distances);
}

Eigen::VectorXd StapBasis::to_original(const Eigen::Ref<const Eigen::VectorXd>& beta) const {
  return penalty_.to_original * beta;
}

Eigen::VectorXd StapBasis::to_transformed(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  return penalty_.to_transformed * theta;
}

double StapBasis::curve(const Eigen::Ref<const Eigen::VectorXd>& beta, double d) const {
  return spline_.evaluate(d).dot(penalty_.to_original * beta);
}

Eigen::MatrixXd StapBasis::grid_design(std::span<const double> grid) const {
  Eigen::MatrixXd design(static_cast<Eigen::Index>(grid.size()), size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    design.row(static_cast<Eigen::Index>(i)) = (penalty_.to_original.transpose() * spline_.evaluate(grid[i])).transpose();
  }
  return design;
}

std::vector<CurvePoint> curve_on_grid(const StapBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& beta,
                                      std::span<const double> grid) {
  if (beta.size() != basis.size()) fail(ErrorKind::dimension, "coefficient length does not match basis size");
  const Eigen::VectorXd theta = basis.to_original(beta);
  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  for (double d : grid) out.push_back({d, basis.spline().curve(theta, d)});
  return out;
}

std::vector<double> uniform_grid(double radius, int points) {
  if (points < 2) fail(ErrorKind::dimension, "curve grid needs at least 2 points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = radius * i / (points - 1);
  grid.back() = radius;
  return grid;
}

}  // namespace stapdp
