#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "stapdp/basis.hpp"
#include "stapdp/data.hpp"
#include "stapdp/random.hpp"

namespace stapdp {

enum class RandomEffectPrior {
  jeffreys,         // p(Sigma) proportional to |Sigma|^{-(q+1)/2}
  inverse_wishart,  // proper IW(df, I); df defaults to q + 2
};

struct PriorConfig {
  double a_tau = 1.0;
  double b_tau = 1.0;
  double a_sigma = 1.0;  // Gamma prior on 1 / sigma^2
  double b_sigma = 1.0;
  double a_alpha = 1.0;
  double b_alpha = 1.0;
  int clusters = 50;              // truncation level K; 1 fits a single population curve
  double gamma_variance = 1e6;    // gamma ~ N(0, sigma^2 * gamma_variance * I)
  RandomEffectPrior re_prior = RandomEffectPrior::jeffreys;
  double re_prior_df = 0.0;       // <= 0 means q + 2

  void validate() const;
};

struct ChainSettings {
  int burn_in = 2000;
  int retained = 2000;
  int thin = 1;
  int chains = 1;
  std::uint64_t seed = 1;
  // Clusters with at most this many members skip the joint coefficient
  // solve and take prior draws. 0: only empty clusters do.
  int min_cluster_size = 0;
  // Ignore the likelihood entirely; the chain then targets the prior.
  bool prior_only = false;
  // Metropolis proposals per sweep that swap an occupied cluster's index
  // with another index (members, beta and tau move together). Negative: K.
  int label_swaps = -1;
  // Draw labels with cluster coefficients and random effects integrated out
  // instead of conditioning on them. Same target; small clusters dissolve far
  // more readily, at roughly K small Cholesky factorizations per subject.
  bool marginal_labels = false;
  // Sequentially allocated split-merge proposals per sweep, also with beta
  // integrated out. Lets a chain open or close a whole cluster in one step.
  int split_merge = 0;
};

/// One Gibbs iteration's parameters. Cluster labels are 0-based internally.
struct ModelState {
  std::vector<int> labels;            // subject -> cluster
  Eigen::MatrixXd beta;               // K x L, transformed coordinates
  Eigen::MatrixXd tau;                // K x 2 (range, null-space precision)
  Eigen::VectorXd gamma;              // p
  double sigma2 = 1.0;
  Eigen::VectorXd sticks;             // K, last entry 1
  Eigen::VectorXd weights;            // K, sums to 1
  double alpha = 1.0;
  Eigen::MatrixXd random_effects;     // N x q
  Eigen::MatrixXd re_covariance;      // q x q

  std::vector<int> cluster_counts() const;
  int occupied() const;
};

/// Sufficient statistics of a dataset under a basis, shared read-only by all
/// chains. Rows are grouped by subject exactly as in the Dataset.
class ModelData {
 public:
  ModelData(const Dataset& dataset, const StapBasis& basis, bool prior_only = false);

  Eigen::Index rows() const { return y.size(); }
  Eigen::Index subjects() const { return static_cast<Eigen::Index>(offsets.size()) - 1; }
  Eigen::Index p() const { return X.cols(); }
  Eigen::Index q() const { return Z.cols(); }
  Eigen::Index dim() const { return Phi.cols(); }
  int range_dim = 0;
  Eigen::Index likelihood_rows = 0;  // 0 in prior-only mode

  Eigen::VectorXd y;
  Eigen::VectorXd w;
  Eigen::MatrixXd X;    // rows x p
  Eigen::MatrixXd Z;    // rows x q
  Eigen::MatrixXd Phi;  // rows x L, transformed exposure rows
  std::vector<Eigen::Index> offsets;

  Eigen::MatrixXd XtWX;
  // Per subject: Phi_i^T W Phi_i (row-major L*L each), X_i^T W Phi_i (p x L), Z_i^T W Z_i.
  std::vector<double> exposure_gram;
  std::vector<Eigen::MatrixXd> cross_x_exposure;
  std::vector<Eigen::MatrixXd> re_gram;

  const double* subject_gram(Eigen::Index s) const { return exposure_gram.data() + s * dim() * dim(); }
};

/// Conditional mean of the joint (gamma, beta_active) block and its layout.
struct CoefficientConditional {
  std::vector<int> active;      // clusters included in the solve, in block order
  Eigen::VectorXd mean;         // p + active.size() * L
  Eigen::MatrixXd precision;    // unscaled; posterior precision is this / sigma^2
  Eigen::LLT<Eigen::MatrixXd> factor;
};

/// Truncated stick-breaking blocked Gibbs sampler. Each update method draws
/// one block from its full conditional given the current state.
class BlockedGibbs {
 public:
  BlockedGibbs(const ModelData& data, const PriorConfig& prior, const ChainSettings& settings, Random rng);

  ModelState& state() { return state_; }
  const ModelState& state() const { return state_; }
  Random& rng() { return rng_; }

  // Labels uniform over clusters; beta, tau, alpha, sigma2, sticks from the
  // prior; gamma at its conditional mean with zero exposure; b = 0; Sigma = I.
  void initialize();

  void update_labels();
  // Labels one subject at a time from p(z_i | z_-i, gamma, Sigma, sigma2, tau, pi)
  // with beta and b integrated out. update_collapsed_effects then redraws
  // beta and b, which keeps the sweep a valid partially collapsed Gibbs scan.
  void update_labels_marginal();
  Eigen::VectorXd marginal_label_log_probabilities(Eigen::Index subject) const;
  // Returns the number of accepted proposals.
  int update_split_merge();
  // beta for occupied clusters with random effects integrated out, then the
  // random effects given beta. Completes the collapsed label step.
  void update_collapsed_effects();
  // Relabeling moves that leave the posterior invariant: index swaps with pi
  // held fixed, accepted with probability min(1, (pi_j / pi_l)^(n_l - n_j)),
  // then adjacent swaps that exchange sticks too. Returns the number accepted.
  int update_label_order();
  void update_sticks_and_alpha();
  void update_coefficients();
  void update_precisions();
  void update_variance();
  void update_random_effects();
  void update_re_covariance();

  // Labels -> split-merge -> label-order swaps -> (collapsed beta, b) -> sticks/alpha ->
  // coefficients -> precisions -> variance -> random effects -> random-effect covariance.
  void sweep();

  // Normalized log label probabilities of one subject under the current state.
  Eigen::VectorXd label_log_probabilities(Eigen::Index subject) const;

  CoefficientConditional coefficient_conditional() const;

  // Residual y - X gamma - exposure - Z b for every row.
  Eigen::VectorXd residuals() const;

 private:
  std::vector<int> active_clusters() const;
  void draw_prior_beta(int k);
  void label_scores(Eigen::Index subject, const Eigen::VectorXd& fixed_fit, std::vector<double>& panel,
                    std::vector<double>& cross, std::vector<double>& scores) const;
  void fill_panel(std::vector<double>& panel) const;
  Eigen::VectorXd exposure_fit() const;
  Eigen::VectorXd random_effect_fit() const;

  const ModelData& data_;
  PriorConfig prior_;
  ChainSettings settings_;
  Random rng_;
  ModelState state_;
  int clusters_;
};

/// Recomputes pi from v: pi_k = v_k prod_{u<k}(1 - v_u).
Eigen::VectorXd stick_weights(const Eigen::VectorXd& sticks);

/// Conjugate draw of one subject's random effect: precision
/// ZtWZ / sigma2 + Sigma^{-1}, mean precision^{-1} ZtWr / sigma2.
Eigen::VectorXd draw_random_effect(Random& rng, const Eigen::MatrixXd& ztwz, const Eigen::VectorXd& ztwr,
                                   double sigma2, const Eigen::MatrixXd& re_precision);

/// Inverse-Wishart parameters of the random-effect covariance conditional.
struct ReCovarianceConditional {
  double df;
  Eigen::MatrixXd scale;
};
ReCovarianceConditional re_covariance_conditional(const Eigen::MatrixXd& random_effects, const PriorConfig& prior);

ModelState init_state(const ModelData& data, const PriorConfig& prior, std::uint64_t seed);

}  // namespace stapdp
