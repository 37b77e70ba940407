#include "stapdp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stapdp/errors.hpp"
#include "stapdp/kernels.hpp"

namespace stapdp {

namespace {

constexpr double kTinyWeight = 1e-300;
constexpr double kStickCeiling = 1.0 - 1e-12;

// log of a Gamma(shape, 1) draw without underflow for small shapes.
double log_gamma_draw(Random& rng, double shape) {
  if (shape >= 1.0) return std::log(rng.gamma(shape, 1.0));
  return std::log(rng.gamma(shape + 1.0, 1.0)) + std::log(rng.uniform()) / shape;
}

struct StickDraw {
  double v;
  double log_rest;  // log(1 - v), exact even when v rounds to 1
};

StickDraw draw_stick(Random& rng, double a, double b) {
  const double la = log_gamma_draw(rng, a);
  const double lb = log_gamma_draw(rng, b);
  const double top = std::max(la, lb);
  const double lsum = top + std::log(std::exp(la - top) + std::exp(lb - top));
  return {std::exp(la - lsum), lb - lsum};
}

std::span<const double> segment(const Eigen::VectorXd& v, Eigen::Index begin, Eigen::Index n) {
  return {v.data() + begin, static_cast<std::size_t>(n)};
}

std::span<const double> column_segment(const Eigen::MatrixXd& m, Eigen::Index col, Eigen::Index begin, Eigen::Index n) {
  return {m.data() + col * m.rows() + begin, static_cast<std::size_t>(n)};
}

// In-place Cholesky of a row-major n x n matrix; returns the log determinant,
// or NaN when the matrix is not positive definite.
double cholesky_logdet(double* a, int n) {
  double logdet = 0.0;
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    d = std::sqrt(d);
    a[j * n + j] = d;
    logdet += 2.0 * std::log(d);
    for (int i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (int k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / d;
    }
  }
  return logdet;
}

// |L^{-1} h|^2 with L from cholesky_logdet.
double whitened_norm2(const double* l, int n, const double* h, double* tmp) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = h[i];
    for (int k = 0; k < i; ++k) v -= l[i * n + k] * tmp[k];
    tmp[i] = v / l[i * n + i];
    total += tmp[i] * tmp[i];
  }
  return total;
}

// Posterior precision H = Lambda^{-1} + sum A_j and shift h = sum c_j of one
// cluster's coefficients (in units of 1 / sigma^2), with cached log|H| and
// h' H^{-1} h.
struct ClusterStats {
  std::vector<double> H;
  std::vector<double> h;
  double logdet = 0.0;
  double quad = 0.0;
};

void refresh(ClusterStats& c, int n, std::vector<double>& scratch, std::vector<double>& tmp) {
  scratch = c.H;
  c.logdet = cholesky_logdet(scratch.data(), n);
  if (std::isnan(c.logdet)) fail(ErrorKind::numerical, "cluster coefficient precision is not positive definite");
  c.quad = whitened_norm2(scratch.data(), n, c.h.data(), tmp.data());
}

}  // namespace

void PriorConfig::validate() const {
  const double values[] = {a_tau, b_tau, a_sigma, b_sigma, a_alpha, b_alpha, gamma_variance};
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::input, "prior hyperparameters must be positive and finite");
  }
  if (clusters < 1) fail(ErrorKind::input, "truncation level K must be at least 1");
}

std::vector<int> ModelState::cluster_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(beta.rows()), 0);
  for (int k : labels) counts[static_cast<std::size_t>(k)]++;
  return counts;
}

int ModelState::occupied() const {
  const auto counts = cluster_counts();
  return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }));
}

ModelData::ModelData(const Dataset& dataset, const StapBasis& basis, bool prior_only) {
  const auto n = static_cast<Eigen::Index>(dataset.num_rows());
  const auto p = static_cast<Eigen::Index>(dataset.p());
  const auto q = static_cast<Eigen::Index>(dataset.q());
  const Eigen::Index L = basis.size();
  if (dataset.radius() > basis.radius()) {
    fail(ErrorKind::domain, "dataset radius exceeds the basis radius");
  }
  range_dim = basis.range_dim();
  likelihood_rows = prior_only ? 0 : n;

  y.resize(n);
  w.resize(n);
  X.resize(n, p);
  Z.resize(n, q);
  Phi.resize(n, L);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = dataset.rows()[static_cast<std::size_t>(r)];
    y(r) = row.y;
    w(r) = prior_only ? 0.0 : row.weight;
    for (Eigen::Index j = 0; j < p; ++j) X(r, j) = row.x[static_cast<std::size_t>(j)];
    for (Eigen::Index j = 0; j < q; ++j) Z(r, j) = row.z[static_cast<std::size_t>(j)];
    Phi.row(r) = basis.exposure_row(row.distances.values()).transpose();
  }
  const auto subjects = static_cast<Eigen::Index>(dataset.num_subjects());
  offsets.resize(static_cast<std::size_t>(subjects) + 1);
  for (Eigen::Index s = 0; s < subjects; ++s) offsets[static_cast<std::size_t>(s)] = static_cast<Eigen::Index>(dataset.subject_begin(static_cast<std::size_t>(s)));
  offsets.back() = n;

  XtWX = X.transpose() * w.asDiagonal() * X;
  exposure_gram.assign(static_cast<std::size_t>(subjects * L * L), 0.0);
  cross_x_exposure.resize(static_cast<std::size_t>(subjects));
  re_gram.resize(static_cast<std::size_t>(subjects));
  for (Eigen::Index s = 0; s < subjects; ++s) {
    const Eigen::Index begin = offsets[static_cast<std::size_t>(s)];
    const Eigen::Index count = offsets[static_cast<std::size_t>(s) + 1] - begin;
    const auto phi = Phi.middleRows(begin, count);
    const auto ws = w.segment(begin, count).asDiagonal();
    const Eigen::MatrixXd gram = phi.transpose() * ws * phi;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        exposure_gram.data() + s * L * L, L, L) = gram;
    cross_x_exposure[static_cast<std::size_t>(s)] = X.middleRows(begin, count).transpose() * ws * phi;
    re_gram[static_cast<std::size_t>(s)] = Z.middleRows(begin, count).transpose() * ws * Z.middleRows(begin, count);
  }
}

Eigen::VectorXd stick_weights(const Eigen::VectorXd& sticks) {
  Eigen::VectorXd pi(sticks.size());
  double remaining = 1.0;
  for (Eigen::Index k = 0; k < sticks.size(); ++k) {
    pi(k) = sticks(k) * remaining;
    remaining *= 1.0 - sticks(k);
  }
  return pi;
}

Eigen::VectorXd draw_random_effect(Random& rng, const Eigen::MatrixXd& ztwz, const Eigen::VectorXd& ztwr, double sigma2,
                                   const Eigen::MatrixXd& re_precision) {
  const Eigen::MatrixXd precision = ztwz / sigma2 + re_precision;
  Eigen::LLT<Eigen::MatrixXd> chol(precision);
  if (chol.info() != Eigen::Success) fail(ErrorKind::numerical, "random-effect precision is not positive definite");
  const Eigen::VectorXd mean = chol.solve(ztwr / sigma2);
  const Eigen::VectorXd noise = chol.matrixU().solve(rng.normal_vector(mean.size()));
  return mean + noise;
}

ReCovarianceConditional re_covariance_conditional(const Eigen::MatrixXd& random_effects, const PriorConfig& prior) {
  const Eigen::Index q = random_effects.cols();
  const auto n = static_cast<double>(random_effects.rows());
  const Eigen::MatrixXd scatter = random_effects.transpose() * random_effects;
  if (prior.re_prior == RandomEffectPrior::inverse_wishart) {
    const double df0 = prior.re_prior_df > 0.0 ? prior.re_prior_df : static_cast<double>(q) + 2.0;
    return {df0 + n, Eigen::MatrixXd::Identity(q, q) + scatter};
  }
  Eigen::LLT<Eigen::MatrixXd> chol(scatter);
  const double trace = scatter.trace();
  bool singular = chol.info() != Eigen::Success || !(trace > 0.0) || n < static_cast<double>(q);
  if (!singular) {
    const Eigen::VectorXd diag = chol.matrixLLT().diagonal();
    singular = diag.minCoeff() * diag.minCoeff() <= 1e-12 * trace;
  }
  if (singular) {
    fail(ErrorKind::numerical,
         "random-effect scatter matrix is singular, so the improper Jeffreys prior gives no proper conditional; "
         "use the inverse_wishart random-effect prior");
  }
  return {n, scatter};
}

BlockedGibbs::BlockedGibbs(const ModelData& data, const PriorConfig& prior, const ChainSettings& settings, Random rng)
    : data_(data), prior_(prior), settings_(settings), rng_(std::move(rng)), clusters_(prior.clusters) {
  prior_.validate();
  const Eigen::Index L = data_.dim();
  state_.labels.assign(static_cast<std::size_t>(data_.subjects()), 0);
  state_.beta = Eigen::MatrixXd::Zero(clusters_, L);
  state_.tau = Eigen::MatrixXd::Ones(clusters_, 2);
  state_.gamma = Eigen::VectorXd::Zero(data_.p());
  state_.sticks = Eigen::VectorXd::Ones(clusters_);
  state_.weights = stick_weights(state_.sticks);
  state_.random_effects = Eigen::MatrixXd::Zero(data_.subjects(), data_.q());
  state_.re_covariance = Eigen::MatrixXd::Identity(data_.q(), data_.q());
}

void BlockedGibbs::draw_prior_beta(int k) {
  const Eigen::Index L = data_.dim();
  const double sd_range = std::sqrt(state_.sigma2 / state_.tau(k, 0));
  const double sd_null = std::sqrt(state_.sigma2 / state_.tau(k, 1));
  for (Eigen::Index l = 0; l < L; ++l) {
    state_.beta(k, l) = (l < data_.range_dim ? sd_range : sd_null) * rng_.normal();
  }
}

void BlockedGibbs::initialize() {
  state_.alpha = rng_.gamma(prior_.a_alpha, prior_.b_alpha);
  for (int k = 0; k + 1 < clusters_; ++k) {
    state_.sticks(k) = std::min(rng_.beta(1.0, state_.alpha), kStickCeiling);
  }
  state_.sticks(clusters_ - 1) = 1.0;
  state_.weights = stick_weights(state_.sticks);
  state_.sigma2 = 1.0 / rng_.gamma(prior_.a_sigma, prior_.b_sigma);
  for (int k = 0; k < clusters_; ++k) {
    state_.tau(k, 0) = rng_.gamma(prior_.a_tau, prior_.b_tau);
    state_.tau(k, 1) = rng_.gamma(prior_.a_tau, prior_.b_tau);
    draw_prior_beta(k);
  }
  for (auto& label : state_.labels) label = clusters_ == 1 ? 0 : rng_.uniform_int(0, clusters_ - 1);

  const Eigen::Index p = data_.p();
  if (p > 0) {
    Eigen::MatrixXd g = data_.XtWX;
    g.diagonal().array() += 1.0 / prior_.gamma_variance;
    state_.gamma = g.llt().solve(data_.X.transpose() * (data_.w.asDiagonal() * data_.y));
  }
  state_.random_effects.setZero();
  state_.re_covariance.setIdentity();
}

void BlockedGibbs::fill_panel(std::vector<double>& panel) const {
  const std::size_t stride = kernels::panel_stride(static_cast<std::size_t>(clusters_));
  const Eigen::Index L = data_.dim();
  panel.assign(static_cast<std::size_t>(L) * stride, 0.0);
  for (int k = 0; k < clusters_; ++k) {
    for (Eigen::Index l = 0; l < L; ++l) panel[static_cast<std::size_t>(l) * stride + static_cast<std::size_t>(k)] = state_.beta(k, l);
  }
}

void BlockedGibbs::label_scores(Eigen::Index subject, const Eigen::VectorXd& fixed_fit, std::vector<double>& panel,
                                std::vector<double>& cross, std::vector<double>& scores) const {
  const Eigen::Index L = data_.dim();
  const Eigen::Index begin = data_.offsets[static_cast<std::size_t>(subject)];
  const Eigen::Index count = data_.offsets[static_cast<std::size_t>(subject) + 1] - begin;
  Eigen::VectorXd resid = data_.y.segment(begin, count) - fixed_fit.segment(begin, count);
  if (data_.q() > 0) resid -= data_.Z.middleRows(begin, count) * state_.random_effects.row(subject).transpose();
  const std::span<const double> r{resid.data(), static_cast<std::size_t>(count)};
  cross.resize(static_cast<std::size_t>(L));
  for (Eigen::Index l = 0; l < L; ++l) {
    cross[static_cast<std::size_t>(l)] = kernels::weighted_dot(segment(data_.w, begin, count), column_segment(data_.Phi, l, begin, count), r);
  }
  scores.resize(static_cast<std::size_t>(clusters_));
  const std::size_t stride = kernels::panel_stride(static_cast<std::size_t>(clusters_));
  kernels::cluster_scores({data_.subject_gram(subject), static_cast<std::size_t>(L * L)}, cross, panel,
                          static_cast<std::size_t>(clusters_), stride, scores);
}

void BlockedGibbs::update_labels() {
  if (clusters_ == 1) return;
  const Eigen::VectorXd fixed_fit = data_.X * state_.gamma;
  std::vector<double> panel;
  std::vector<double> cross;
  std::vector<double> scores;
  std::vector<double> log_weights(static_cast<std::size_t>(clusters_));
  fill_panel(panel);
  std::vector<double> log_pi(static_cast<std::size_t>(clusters_));
  for (int k = 0; k < clusters_; ++k) {
    const double pi = state_.weights(k);
    log_pi[static_cast<std::size_t>(k)] = pi < kTinyWeight ? -std::numeric_limits<double>::infinity() : std::log(pi);
  }
  const double inv_two_sigma2 = 0.5 / state_.sigma2;
  for (Eigen::Index s = 0; s < data_.subjects(); ++s) {
    label_scores(s, fixed_fit, panel, cross, scores);
    for (std::size_t k = 0; k < log_weights.size(); ++k) log_weights[k] = log_pi[k] - scores[k] * inv_two_sigma2;
    const int drawn = rng_.categorical_log(log_weights);
    if (drawn < 0) {
      fail(ErrorKind::numerical, "all label mass underflowed for subject " + std::to_string(s) +
                                     " (sigma2=" + std::to_string(state_.sigma2) + ")");
    }
    state_.labels[static_cast<std::size_t>(s)] = drawn;
  }
}

namespace {

// Shared by the marginal label update and its single-subject probe.
struct MarginalLabelContext {
  int L;
  std::vector<ClusterStats> stats;
  std::vector<double> gram;   // subjects x L x L
  std::vector<double> cross;  // subjects x L
  std::vector<double> scratch;
  std::vector<double> tmp;
  std::vector<double> shifted;
};

// With integrate_re the subject's random effects are integrated out too:
// W becomes (W^{-1} + Z Sigma Z' / sigma2)^{-1}, applied through Woodbury.
MarginalLabelContext build_marginal_context(const ModelData& data, const ModelState& state, int clusters,
                                            bool integrate_re) {
  MarginalLabelContext ctx;
  const int L = static_cast<int>(data.dim());
  ctx.L = L;
  ctx.scratch.resize(static_cast<std::size_t>(L * L));
  ctx.tmp.resize(static_cast<std::size_t>(L));
  ctx.shifted.resize(static_cast<std::size_t>(L));
  Eigen::VectorXd resid = data.y - data.X * state.gamma;
  const Eigen::Index subjects = data.subjects();
  ctx.cross.assign(static_cast<std::size_t>(subjects * L), 0.0);
  for (Eigen::Index s = 0; s < subjects; ++s) {
    const Eigen::Index begin = data.offsets[static_cast<std::size_t>(s)];
    const Eigen::Index count = data.offsets[static_cast<std::size_t>(s) + 1] - begin;
    if (data.q() > 0 && !integrate_re) {
      resid.segment(begin, count) -= data.Z.middleRows(begin, count) * state.random_effects.row(s).transpose();
    }
    const std::span<const double> r{resid.data() + begin, static_cast<std::size_t>(count)};
    for (int l = 0; l < L; ++l) {
      ctx.cross[static_cast<std::size_t>(s * L + l)] =
          kernels::weighted_dot(segment(data.w, begin, count), column_segment(data.Phi, l, begin, count), r);
    }
  }
  ctx.gram = data.exposure_gram;
  if (integrate_re) {
    const Eigen::LLT<Eigen::MatrixXd> re_chol(state.re_covariance);
    if (re_chol.info() != Eigen::Success) fail(ErrorKind::numerical, "random-effect covariance is not positive definite");
    const Eigen::Index q = data.q();
    const Eigen::MatrixXd scaled_precision = state.sigma2 * re_chol.solve(Eigen::MatrixXd::Identity(q, q));
    for (Eigen::Index s = 0; s < subjects; ++s) {
      const Eigen::Index begin = data.offsets[static_cast<std::size_t>(s)];
      const Eigen::Index count = data.offsets[static_cast<std::size_t>(s) + 1] - begin;
      const auto ws = data.w.segment(begin, count).asDiagonal();
      const Eigen::MatrixXd pz = data.Phi.middleRows(begin, count).transpose() * ws * data.Z.middleRows(begin, count);
      const Eigen::VectorXd zr = data.Z.middleRows(begin, count).transpose() * (ws * resid.segment(begin, count));
      const Eigen::LLT<Eigen::MatrixXd> inner(scaled_precision + data.re_gram[static_cast<std::size_t>(s)]);
      const Eigen::MatrixXd solved = inner.solve(pz.transpose());  // q x L
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(
          ctx.gram.data() + s * L * L, L, L);
      A.noalias() -= pz * solved;
      Eigen::Map<Eigen::VectorXd> c(ctx.cross.data() + s * L, L);
      c.noalias() -= solved.transpose() * zr;
    }
  }
  ctx.stats.resize(static_cast<std::size_t>(clusters));
  for (int k = 0; k < clusters; ++k) {
    auto& c = ctx.stats[static_cast<std::size_t>(k)];
    c.H.assign(static_cast<std::size_t>(L * L), 0.0);
    c.h.assign(static_cast<std::size_t>(L), 0.0);
    for (int l = 0; l < L; ++l) c.H[static_cast<std::size_t>(l * L + l)] = state.tau(k, l < data.range_dim ? 0 : 1);
  }
  for (Eigen::Index s = 0; s < subjects; ++s) {
    auto& c = ctx.stats[static_cast<std::size_t>(state.labels[static_cast<std::size_t>(s)])];
    kernels::accumulate(c.H, {ctx.gram.data() + s * L * L, static_cast<std::size_t>(L * L)});
    kernels::accumulate(c.h, {ctx.cross.data() + s * L, static_cast<std::size_t>(L)});
  }
  for (auto& c : ctx.stats) refresh(c, L, ctx.scratch, ctx.tmp);
  return ctx;
}

// log m_k(subject): predictive of the subject's rows under each cluster
// given its other members, up to a constant shared by all clusters.
void marginal_scores(MarginalLabelContext& ctx, Eigen::Index subject, double sigma2,
                     const std::vector<double>& log_pi, std::vector<double>& out) {
  const int L = ctx.L;
  const double* A = ctx.gram.data() + subject * L * L;
  const double* c = ctx.cross.data() + subject * L;
  out.resize(ctx.stats.size());
  for (std::size_t k = 0; k < ctx.stats.size(); ++k) {
    if (!std::isfinite(log_pi[k])) {
      out[k] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const auto& st = ctx.stats[k];
    for (int i = 0; i < L * L; ++i) ctx.scratch[static_cast<std::size_t>(i)] = st.H[static_cast<std::size_t>(i)] + A[i];
    for (int l = 0; l < L; ++l) ctx.shifted[static_cast<std::size_t>(l)] = st.h[static_cast<std::size_t>(l)] + c[l];
    const double logdet = cholesky_logdet(ctx.scratch.data(), L);
    if (std::isnan(logdet)) fail(ErrorKind::numerical, "cluster coefficient precision is not positive definite");
    const double quad = whitened_norm2(ctx.scratch.data(), L, ctx.shifted.data(), ctx.tmp.data());
    out[k] = log_pi[k] - 0.5 * (logdet - st.logdet) + 0.5 * (quad - st.quad) / sigma2;
  }
}

void move_subject(MarginalLabelContext& ctx, Eigen::Index subject, int cluster, double sign) {
  const int L = ctx.L;
  auto& st = ctx.stats[static_cast<std::size_t>(cluster)];
  const double* A = ctx.gram.data() + subject * L * L;
  const double* c = ctx.cross.data() + subject * L;
  for (int i = 0; i < L * L; ++i) st.H[static_cast<std::size_t>(i)] += sign * A[i];
  for (int l = 0; l < L; ++l) st.h[static_cast<std::size_t>(l)] += sign * c[l];
  refresh(st, L, ctx.scratch, ctx.tmp);
}

std::vector<double> log_weights_of(const Eigen::VectorXd& weights) {
  std::vector<double> out(static_cast<std::size_t>(weights.size()));
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    out[static_cast<std::size_t>(k)] = weights(k) < kTinyWeight ? -std::numeric_limits<double>::infinity() : std::log(weights(k));
  }
  return out;
}

}  // namespace

void BlockedGibbs::update_labels_marginal() {
  if (clusters_ == 1) return;
  MarginalLabelContext ctx = build_marginal_context(data_, state_, clusters_, settings_.marginal_labels && data_.q() > 0);
  const std::vector<double> log_pi = log_weights_of(state_.weights);
  std::vector<double> scores;
  const Eigen::Index LL = data_.dim() * data_.dim();
  for (Eigen::Index s = 0; s < data_.subjects(); ++s) {
    int& label = state_.labels[static_cast<std::size_t>(s)];
    const double* A = data_.subject_gram(s);
    const bool informative = std::any_of(A, A + LL, [](double v) { return v != 0.0; });
    if (!informative) {
      // No exposure: the likelihood is the same under every cluster.
      const int drawn = rng_.categorical_log(log_pi);
      if (drawn < 0) fail(ErrorKind::numerical, "all label mass underflowed for subject " + std::to_string(s));
      label = drawn;
      continue;
    }
    move_subject(ctx, s, label, -1.0);
    marginal_scores(ctx, s, state_.sigma2, log_pi, scores);
    const int drawn = rng_.categorical_log(scores);
    if (drawn < 0) {
      fail(ErrorKind::numerical, "all label mass underflowed for subject " + std::to_string(s) +
                                     " (sigma2=" + std::to_string(state_.sigma2) + ")");
    }
    label = drawn;
    move_subject(ctx, s, label, 1.0);
  }
}

Eigen::VectorXd BlockedGibbs::marginal_label_log_probabilities(Eigen::Index subject) const {
  MarginalLabelContext ctx = build_marginal_context(data_, state_, clusters_, settings_.marginal_labels && data_.q() > 0);
  const std::vector<double> log_pi = log_weights_of(state_.weights);
  move_subject(ctx, subject, state_.labels[static_cast<std::size_t>(subject)], -1.0);
  std::vector<double> scores;
  marginal_scores(ctx, subject, state_.sigma2, log_pi, scores);
  Eigen::VectorXd lp = Eigen::Map<Eigen::VectorXd>(scores.data(), clusters_);
  const double top = lp.maxCoeff();
  const double norm = top + std::log((lp.array() - top).exp().sum());
  return lp.array() - norm;
}

namespace {

ClusterStats prior_stats(const ModelData& data, const ModelState& state, int cluster) {
  const int L = static_cast<int>(data.dim());
  ClusterStats c;
  c.H.assign(static_cast<std::size_t>(L * L), 0.0);
  c.h.assign(static_cast<std::size_t>(L), 0.0);
  for (int l = 0; l < L; ++l) {
    const double t = state.tau(cluster, l < data.range_dim ? 0 : 1);
    c.H[static_cast<std::size_t>(l * L + l)] = t;
    c.logdet += std::log(t);
  }
  return c;
}

void add_subject(ClusterStats& c, MarginalLabelContext& ctx, Eigen::Index s, bool refactor) {
  const int L = ctx.L;
  kernels::accumulate(c.H, {ctx.gram.data() + s * L * L, static_cast<std::size_t>(L * L)});
  kernels::accumulate(c.h, {ctx.cross.data() + s * L, static_cast<std::size_t>(L)});
  if (refactor) refresh(c, L, ctx.scratch, ctx.tmp);
}

// log predictive of subject s joining c, relative to c alone.
double predictive(const ClusterStats& c, MarginalLabelContext& ctx, Eigen::Index s, double sigma2) {
  const int L = ctx.L;
  const double* A = ctx.gram.data() + s * L * L;
  const double* x = ctx.cross.data() + s * L;
  for (int i = 0; i < L * L; ++i) ctx.scratch[static_cast<std::size_t>(i)] = c.H[static_cast<std::size_t>(i)] + A[i];
  for (int l = 0; l < L; ++l) ctx.shifted[static_cast<std::size_t>(l)] = c.h[static_cast<std::size_t>(l)] + x[l];
  const double logdet = cholesky_logdet(ctx.scratch.data(), L);
  if (std::isnan(logdet)) fail(ErrorKind::numerical, "cluster coefficient precision is not positive definite");
  const double quad = whitened_norm2(ctx.scratch.data(), L, ctx.shifted.data(), ctx.tmp.data());
  return -0.5 * (logdet - c.logdet) + 0.5 * (quad - c.quad) / sigma2;
}

// log of the cluster's integrated likelihood, up to per-subject constants.
double log_evidence(const ClusterStats& c, const ClusterStats& prior, double sigma2) {
  return 0.5 * (prior.logdet - c.logdet) + 0.5 * c.quad / sigma2;
}

}  // namespace

int BlockedGibbs::update_split_merge() {
  if (clusters_ < 2 || settings_.split_merge <= 0 || data_.subjects() < 2) return 0;
  MarginalLabelContext ctx = build_marginal_context(data_, state_, clusters_, settings_.marginal_labels && data_.q() > 0);
  const std::vector<double> log_pi = log_weights_of(state_.weights);
  const double sigma2 = state_.sigma2;
  const int n = static_cast<int>(data_.subjects());
  std::vector<int>& z = state_.labels;
  int accepted = 0;
  std::vector<int> others;
  std::vector<int> empties;
  for (int t = 0; t < settings_.split_merge; ++t) {
    const int i = rng_.uniform_int(0, n - 1);
    int j = rng_.uniform_int(0, n - 2);
    if (j >= i) ++j;
    const int a = z[static_cast<std::size_t>(i)];
    const int b = z[static_cast<std::size_t>(j)];
    const auto counts = state_.cluster_counts();
    empties.clear();
    for (int k = 0; k < clusters_; ++k) {
      if (counts[static_cast<std::size_t>(k)] == 0 && std::isfinite(log_pi[static_cast<std::size_t>(k)])) empties.push_back(k);
    }
    others.clear();
    for (int s = 0; s < n; ++s) {
      const int zs = z[static_cast<std::size_t>(s)];
      if (s != i && s != j && (zs == a || zs == b)) others.push_back(s);
    }
    std::shuffle(others.begin(), others.end(), rng_.engine());

    if (a == b) {
      if (empties.empty()) continue;
      const int l = empties[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<int>(empties.size()) - 1))];
      const ClusterStats prior_a = prior_stats(data_, state_, a);
      const ClusterStats prior_l = prior_stats(data_, state_, l);
      ClusterStats whole = prior_a;
      add_subject(whole, ctx, i, false);
      add_subject(whole, ctx, j, false);
      for (int s : others) add_subject(whole, ctx, s, false);
      refresh(whole, ctx.L, ctx.scratch, ctx.tmp);
      ClusterStats keep = prior_a;
      ClusterStats split = prior_l;
      add_subject(keep, ctx, i, true);
      add_subject(split, ctx, j, true);
      double log_q = 0.0;
      int moved = 1;
      std::vector<int> to_split;
      for (int s : others) {
        const double lk = log_pi[static_cast<std::size_t>(a)] + predictive(keep, ctx, s, sigma2);
        const double ll = log_pi[static_cast<std::size_t>(l)] + predictive(split, ctx, s, sigma2);
        const double top = std::max(lk, ll);
        const double norm = top + std::log(std::exp(lk - top) + std::exp(ll - top));
        if (std::log(rng_.uniform()) < ll - norm) {
          log_q += ll - norm;
          add_subject(split, ctx, s, true);
          to_split.push_back(s);
          ++moved;
        } else {
          log_q += lk - norm;
          add_subject(keep, ctx, s, true);
        }
      }
      const double log_ratio = log_evidence(keep, prior_a, sigma2) + log_evidence(split, prior_l, sigma2) -
                               log_evidence(whole, prior_a, sigma2) +
                               moved * (log_pi[static_cast<std::size_t>(l)] - log_pi[static_cast<std::size_t>(a)]) +
                               std::log(static_cast<double>(empties.size())) - log_q;
      if (!(log_ratio >= 0.0 || std::log(rng_.uniform()) < log_ratio)) continue;
      z[static_cast<std::size_t>(j)] = l;
      for (int s : to_split) z[static_cast<std::size_t>(s)] = l;
      ++accepted;
    } else {
      const ClusterStats prior_a = prior_stats(data_, state_, a);
      const ClusterStats prior_b = prior_stats(data_, state_, b);
      ClusterStats merged = prior_a;
      add_subject(merged, ctx, i, false);
      add_subject(merged, ctx, j, false);
      for (int s : others) add_subject(merged, ctx, s, false);
      refresh(merged, ctx.L, ctx.scratch, ctx.tmp);
      // Probability that a split launched from (i, j) recreates the current pair.
      ClusterStats keep = prior_a;
      ClusterStats split = prior_b;
      add_subject(keep, ctx, i, true);
      add_subject(split, ctx, j, true);
      double log_q = 0.0;
      int in_b = 1;
      for (int s : others) {
        const double lk = log_pi[static_cast<std::size_t>(a)] + predictive(keep, ctx, s, sigma2);
        const double ll = log_pi[static_cast<std::size_t>(b)] + predictive(split, ctx, s, sigma2);
        const double top = std::max(lk, ll);
        const double norm = top + std::log(std::exp(lk - top) + std::exp(ll - top));
        if (z[static_cast<std::size_t>(s)] == b) {
          log_q += ll - norm;
          add_subject(split, ctx, s, true);
          ++in_b;
        } else {
          log_q += lk - norm;
          add_subject(keep, ctx, s, true);
        }
      }
      const double log_ratio = log_evidence(merged, prior_a, sigma2) - log_evidence(keep, prior_a, sigma2) -
                               log_evidence(split, prior_b, sigma2) +
                               in_b * (log_pi[static_cast<std::size_t>(a)] - log_pi[static_cast<std::size_t>(b)]) -
                               std::log(static_cast<double>(empties.size() + 1)) + log_q;
      if (!(log_ratio >= 0.0 || std::log(rng_.uniform()) < log_ratio)) continue;
      for (int& zs : z) {
        if (zs == b) zs = a;
      }
      ++accepted;
    }
  }
  return accepted;
}

Eigen::VectorXd BlockedGibbs::label_log_probabilities(Eigen::Index subject) const {
  const Eigen::VectorXd fixed_fit = data_.X * state_.gamma;
  std::vector<double> panel;
  std::vector<double> cross;
  std::vector<double> scores;
  fill_panel(panel);
  label_scores(subject, fixed_fit, panel, cross, scores);
  Eigen::VectorXd lp(clusters_);
  for (int k = 0; k < clusters_; ++k) {
    const double pi = state_.weights(k);
    lp(k) = pi < kTinyWeight ? -std::numeric_limits<double>::infinity()
                             : std::log(pi) - scores[static_cast<std::size_t>(k)] * 0.5 / state_.sigma2;
  }
  const double top = lp.maxCoeff();
  const double norm = top + std::log((lp.array() - top).exp().sum());
  return lp.array() - norm;
}

int BlockedGibbs::update_label_order() {
  if (clusters_ < 2) return 0;
  const int proposals = settings_.label_swaps < 0 ? clusters_ : settings_.label_swaps;
  auto counts = state_.cluster_counts();
  std::vector<int> occupied;
  for (int k = 0; k < clusters_; ++k) {
    if (counts[static_cast<std::size_t>(k)] > 0) occupied.push_back(k);
  }
  int accepted = 0;
  for (int t = 0; t < proposals; ++t) {
    const int j = occupied[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<int>(occupied.size()) - 1))];
    int l = rng_.uniform_int(0, clusters_ - 2);
    if (l >= j) ++l;
    const double nj = counts[static_cast<std::size_t>(j)];
    const double nl = counts[static_cast<std::size_t>(l)];
    const double pj = state_.weights(j);
    const double pl = state_.weights(l);
    double log_ratio;
    if (pj <= 0.0 || pl <= 0.0) {
      // A zero weight holding members has zero posterior mass; only moves
      // that empty it are worth taking.
      const double exponent = nl - nj;
      if (pj <= 0.0 && pl <= 0.0) continue;
      if (exponent == 0.0) log_ratio = 0.0;
      else log_ratio = (pj <= 0.0) == (exponent < 0.0) ? std::numeric_limits<double>::infinity()
                                                       : -std::numeric_limits<double>::infinity();
    } else {
      log_ratio = (nl - nj) * (std::log(pj) - std::log(pl));
    }
    if (!(log_ratio >= 0.0 || std::log(rng_.uniform()) < log_ratio)) continue;
    for (int& z : state_.labels) {
      if (z == j) z = l;
      else if (z == l) z = j;
    }
    state_.beta.row(j).swap(state_.beta.row(l));
    state_.tau.row(j).swap(state_.tau.row(l));
    std::swap(counts[static_cast<std::size_t>(j)], counts[static_cast<std::size_t>(l)]);
    occupied.clear();
    for (int k = 0; k < clusters_; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) occupied.push_back(k);
    }
    ++accepted;
  }
  // Adjacent swaps that carry the sticks along: k <-> k + 1 with v_k <-> v_{k+1},
  // accepted with probability min(1, (1 - v_{k+1})^{n_k} / (1 - v_k)^{n_{k+1}}).
  // The last stick is fixed at 1, so k + 1 stays below K - 1.
  bool moved = false;
  for (int t = 0; t + 2 < clusters_ && t < proposals; ++t) {
    const int k = rng_.uniform_int(0, clusters_ - 3);
    const double nk = counts[static_cast<std::size_t>(k)];
    const double nk1 = counts[static_cast<std::size_t>(k) + 1];
    if (nk == nk1 && nk == 0.0) continue;
    const double log_ratio = nk * std::log1p(-state_.sticks(k + 1)) - nk1 * std::log1p(-state_.sticks(k));
    if (!(log_ratio >= 0.0 || std::log(rng_.uniform()) < log_ratio)) continue;
    for (int& z : state_.labels) {
      if (z == k) z = k + 1;
      else if (z == k + 1) z = k;
    }
    state_.beta.row(k).swap(state_.beta.row(k + 1));
    state_.tau.row(k).swap(state_.tau.row(k + 1));
    std::swap(state_.sticks(k), state_.sticks(k + 1));
    std::swap(counts[static_cast<std::size_t>(k)], counts[static_cast<std::size_t>(k) + 1]);
    moved = true;
    ++accepted;
  }
  if (moved) state_.weights = stick_weights(state_.sticks);
  return accepted;
}

void BlockedGibbs::update_sticks_and_alpha() {
  const auto counts = state_.cluster_counts();
  std::vector<double> tail(static_cast<std::size_t>(clusters_) + 1, 0.0);
  for (int k = clusters_ - 1; k >= 0; --k) tail[static_cast<std::size_t>(k)] = tail[static_cast<std::size_t>(k) + 1] + counts[static_cast<std::size_t>(k)];
  double log_remaining = 0.0;
  for (int k = 0; k + 1 < clusters_; ++k) {
    const double a = 1.0 + counts[static_cast<std::size_t>(k)];
    const double b = state_.alpha + tail[static_cast<std::size_t>(k) + 1];
    // With alpha small the last stick sits within rounding of 1; alpha still
    // needs the true log(1 - v), so it is tracked apart from the stored stick.
    const StickDraw d = draw_stick(rng_, a, b);
    state_.sticks(k) = std::min(d.v, kStickCeiling);
    log_remaining += d.log_rest;
  }
  state_.sticks(clusters_ - 1) = 1.0;
  state_.weights = stick_weights(state_.sticks);
  state_.alpha = rng_.gamma(prior_.a_alpha + clusters_ - 1, prior_.b_alpha - log_remaining);
}

std::vector<int> BlockedGibbs::active_clusters() const {
  const auto counts = state_.cluster_counts();
  std::vector<int> active;
  for (int k = 0; k < clusters_; ++k) {
    const int c = counts[static_cast<std::size_t>(k)];
    if (c > 0 && c > settings_.min_cluster_size) active.push_back(k);
  }
  return active;
}

Eigen::VectorXd BlockedGibbs::exposure_fit() const {
  Eigen::VectorXd fit(data_.rows());
  for (Eigen::Index s = 0; s < data_.subjects(); ++s) {
    const Eigen::Index begin = data_.offsets[static_cast<std::size_t>(s)];
    const Eigen::Index count = data_.offsets[static_cast<std::size_t>(s) + 1] - begin;
    fit.segment(begin, count) = data_.Phi.middleRows(begin, count) * state_.beta.row(state_.labels[static_cast<std::size_t>(s)]).transpose();
  }
  return fit;
}

Eigen::VectorXd BlockedGibbs::random_effect_fit() const {
  Eigen::VectorXd fit = Eigen::VectorXd::Zero(data_.rows());
  if (data_.q() == 0) return fit;
  for (Eigen::Index s = 0; s < data_.subjects(); ++s) {
    const Eigen::Index begin = data_.offsets[static_cast<std::size_t>(s)];
    const Eigen::Index count = data_.offsets[static_cast<std::size_t>(s) + 1] - begin;
    fit.segment(begin, count) = data_.Z.middleRows(begin, count) * state_.random_effects.row(s).transpose();
  }
  return fit;
}

Eigen::VectorXd BlockedGibbs::residuals() const {
  return data_.y - data_.X * state_.gamma - exposure_fit() - random_effect_fit();
}

CoefficientConditional BlockedGibbs::coefficient_conditional() const {
  CoefficientConditional out;
  out.active = active_clusters();
  const Eigen::Index p = data_.p();
  const Eigen::Index L = data_.dim();
  const auto A = static_cast<Eigen::Index>(out.active.size());
  const Eigen::Index dim = p + A * L;

  std::vector<int> slot(static_cast<std::size_t>(clusters_), -1);
  for (Eigen::Index a = 0; a < A; ++a) slot[static_cast<std::size_t>(out.active[static_cast<std::size_t>(a)])] = static_cast<int>(a);

  // Target for the joint block: outcome minus random effects and minus the
  // exposure of subjects whose cluster is outside the solve.
  Eigen::VectorXd target = data_.y - random_effect_fit();
  for (Eigen::Index s = 0; s < data_.subjects(); ++s) {
    const int k = state_.labels[static_cast<std::size_t>(s)];
    if (slot[static_cast<std::size_t>(k)] >= 0) continue;
    const Eigen::Index begin = data_.offsets[static_cast<std::size_t>(s)];
    const Eigen::Index count = data_.offsets[static_cast<std::size_t>(s) + 1] - begin;
    target.segment(begin, count) -= data_.Phi.middleRows(begin, count) * state_.beta.row(k).transpose();
  }

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  if (p > 0) {
    gram.topLeftCorner(p, p) = data_.XtWX;
    rhs.head(p) = data_.X.transpose() * (data_.w.asDiagonal() * target);
  }
  for (Eigen::Index s = 0; s < data_.subjects(); ++s) {
    const int a = slot[static_cast<std::size_t>(state_.labels[static_cast<std::size_t>(s)])];
    if (a < 0) continue;
    const Eigen::Index off = p + a * L;
    const Eigen::Index begin = data_.offsets[static_cast<std::size_t>(s)];
    const Eigen::Index count = data_.offsets[static_cast<std::size_t>(s) + 1] - begin;
    const double* sgram = data_.subject_gram(s);
    for (Eigen::Index l = 0; l < L; ++l) {
      // Column l of the symmetric block equals row l of the row-major gram.
      kernels::accumulate({&gram(off, off + l), static_cast<std::size_t>(L)}, {sgram + l * L, static_cast<std::size_t>(L)});
      if (p > 0) {
        const Eigen::MatrixXd& xphi = data_.cross_x_exposure[static_cast<std::size_t>(s)];
        kernels::accumulate({&gram(0, off + l), static_cast<std::size_t>(p)}, {xphi.data() + l * p, static_cast<std::size_t>(p)});
      }
      rhs(off + l) += kernels::weighted_dot(segment(data_.w, begin, count), column_segment(data_.Phi, l, begin, count),
                                            segment(target, begin, count));
    }
  }
  if (p > 0 && A > 0) gram.bottomLeftCorner(A * L, p) = gram.topRightCorner(p, A * L).transpose();
  for (Eigen::Index j = 0; j < p; ++j) gram(j, j) += 1.0 / prior_.gamma_variance;
  for (Eigen::Index a = 0; a < A; ++a) {
    const int k = out.active[static_cast<std::size_t>(a)];
    for (Eigen::Index l = 0; l < L; ++l) gram(p + a * L + l, p + a * L + l) += state_.tau(k, l < data_.range_dim ? 0 : 1);
  }
  Eigen::LLT<Eigen::MatrixXd> chol(gram);
  if (chol.info() != Eigen::Success) fail(ErrorKind::numerical, "coefficient posterior precision is not positive definite");
  out.mean = chol.solve(rhs);
  out.precision = std::move(gram);
  out.factor = std::move(chol);
  return out;
}

void BlockedGibbs::update_coefficients() {
  // Clusters outside the joint solve take fresh prior draws first so the
  // solve sees their current exposure.
  const auto active = active_clusters();
  std::vector<bool> is_active(static_cast<std::size_t>(clusters_), false);
  for (int k : active) is_active[static_cast<std::size_t>(k)] = true;
  for (int k = 0; k < clusters_; ++k) {
    if (!is_active[static_cast<std::size_t>(k)]) draw_prior_beta(k);
  }
  const CoefficientConditional cond = coefficient_conditional();
  const Eigen::VectorXd noise = cond.factor.matrixU().solve(rng_.normal_vector(cond.mean.size()));
  const Eigen::VectorXd draw = cond.mean + std::sqrt(state_.sigma2) * noise;
  const Eigen::Index p = data_.p();
  const Eigen::Index L = data_.dim();
  state_.gamma = draw.head(p);
  for (std::size_t a = 0; a < cond.active.size(); ++a) {
    state_.beta.row(cond.active[a]) = draw.segment(p + static_cast<Eigen::Index>(a) * L, L).transpose();
  }
}

void BlockedGibbs::update_precisions() {
  const auto counts = state_.cluster_counts();
  const Eigen::Index L = data_.dim();
  const Eigen::Index r = data_.range_dim;
  for (int k = 0; k < clusters_; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) {
      state_.tau(k, 0) = rng_.gamma(prior_.a_tau, prior_.b_tau);
      state_.tau(k, 1) = rng_.gamma(prior_.a_tau, prior_.b_tau);
      continue;
    }
    const double range_ss = state_.beta.row(k).head(r).squaredNorm();
    const double null_ss = state_.beta.row(k).tail(L - r).squaredNorm();
    state_.tau(k, 0) = rng_.gamma(prior_.a_tau + 0.5 * static_cast<double>(r), prior_.b_tau + 0.5 * range_ss / state_.sigma2);
    state_.tau(k, 1) = rng_.gamma(prior_.a_tau + 0.5 * static_cast<double>(L - r), prior_.b_tau + 0.5 * null_ss / state_.sigma2);
  }
}

void BlockedGibbs::update_variance() {
  const Eigen::VectorXd resid = residuals();
  const std::span<const double> rs{resid.data(), static_cast<std::size_t>(resid.size())};
  const double ssr = kernels::weighted_dot({data_.w.data(), static_cast<std::size_t>(data_.w.size())}, rs, rs);
  const auto active = active_clusters();
  const Eigen::Index L = data_.dim();
  const Eigen::Index r = data_.range_dim;
  double penalty = state_.gamma.squaredNorm() / prior_.gamma_variance;
  for (int k : active) {
    penalty += state_.tau(k, 0) * state_.beta.row(k).head(r).squaredNorm();
    penalty += state_.tau(k, 1) * state_.beta.row(k).tail(L - r).squaredNorm();
  }
  const double count = static_cast<double>(data_.likelihood_rows + data_.p() + static_cast<Eigen::Index>(active.size()) * L);
  const double precision = rng_.gamma(prior_.a_sigma + 0.5 * count, prior_.b_sigma + 0.5 * (ssr + penalty));
  state_.sigma2 = 1.0 / precision;
  // Coefficients outside the solve are prior draws and must follow the new
  // variance.
  std::vector<bool> is_active(static_cast<std::size_t>(clusters_), false);
  for (int k : active) is_active[static_cast<std::size_t>(k)] = true;
  for (int k = 0; k < clusters_; ++k) {
    if (!is_active[static_cast<std::size_t>(k)]) draw_prior_beta(k);
  }
}

void BlockedGibbs::update_random_effects() {
  const Eigen::Index q = data_.q();
  if (q == 0) return;
  Eigen::LLT<Eigen::MatrixXd> chol(state_.re_covariance);
  if (chol.info() != Eigen::Success) fail(ErrorKind::numerical, "random-effect covariance is not positive definite");
  const Eigen::MatrixXd re_precision = chol.solve(Eigen::MatrixXd::Identity(q, q));
  const Eigen::VectorXd fit = data_.X * state_.gamma + exposure_fit();
  for (Eigen::Index s = 0; s < data_.subjects(); ++s) {
    const Eigen::Index begin = data_.offsets[static_cast<std::size_t>(s)];
    const Eigen::Index count = data_.offsets[static_cast<std::size_t>(s) + 1] - begin;
    const Eigen::VectorXd resid = data_.y.segment(begin, count) - fit.segment(begin, count);
    const Eigen::VectorXd ztwr = data_.Z.middleRows(begin, count).transpose() * (data_.w.segment(begin, count).asDiagonal() * resid);
    state_.random_effects.row(s) =
        draw_random_effect(rng_, data_.re_gram[static_cast<std::size_t>(s)], ztwr, state_.sigma2, re_precision).transpose();
  }
}

void BlockedGibbs::update_re_covariance() {
  if (data_.q() == 0) return;
  const auto cond = re_covariance_conditional(state_.random_effects, prior_);
  state_.re_covariance = draw_inverse_wishart(rng_, cond.df, cond.scale);
}

void BlockedGibbs::update_collapsed_effects() {
  if (data_.q() == 0) return;
  MarginalLabelContext ctx = build_marginal_context(data_, state_, clusters_, true);
  const auto counts = state_.cluster_counts();
  const Eigen::Index L = data_.dim();
  const double sigma = std::sqrt(state_.sigma2);
  for (int k = 0; k < clusters_; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) continue;
    const auto& st = ctx.stats[static_cast<std::size_t>(k)];
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> H(st.H.data(), L, L);
    const Eigen::Map<const Eigen::VectorXd> h(st.h.data(), L);
    const Eigen::LLT<Eigen::MatrixXd> chol(H);
    if (chol.info() != Eigen::Success) fail(ErrorKind::numerical, "cluster coefficient precision is not positive definite");
    state_.beta.row(k) = (chol.solve(h) + sigma * chol.matrixU().solve(rng_.normal_vector(L))).transpose();
  }
  update_random_effects();
}

void BlockedGibbs::sweep() {
  if (settings_.marginal_labels) update_labels_marginal();
  else update_labels();
  update_split_merge();
  update_label_order();
  if (settings_.marginal_labels) update_collapsed_effects();
  update_sticks_and_alpha();
  update_coefficients();
  update_precisions();
  update_variance();
  update_random_effects();
  update_re_covariance();
}

ModelState init_state(const ModelData& data, const PriorConfig& prior, std::uint64_t seed) {
  ChainSettings settings;
  settings.seed = seed;
  BlockedGibbs sampler(data, prior, settings, Random(seed, {0}));
  sampler.initialize();
  return sampler.state();
}

}  // namespace stapdp
