#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "stapdp/basis.hpp"
#include "stapdp/draws.hpp"
#include "stapdp/errors.hpp"
#include "stapdp/sampler.hpp"
#include "stapdp/simgen.hpp"

using namespace stapdp;

namespace {

// Small hand-built dataset: n subjects with `occasions` rows each; subject 0
// has no features at all.
Dataset toy_dataset(int n, int occasions, bool random_intercept, std::uint64_t seed) {
  Random rng(seed);
  std::vector<ObservationRow> rows;
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < occasions; ++t) {
      ObservationRow r;
      r.subject_id = "s" + std::to_string(10 + s);
      r.occasion_id = std::to_string(t);
      r.x = {1.0, rng.uniform()};
      if (random_intercept) r.z = {1.0};
      r.weight = 1.0 + rng.uniform_int(0, 3);
      std::vector<double> d;
      if (s != 0) {
        for (int j = 0; j < 2 + rng.uniform_int(0, 3); ++j) d.push_back(rng.uniform());
      }
      r.distances = DistanceSet(d, 1.0);
      r.y = 1.0 + 0.5 * r.x[1] + (s % 2 == 0 ? 1.0 : -0.5) * static_cast<double>(d.size()) * 0.3 + 0.3 * rng.normal();
      rows.push_back(r);
    }
  }
  std::vector<std::string> z_names;
  if (random_intercept) z_names.push_back("re_intercept");
  return Dataset(rows, 1.0, {"intercept", "x"}, z_names);
}

double log_gaussian(const Eigen::VectorXd& r, const Eigen::MatrixXd& V) {
  const Eigen::LLT<Eigen::MatrixXd> llt(V);
  const Eigen::MatrixXd L = llt.matrixL();
  return -L.diagonal().array().log().sum() - 0.5 * r.dot(llt.solve(r));
}

// log p(y | z, gamma, sigma2, tau, Sigma) with beta (and b when
// integrate_re) integrated out, from the dense marginal covariance.
double dense_log_evidence(const ModelData& data, const ModelState& st, const std::vector<int>& z, bool integrate_re) {
  const Eigen::Index n = data.rows();
  const Eigen::Index L = data.dim();
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, n);
  V.diagonal() = st.sigma2 * data.w.cwiseInverse();
  Eigen::VectorXd r = data.y - data.X * st.gamma;
  const int K = static_cast<int>(st.beta.rows());
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(n, L);
    for (std::size_t s = 0; s + 1 < data.offsets.size(); ++s) {
      if (z[s] != k) continue;
      const Eigen::Index b = data.offsets[s];
      const Eigen::Index c = data.offsets[s + 1] - b;
      Phi.middleRows(b, c) = data.Phi.middleRows(b, c);
    }
    Eigen::VectorXd lambda(L);
    for (Eigen::Index l = 0; l < L; ++l) lambda(l) = 1.0 / st.tau(k, l < data.range_dim ? 0 : 1);
    V += st.sigma2 * Phi * lambda.asDiagonal() * Phi.transpose();
  }
  for (std::size_t s = 0; s + 1 < data.offsets.size(); ++s) {
    const Eigen::Index b = data.offsets[s];
    const Eigen::Index c = data.offsets[s + 1] - b;
    if (data.q() == 0) continue;
    if (integrate_re) {
      V.block(b, b, c, c) += data.Z.middleRows(b, c) * st.re_covariance * data.Z.middleRows(b, c).transpose();
    } else {
      r.segment(b, c) -= data.Z.middleRows(b, c) * st.random_effects.row(static_cast<Eigen::Index>(s)).transpose();
    }
  }
  return log_gaussian(r, V);
}

void fix_state(ModelState& st, int K) {
  st.weights = Eigen::VectorXd::LinSpaced(K, 1.0, static_cast<double>(K));
  st.weights /= st.weights.sum();
  for (int k = 0; k < K; ++k) {
    st.tau(k, 0) = 0.5 + 0.3 * k;
    st.tau(k, 1) = 1.5 - 0.2 * k;
  }
  st.sigma2 = 0.7;
  st.gamma << 1.0, 0.5;
  if (st.re_covariance.size() > 0) st.re_covariance(0, 0) = 0.8;
}

std::uint64_t encode(const std::vector<int>& z, int K) {
  std::uint64_t code = 0;
  for (int v : z) code = code * static_cast<std::uint64_t>(K) + static_cast<std::uint64_t>(v);
  return code;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("stick arithmetic") {
  Eigen::VectorXd v(3);
  v << 0.5, 0.5, 1.0;
  const Eigen::VectorXd pi = stick_weights(v);
  CHECK(pi(0) == 0.5);
  CHECK(pi(1) == 0.25);
  CHECK(pi(2) == 0.25);
}

TEST_CASE("initial state") {
  const Dataset ds = toy_dataset(200, 1, false, 1);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(ds, basis);
  PriorConfig one;
  one.clusters = 1;
  const ModelState s1 = init_state(data, one, 5);
  for (int z : s1.labels) CHECK(z == 0);
  PriorConfig many;
  const ModelState a = init_state(data, many, 5);
  const ModelState b = init_state(data, many, 5);
  CHECK(a.labels == b.labels);
  CHECK(a.beta == b.beta);
  CHECK(a.alpha == b.alpha);
  for (int z : a.labels) CHECK((z >= 0 && z < 50));
  CHECK(std::abs(a.weights.sum() - 1.0) < 1e-12);
  CHECK(a.sticks(49) == 1.0);
}

TEST_CASE("single cluster keeps every label") {
  const Dataset ds = toy_dataset(10, 1, false, 2);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(ds, basis);
  PriorConfig prior;
  prior.clusters = 1;
  BlockedGibbs g(data, prior, {}, Random(1));
  g.initialize();
  for (int t = 0; t < 5; ++t) g.sweep();
  for (int z : g.state().labels) CHECK(z == 0);
}

TEST_CASE("a subject without features is labelled by the weights alone") {
  const Dataset ds = toy_dataset(6, 2, true, 3);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(ds, basis);
  PriorConfig prior;
  prior.clusters = 4;
  for (bool marginal : {false, true}) {
    ChainSettings cs;
    cs.marginal_labels = marginal;
    BlockedGibbs g(data, prior, cs, Random(2));
    g.initialize();
    fix_state(g.state(), 4);
    const Eigen::VectorXd lp = g.label_log_probabilities(0);
    const Eigen::VectorXd mp = g.marginal_label_log_probabilities(0);
    for (int k = 0; k < 4; ++k) {
      CHECK(lp(k) == doctest::Approx(std::log(g.state().weights(k))).epsilon(1e-12));
      CHECK(mp(k) == doctest::Approx(std::log(g.state().weights(k))).epsilon(1e-12));
    }
  }
}

TEST_CASE("conditional label probabilities match the Gaussian likelihood") {
  const Dataset ds = toy_dataset(5, 2, true, 4);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(ds, basis);
  PriorConfig prior;
  prior.clusters = 3;
  BlockedGibbs g(data, prior, {}, Random(3));
  g.initialize();
  fix_state(g.state(), 3);
  g.state().random_effects(2, 0) = 0.4;
  const Eigen::Index s = 2;
  const Eigen::Index b = data.offsets[2];
  const Eigen::Index c = data.offsets[3] - b;
  Eigen::VectorXd lp(3);
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd mean = data.X.middleRows(b, c) * g.state().gamma + data.Phi.middleRows(b, c) * g.state().beta.row(k).transpose() +
                                 data.Z.middleRows(b, c) * g.state().random_effects.row(s).transpose();
    const Eigen::VectorXd r = data.y.segment(b, c) - mean;
    lp(k) = std::log(g.state().weights(k)) - 0.5 * (data.w.segment(b, c).array() * r.array().square()).sum() / g.state().sigma2;
  }
  lp.array() -= std::log(lp.array().exp().sum());
  const Eigen::VectorXd got = g.label_log_probabilities(s);
  for (int k = 0; k < 3; ++k) CHECK(got(k) == doctest::Approx(lp(k)).epsilon(1e-10));
}

TEST_CASE("marginal label probabilities match the dense marginal likelihood") {
  for (bool integrate_re : {false, true}) {
    const Dataset ds = toy_dataset(6, 3, true, 5);
    const StapBasis basis(3, 7, 1.0, 2);
    const ModelData data(ds, basis);
    PriorConfig prior;
    prior.clusters = 3;
    ChainSettings cs;
    cs.marginal_labels = integrate_re;
    BlockedGibbs g(data, prior, cs, Random(4));
    g.initialize();
    fix_state(g.state(), 3);
    g.state().labels = {0, 1, 1, 2, 0, 1};
    for (int s = 0; s < 6; ++s) g.state().random_effects(s, 0) = 0.1 * s - 0.2;
    for (Eigen::Index s : {1, 3, 5}) {
      Eigen::VectorXd lp(3);
      std::vector<int> z = g.state().labels;
      for (int k = 0; k < 3; ++k) {
        z[static_cast<std::size_t>(s)] = k;
        lp(k) = std::log(g.state().weights(k)) + dense_log_evidence(data, g.state(), z, integrate_re);
      }
      const double top = lp.maxCoeff();
      lp.array() -= top + std::log((lp.array() - top).exp().sum());
      const Eigen::VectorXd got = g.marginal_label_log_probabilities(s);
      for (int k = 0; k < 3; ++k) CHECK(got(k) == doctest::Approx(lp(k)).epsilon(1e-9));
    }
  }
}

TEST_CASE("collapsed label moves sample the exact partition law") {
  // Four subjects, three clusters: 81 labelings enumerated against the dense
  // marginal likelihood. Sticks, tau, gamma and the variances stay fixed, so
  // label updates alone must reproduce p(z | rest).
  const Dataset ds = toy_dataset(4, 2, true, 6);
  const StapBasis basis(2, 4, 1.0, 1);
  const ModelData data(ds, basis);
  PriorConfig prior;
  prior.clusters = 3;
  const int K = 3;
  for (int variant = 0; variant < 2; ++variant) {
    ChainSettings cs;
    cs.marginal_labels = true;
    cs.split_merge = 2;
    BlockedGibbs g(data, prior, cs, Random(10 + variant));
    g.initialize();
    fix_state(g.state(), K);
    std::map<std::uint64_t, double> exact;
    double total = 0.0;
    std::vector<int> z(4);
    for (int code = 0; code < 81; ++code) {
      int c = code;
      for (int i = 3; i >= 0; --i) {
        z[static_cast<std::size_t>(i)] = c % K;
        c /= K;
      }
      double lp = dense_log_evidence(data, g.state(), z, true);
      for (int v : z) lp += std::log(g.state().weights(v));
      exact[encode(z, K)] = std::exp(lp);
      total += std::exp(lp);
    }
    for (auto& [key, p] : exact) p /= total;

    std::map<std::uint64_t, double> seen;
    const int iters = 150000;
    for (int t = 0; t < iters; ++t) {
      if (variant == 0) {
        g.update_labels_marginal();
        g.update_split_merge();
      } else {
        // Split-merge alone on top of single-site moves restricted to every
        // fifth sweep, so most transitions come from split-merge.
        if (t % 5 == 0) g.update_labels_marginal();
        g.update_split_merge();
      }
      seen[encode(g.state().labels, K)] += 1.0 / iters;
    }
    double tv = 0.0;
    for (const auto& [key, p] : exact) tv += std::abs(p - seen[key]);
    CHECK(0.5 * tv < 0.02);
  }
}

TEST_CASE("plug-in classifier with true curves recovers the generating labels") {
  ScenarioConfig sc;
  sc.subjects = 200;
  sc.high_law = DistanceLaw::Uniform();
  sc.low_law = DistanceLaw::Uniform();
  const SimulatedData sim = simulate(sc, 1);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(sim.dataset, basis);
  PriorConfig prior;
  prior.clusters = 2;
  BlockedGibbs g(data, prior, {}, Random(1));
  g.initialize();
  // Least-squares B-spline coefficients of f1.
  const int n = 400;
  Eigen::MatrixXd A(n, 7);
  Eigen::VectorXd f(n);
  const TrueCurves truth{0.0, 1.0};
  for (int i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) / (n - 1);
    A.row(i) = basis.spline().evaluate(d).transpose();
    f(i) = truth.high(d);
  }
  const Eigen::VectorXd theta = A.colPivHouseholderQr().solve(f);
  g.state().beta.row(0) = basis.to_transformed(theta).transpose();
  g.state().beta.row(1).setZero();
  g.state().gamma << 26.0, 0.5;
  g.state().sigma2 = 1.0;
  g.state().weights << 0.5, 0.5;
  int hits = 0;
  for (Eigen::Index s = 0; s < data.subjects(); ++s) {
    const Eigen::VectorXd lp = g.label_log_probabilities(s);
    const int k = lp(0) >= lp(1) ? 1 : 2;
    hits += k == sim.truth[static_cast<std::size_t>(s)];
  }
  CHECK(hits >= 190);
}

TEST_CASE("homogeneous conditional mean is the generalized ridge solution") {
  ScenarioConfig sc;
  sc.subjects = 150;
  sc.probabilities = {1.0, 0.0};
  const SimulatedData sim = simulate(sc, 3);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(sim.dataset, basis);
  PriorConfig prior;
  prior.clusters = 1;
  BlockedGibbs g(data, prior, {}, Random(2));
  g.initialize();
  g.state().tau << 2.0, 0.5;
  const CoefficientConditional cond = g.coefficient_conditional();

  // Independent solve in B-spline coordinates: penalty tau1 S + tau2 N with N
  // the projector onto null(S), plus the weak gamma ridge.
  const Eigen::MatrixXd S = basis.penalty().penalty;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  const Eigen::MatrixXd kernel = lu.kernel();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(7, kernel.cols());
  const Eigen::MatrixXd P = 2.0 * S + 0.5 * Q * Q.transpose();
  const Eigen::Index p = data.p();
  const Eigen::Index rows = data.rows();
  Eigen::MatrixXd design(rows, p + 7);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = sim.dataset.rows()[static_cast<std::size_t>(i)];
    design(i, 0) = row.x[0];
    design(i, 1) = row.x[1];
    design.row(i).tail(7) = exposure_row(basis.spline(), row.distances.values()).transpose();
  }
  Eigen::MatrixXd prec = design.transpose() * design;
  prec.topLeftCorner(p, p).diagonal().array() += 1e-6;
  prec.bottomRightCorner(7, 7) += P;
  Eigen::VectorXd rhs = design.transpose() * data.y;
  const Eigen::VectorXd sol = prec.ldlt().solve(rhs);
  CHECK((cond.mean.head(p) - sol.head(p)).norm() < 1e-8 * std::max(1.0, sol.head(p).norm()));
  const Eigen::VectorXd theta = basis.to_original(cond.mean.tail(7));
  CHECK((theta - sol.tail(7)).norm() < 1e-8 * std::max(1.0, sol.tail(7).norm()));
}

TEST_CASE("precision update plug-in") {
  const Dataset ds = toy_dataset(4, 1, false, 7);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(ds, basis);
  PriorConfig prior;
  prior.clusters = 2;
  BlockedGibbs g(data, prior, {}, Random(5));
  g.initialize();
  g.state().labels = {0, 0, 0, 0};
  g.state().sigma2 = 1.0;
  Eigen::RowVectorXd beta = Eigen::RowVectorXd::Zero(7);
  beta(0) = std::sqrt(10.0);  // |beta_range|^2 = 10, null part 0
  double s1 = 0.0;
  double s2 = 0.0;
  double q1 = 0.0;
  const int n = 40000;
  for (int t = 0; t < n; ++t) {
    g.state().beta.row(0) = beta;
    g.update_precisions();
    s1 += g.state().tau(0, 0);
    q1 += g.state().tau(0, 0) * g.state().tau(0, 0);
    s2 += g.state().tau(0, 1);
  }
  const double m1 = s1 / n;
  CHECK(m1 == doctest::Approx(3.5 / 6.0).epsilon(0.02));
  CHECK(q1 / n - m1 * m1 == doctest::Approx(3.5 / 36.0).epsilon(0.05));
  CHECK(s2 / n == doctest::Approx(2.0).epsilon(0.02));  // Gamma(1 + 2/2, 1)
}

TEST_CASE("first stick under full occupancy") {
  const Dataset ds = toy_dataset(30, 1, false, 8);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(ds, basis);
  PriorConfig prior;
  prior.clusters = 5;
  BlockedGibbs g(data, prior, {}, Random(6));
  g.initialize();
  std::fill(g.state().labels.begin(), g.state().labels.end(), 0);
  double v1 = 0.0;
  double v3 = 0.0;
  const int n = 20000;
  for (int t = 0; t < n; ++t) {
    g.state().alpha = 1.0;
    g.update_sticks_and_alpha();
    v1 += g.state().sticks(0);
    v3 += g.state().sticks(2);
    CHECK(std::abs(g.state().weights.sum() - 1.0) < 1e-12);
  }
  CHECK(v1 / n == doctest::Approx(31.0 / 32.0).epsilon(0.002));
  CHECK(v3 / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("random effect scalar conjugacy") {
  Random rng(7);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd r(1);
  r << 1.6;
  double s = 0.0;
  double q = 0.0;
  const int n = 100000;
  for (int t = 0; t < n; ++t) {
    const double b = draw_random_effect(rng, one, r, 1.0, one)(0);
    s += b;
    q += b * b;
  }
  CHECK(s / n == doctest::Approx(0.8).epsilon(0.01));
  CHECK(q / n - (s / n) * (s / n) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("random effect covariance conditional") {
  PriorConfig prior;
  prior.re_prior = RandomEffectPrior::inverse_wishart;
  prior.re_prior_df = 3.0;
  const auto c = re_covariance_conditional(Eigen::MatrixXd::Zero(20, 1), prior);
  CHECK(c.df == 23.0);
  CHECK(c.scale(0, 0) == 1.0);
  PriorConfig jeff;
  CHECK_THROWS_AS(re_covariance_conditional(Eigen::MatrixXd::Zero(20, 1), jeff), Error);
}

TEST_CASE("small clusters below the threshold leave the joint solve") {
  const Dataset ds = toy_dataset(6, 1, false, 9);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(ds, basis);
  PriorConfig prior;
  prior.clusters = 3;
  ChainSettings cs;
  cs.min_cluster_size = 1;
  BlockedGibbs g(data, prior, cs, Random(8));
  g.initialize();
  g.state().labels = {0, 0, 0, 1, 0, 0};
  CHECK(g.coefficient_conditional().active == std::vector<int>{0});
}

TEST_CASE("chains are reproducible and honour zero retained draws") {
  const Dataset ds = toy_dataset(20, 1, false, 10);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(ds, basis);
  PriorConfig prior;
  prior.clusters = 5;
  ChainSettings cs;
  cs.burn_in = 20;
  cs.retained = 0;
  CHECK(run_chain(data, prior, cs, 0).size() == 0);
  cs.retained = 15;
  cs.chains = 2;
  const auto a = run_chains(data, prior, cs);
  const auto b = run_chains(data, prior, cs);
  for (int c = 0; c < 2; ++c) {
    CHECK(a.chains[c].labels == b.chains[c].labels);
    CHECK(a.chains[c].beta == b.chains[c].beta);
    CHECK(a.chains[c].sigma2 == b.chains[c].sigma2);
  }
  CHECK(a.chains[0].sigma2 != a.chains[1].sigma2);
  for (const auto& ch : a.chains) {
    for (Eigen::Index m = 0; m < ch.size(); ++m) {
      CHECK(ch.occupied(m) <= 5);
      CHECK(std::abs(ch.weights.row(m).sum() - 1.0) < 1e-12);
    }
  }
}

}
