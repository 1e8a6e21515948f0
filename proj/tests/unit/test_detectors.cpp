#include <cmath>
#include <random>

#include "doctest.h"
#include "gold/detectors.hpp"
#include "gold/error.hpp"
#include "oracles.hpp"

using namespace gold;

namespace {

SoftmaxClassifier identity_model(std::size_t k) {
  return SoftmaxClassifier(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)),
                           Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k)),
                           std::vector<std::string>(k, "c"));
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// log-probabilities as logits reproduce the probabilities exactly.
Eigen::VectorXd logits_for(std::initializer_list<double> probs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(probs.size()));
  Eigen::Index i = 0;
  for (double p : probs) v(i++) = std::log(p);
  return v;
}

SoftmaxClassifier named_model(Eigen::MatrixXd w) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < w.rows(); ++i) names.push_back("c" + std::to_string(i));
  return SoftmaxClassifier(w, Eigen::VectorXd::Zero(w.rows()), names);
}

}  // namespace

TEST_SUITE("detectors") {
  TEST_CASE("centroids and covariance") {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 2, 0, 0, 2, 2, 2;
    const std::vector<std::size_t> y = {0, 0, 1, 1};
    const auto m = named_model(Eigen::MatrixXd::Identity(2, 2));
    const InsGeometry g = fit_geometry(m, x, y);
    CHECK(g.centroids()(0, 0) == 1.0);
    CHECK(g.centroids()(0, 1) == 0.0);
    CHECK(g.centroids()(1, 0) == 1.0);
    CHECK(g.centroids()(1, 1) == 2.0);

    std::vector<Eigen::VectorXd> rows;
    for (int i = 0; i < 4; ++i) rows.push_back(x.row(i).transpose());
    Eigen::MatrixXd expect = oracle::pooled_covariance(rows, {0, 0, 1, 1}, 2);
    expect.diagonal().array() += g.lambda();
    CHECK((g.covariance() - expect).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(g.lambda() == doctest::Approx(1e-3 * 1.0 / 2.0));
  }

  TEST_CASE("random pooled covariance matches the loop oracle") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd x(30, 3);
    std::vector<std::size_t> y;
    std::vector<Eigen::VectorXd> rows;
    for (int i = 0; i < 30; ++i) {
      for (int j = 0; j < 3; ++j) x(i, j) = n(rng) + (i % 3);
      y.push_back(static_cast<std::size_t>(i % 3));
      rows.push_back(x.row(i).transpose());
    }
    const auto m = named_model(Eigen::MatrixXd::Identity(3, 3));
    const InsGeometry g = fit_geometry(m, x, y);
    Eigen::MatrixXd expect = oracle::pooled_covariance(rows, y, 3);
    expect.diagonal().array() += 1e-3 * expect.trace() / 3.0;
    CHECK((g.covariance() - expect).cwiseAbs().maxCoeff() <= 1e-9);
  }

  TEST_CASE("duplicated points give lambda times identity") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 1, 1, 1, 3, 0, 3, 0;
    const auto m = named_model(Eigen::MatrixXd::Identity(2, 2));
    const InsGeometry g = fit_geometry(m, x, std::vector<std::size_t>{0, 0, 1, 1});
    CHECK(g.covariance() == g.lambda() * Eigen::MatrixXd::Identity(2, 2));
    CHECK(g.lambda() > 0.0);
  }

  TEST_CASE("singleton intent") {
    Eigen::MatrixXd x(3, 2);
    x << 0, 0, 1, 1, 2, 2;
    const auto m = named_model(Eigen::MatrixXd::Identity(2, 2));
    try {
      fit_geometry(m, x, std::vector<std::size_t>{0, 0, 1});
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingletonIntent);
    }
  }

  TEST_CASE("maxprob") {
    const auto m = identity_model(3);
    CHECK(score_maxprob(m, vec({1000.0, 0.0, 0.0})) == doctest::Approx(0.0));
    const auto m4 = identity_model(4);
    CHECK(score_maxprob(m4, Eigen::VectorXd::Zero(4)) == doctest::Approx(0.75));
    CHECK(score_maxprob(m, logits_for({0.6, 0.3, 0.1})) == doctest::Approx(0.4).epsilon(1e-12));
  }

  TEST_CASE("odin") {
    const auto m = identity_model(2);
    const Eigen::VectorXd x = vec({2.0, 0.0});
    CHECK(score_odin(m, x, 1.0, 0.0) == doctest::Approx(score_maxprob(m, x)).epsilon(1e-12));
    CHECK(score_odin(m, x, 2.0, 0.0) == doctest::Approx(1.0 - 1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
    CHECK(score_odin(m, x, 2.0, 0.0) == doctest::Approx(0.26894).epsilon(1e-5));
    CHECK(score_odin(identity_model(4), vec({3, 1, 0, 2}), 1e9, 0.0) == doctest::Approx(0.75).epsilon(1e-6));
    // The perturbation moves the input toward the predicted class.
    CHECK(score_odin(m, vec({0.1, 0.0}), 1.0, 0.05) < score_odin(m, vec({0.1, 0.0}), 1.0, 0.0));
  }

  TEST_CASE("entropy") {
    const auto m = identity_model(2);
    CHECK(score_entropy(m, vec({800.0, 0.0})) == doctest::Approx(0.0));
    CHECK(score_entropy(m, vec({0.0, 0.0})) == doctest::Approx(0.69315).epsilon(1e-5));
    CHECK(score_entropy(identity_model(5), Eigen::VectorXd::Zero(5)) == doctest::Approx(std::log(5.0)));
  }

  TEST_CASE("centroid and mahalanobis distances") {
    Eigen::MatrixXd mu(2, 2);
    mu << 0, 0, 4, 0;
    const InsGeometry iso = InsGeometry::from_parts(mu, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2));
    CHECK(score_centroid(iso, vec({1.0, 0.0})) == 1.0);
    CHECK(score_centroid(iso, vec({4.0, 0.0})) == 0.0);
    CHECK(score_mahalanobis(iso, vec({4.0, 0.0})) == doctest::Approx(0.0));

    Eigen::MatrixXd one(1, 2);
    one << 0, 0;
    Eigen::MatrixXd cov(2, 2);
    cov << 4, 0, 0, 1;
    const InsGeometry aniso = InsGeometry::from_parts(one, cov, Eigen::MatrixXd::Zero(1, 2));
    CHECK(score_mahalanobis(aniso, vec({2.0, 1.0})) == doctest::Approx(2.0).epsilon(1e-12));

    Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(InsGeometry::from_parts(one, singular, Eigen::MatrixXd::Zero(1, 2)), Error);
  }

  TEST_CASE("random centroid fixture equals the exhaustive minimum") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 2.0);
    Eigen::MatrixXd mu(3, 4);
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu.data()[i] = n(rng);
    const InsGeometry g = InsGeometry::from_parts(mu, Eigen::MatrixXd::Identity(4, 4), mu);
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd x(4);
      for (Eigen::Index j = 0; j < 4; ++j) x(j) = n(rng);
      CHECK(score_centroid(g, x) == doctest::Approx(oracle::min_distance(mu, x)).epsilon(1e-12));
      CHECK(g.min_gradient_distance(x) == doctest::Approx(oracle::min_distance(mu, x)).epsilon(1e-12));
    }
  }

  TEST_CASE("gradient detector") {
    Eigen::MatrixXd gamma(2, 2);
    gamma << 0, 0, 3, 0;
    const InsGeometry g = InsGeometry::from_parts(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2), gamma);
    CHECK(g.min_gradient_distance(vec({1.0, 0.0})) == 1.0);

    Eigen::MatrixXd w(2, 2);
    w << 40.0, 0.0, -40.0, 0.0;
    const auto m = named_model(w);
    Eigen::MatrixXd gamma2(2, 2);
    gamma2 << 0.5, 0.0, 0.0, 2.0;
    const InsGeometry g2 = InsGeometry::from_parts(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2), gamma2);
    // Fully confident input: gradient ~ 0, so the score is the nearest gamma norm.
    CHECK(score_gradient(m, g2, vec({5.0, 0.0})) == doctest::Approx(0.5).epsilon(1e-9));
  }

  TEST_CASE("dropout verdicts") {
    const std::vector<std::size_t> unanimous(10, 3);
    const DetectorVerdict u = dropout_verdict(unanimous);
    CHECK_FALSE(u.vote);
    CHECK(u.score == 0.0);

    std::vector<std::size_t> five = {0, 0, 0, 0, 0, 1, 1, 2, 2, 3};
    CHECK(dropout_verdict(five).vote);
    std::vector<std::size_t> six = {0, 0, 0, 0, 0, 0, 1, 2, 2, 3};
    const DetectorVerdict s = dropout_verdict(six);
    CHECK_FALSE(s.vote);
    CHECK(s.score == doctest::Approx(0.4));
  }

  TEST_CASE("threshold tuning") {
    const std::vector<ScoredLabel> sep = {{0.9, true}, {0.8, true}, {0.1, false}, {0.2, false}};
    const ThresholdChoice c = tune_threshold(sep, ThresholdObjective::F1);
    CHECK(c.threshold == doctest::Approx(0.5));
    CHECK(c.objective == 1.0);
    CHECK_FALSE(c.degenerate);

    const std::vector<ScoredLabel> flat = {{0.3, true}, {0.3, false}, {0.3, true}};
    const ThresholdChoice d = tune_threshold(flat, ThresholdObjective::F1);
    CHECK(d.degenerate);
    CHECK(d.threshold == -std::numeric_limits<double>::infinity());

    const std::vector<ScoredLabel> mixed = {{0.9, true}, {0.7, false}, {0.6, true},
                                            {0.4, false}, {0.3, true}, {0.1, false}};
    const auto [t, best] = oracle::best_f1_threshold(mixed);
    const ThresholdChoice m = tune_threshold(mixed, ThresholdObjective::F1);
    CHECK(m.objective == doctest::Approx(best).epsilon(1e-15));
    CHECK(m.threshold == doctest::Approx(t).epsilon(1e-15));
    CHECK(threshold_objective(mixed, m.threshold, ThresholdObjective::F1) == doctest::Approx(best));

    const std::vector<ScoredLabel> one_class = {{0.1, true}, {0.2, true}};
    CHECK_THROWS_AS(tune_threshold(one_class, ThresholdObjective::F1), Error);
  }

  TEST_CASE("random threshold fixtures match the grid oracle") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<ScoredLabel> xs;
      const int n = 2 + static_cast<int>(rng() % 10);
      for (int i = 0; i < n; ++i) xs.push_back({static_cast<double>(rng() % 6) / 5.0, i % 2 == 0});
      const auto [t, best] = oracle::best_f1_threshold(xs);
      const ThresholdChoice c = tune_threshold(xs, ThresholdObjective::F1);
      CHECK(c.objective == doctest::Approx(best).epsilon(1e-15));
      if (std::isfinite(t)) {
        CHECK(c.threshold == doctest::Approx(t).epsilon(1e-12));
      } else {
        CHECK(c.threshold == t);
      }
    }
  }

  TEST_CASE("threshold json encodes infinities") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(threshold_from_json(threshold_to_json(inf)) == inf);
    CHECK(threshold_from_json(threshold_to_json(-inf)) == -inf);
    CHECK(threshold_from_json(threshold_to_json(0.25)) == 0.25);
    CHECK(std::isnan(threshold_from_json(threshold_to_json(std::nan("")))));
  }

  TEST_CASE("suite dispatch") {
    const auto m = identity_model(2);
    Eigen::MatrixXd mu(2, 2);
    mu << 1, 0, 0, 1;
    const InsGeometry g = InsGeometry::from_parts(mu, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2));
    const DetectorSuite suite(m, g);
    const Eigen::VectorXd x = vec({0.3, 0.2});
    CHECK(suite.score(DetectorKind::MaxProb, x) == score_maxprob(m, x));
    CHECK(suite.score(DetectorKind::Entropy, x) == score_entropy(m, x));
    CHECK(suite.score(DetectorKind::Mahalanobis, x) == score_mahalanobis(g, x));
    CHECK(suite.verdict(DetectorKind::Entropy, x, 0.0).vote);
    CHECK_FALSE(suite.verdict(DetectorKind::Entropy, x, 10.0).vote);
    CHECK(suite.score(DetectorKind::Dropout, x, 7) == suite.score(DetectorKind::Dropout, x, 7));
    for (auto kind : all_detectors()) CHECK(detector_from_string(to_string(kind)) == kind);
    CHECK(detector_from_string("bert") == DetectorKind::Centroid);
  }
}
