#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "crystclr/errors.hpp"
#include "crystclr/loss.hpp"
#include "crystclr/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace crystclr;

namespace {

Eigen::MatrixXd random_z(int rows, int cols, RngStream& rng) {
  Eigen::MatrixXd z(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) z(i, k) = rng.uniform(-1, 1);
  }
  return z;
}

oracle::Rows to_rows(const Eigen::MatrixXd& z) {
  oracle::Rows out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) out[static_cast<std::size_t>(i)].push_back(z(i, k));
  }
  return out;
}

PositiveSets partner_only(int rows) {
  PositiveSets p(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) p[static_cast<std::size_t>(i)] = {partner_of(i)};
  return p;
}

/// Random symmetric sets that always contain the partner.
PositiveSets random_positives(int rows, RngStream& rng) {
  PositiveSets p(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    for (int j = i + 1; j < rows; ++j) {
      if (j == partner_of(i) || rng.bernoulli(0.3)) {
        p[static_cast<std::size_t>(i)].push_back(j);
        p[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  }
  for (auto& s : p) std::sort(s.begin(), s.end());
  return p;
}

}  // namespace

TEST_CASE("cosine_sim") {
  Eigen::VectorXd u(3), v(3);
  u << 1, 2, 3;
  CHECK(cosine_sim(u, u) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_sim(u, -u) == doctest::Approx(-1.0).epsilon(1e-15));
  u << 1, 0, 0;
  v << 0, 1, 0;
  CHECK(cosine_sim(u, v) == 0.0);
  CHECK_THROWS_AS(cosine_sim(u, Eigen::VectorXd::Zero(3)), NumericalError);
}

TEST_CASE("nt_xent examples") {
  Eigen::MatrixXd one(2, 3);
  one << 1, 2, 3, -1, 0.5, 2;
  CHECK(nt_xent(one, 0.1) == 0.0);

  Eigen::MatrixXd z(4, 2);
  z << 1, 0, 1, 0, 0, 1, 0, 1;
  CHECK(std::abs(nt_xent(z, 1.0) - std::log(1 + 2 / std::exp(1.0))) < 1e-12);
  CHECK(std::abs(oracle::nt_xent(to_rows(z), 1.0) - 0.551445) < 1e-6);

  Eigen::MatrixXd zero = z;
  zero.row(2).setZero();
  CHECK_THROWS_AS(nt_xent(zero, 0.1), NumericalError);
  CHECK_THROWS_AS(nt_xent(Eigen::MatrixXd::Ones(3, 2), 0.1), ShapeError);
}

TEST_CASE("nt_xent and cs_loss agree with direct implementations") {
  RngStream rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(16));
    const int dim = 1 + static_cast<int>(rng.uniform_index(32));
    const double tau = rng.uniform(0.05, 2.0);
    const Eigen::MatrixXd z = random_z(2 * n, dim, rng);
    const PositiveSets p = random_positives(2 * n, rng);
    const auto rows = to_rows(z);
    CHECK(std::abs(nt_xent(z, tau) - oracle::nt_xent(rows, tau)) < 1e-12);
    CHECK(std::abs(cs_loss(z, p, tau) - oracle::cs_loss(rows, p, tau)) < 1e-12);
    LossConfig cfg;
    cfg.tau = tau;
    cfg.use_cs = true;
    CHECK(std::abs(combined_loss(z, p, cfg) - (oracle::nt_xent(rows, tau) + oracle::cs_loss(rows, p, tau))) <
          1e-12);
  }
}

TEST_CASE("positive_sets") {
  const auto na = composition_vector(testing::nacl());
  const auto k = composition_vector(testing::kcl());
  const auto mg = composition_vector(testing::mgo());

  const std::vector<CompositionVector> shared = {na, na, k, k};
  const auto ps = positive_sets(shared);
  CHECK(ps[0] == std::vector<int>{1, 2, 3});
  CHECK(ps[3] == std::vector<int>{0, 1, 2});

  const std::vector<CompositionVector> disjoint = {na, na, mg, mg};
  const auto pd = positive_sets(disjoint);
  for (int i = 0; i < 4; ++i) CHECK(pd[static_cast<std::size_t>(i)] == std::vector<int>{partner_of(i)});

  const std::vector<CompositionVector> single = {na, na};
  const auto p1 = positive_sets(single);
  CHECK(p1[0] == std::vector<int>{1});
  CHECK(p1[1] == std::vector<int>{0});

  // Symmetry over a mixed batch.
  std::vector<CompositionVector> mixed;
  for (const auto& s : testing::fixture_set(12)) {
    mixed.push_back(composition_vector(s));
    mixed.push_back(composition_vector(s));
  }
  const auto pm = positive_sets(mixed);
  for (std::size_t i = 0; i < pm.size(); ++i) {
    for (int j : pm[i]) {
      const auto& back = pm[static_cast<std::size_t>(j)];
      CHECK(std::find(back.begin(), back.end(), static_cast<int>(i)) != back.end());
      CHECK(j != static_cast<int>(i));
    }
    CHECK(std::find(pm[i].begin(), pm[i].end(), partner_of(static_cast<int>(i))) != pm[i].end());
  }
}

TEST_CASE("cs_loss reductions and properties") {
  RngStream rng(9);
  const Eigen::MatrixXd z = random_z(8, 5, rng);
  const auto partners = partner_only(8);
  CHECK(std::abs(cs_loss(z, partners, 0.1) - nt_xent(z, 0.1)) < 1e-12);

  LossConfig cfg;
  CHECK(combined_loss(z, partners, cfg) == nt_xent(z, cfg.tau));
  cfg.use_cs = true;
  CHECK(std::abs(combined_loss(z, partners, cfg) - 2 * nt_xent(z, cfg.tau)) < 1e-12);

  // Adding a position with the same similarity as an existing positive leaves the term unchanged.
  Eigen::MatrixXd dup = random_z(6, 4, rng);
  dup.row(4) = dup.row(1);
  PositiveSets small = partner_only(6);
  PositiveSets grown = small;
  grown[0] = {1, 4};
  grown[4].push_back(0);
  std::sort(grown[4].begin(), grown[4].end());
  const double before = oracle::cs_loss(to_rows(dup), small, 0.5);
  CHECK(std::abs(cs_loss(dup, small, 0.5) - before) < 1e-12);
  // Anchor 0's term is unchanged; only anchor 4's changes, so compare per anchor.
  PositiveSets only0_small(6), only0_grown(6);
  only0_small[0] = small[0];
  only0_grown[0] = grown[0];
  CHECK(std::abs(cs_loss(dup, only0_small, 0.5) - cs_loss(dup, only0_grown, 0.5)) < 1e-12);

  PositiveSets empty(6);
  CHECK_THROWS_AS(cs_loss(dup, empty, 0.5), NumericalError);
  PositiveSets partly = partner_only(6);
  partly[2].clear();
  LossConfig on;
  on.use_cs = true;
  const auto terms = combined_loss_and_grad(dup, partly, on);
  CHECK(terms.cs_skipped == 1);
  PositiveSets bad = partner_only(6);
  bad[1] = {1};
  CHECK_THROWS_AS(cs_loss(dup, bad, 0.5), ShapeError);
}

TEST_CASE("loss scale and permutation invariance") {
  RngStream rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(6));
    const Eigen::MatrixXd z = random_z(2 * n, 7, rng);
    const PositiveSets p = random_positives(2 * n, rng);
    LossConfig cfg;
    cfg.use_cs = true;
    const double base = combined_loss(z, p, cfg);

    Eigen::MatrixXd scaled = z;
    for (Eigen::Index i = 0; i < z.rows(); ++i) scaled.row(i) *= rng.uniform(0.01, 100);
    CHECK(std::abs(nt_xent(scaled, cfg.tau) - nt_xent(z, cfg.tau)) < 1e-10);
    CHECK(std::abs(cs_loss(scaled, p, cfg.tau) - cs_loss(z, p, cfg.tau)) < 1e-10);
    CHECK(std::abs(combined_loss(scaled, p, cfg) - base) < 1e-10);

    // Reverse the pair order, keeping partners adjacent.
    std::vector<int> perm(static_cast<std::size_t>(2 * n));
    for (int k = 0; k < n; ++k) {
      perm[static_cast<std::size_t>(2 * k)] = 2 * (n - 1 - k);
      perm[static_cast<std::size_t>(2 * k + 1)] = 2 * (n - 1 - k) + 1;
    }
    std::vector<int> inverse(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) inverse[static_cast<std::size_t>(perm[k])] = static_cast<int>(k);
    Eigen::MatrixXd zp(z.rows(), z.cols());
    PositiveSets pp(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) {
      zp.row(static_cast<Eigen::Index>(k)) = z.row(perm[k]);
      for (int j : p[static_cast<std::size_t>(perm[k])]) pp[k].push_back(inverse[static_cast<std::size_t>(j)]);
    }
    CHECK(std::abs(combined_loss(zp, pp, cfg) - base) < 1e-12);
  }
}

TEST_CASE("nt_xent decreases as partner similarity rises with orthogonal negatives") {
  double previous = INFINITY;
  for (double angle : {1.5, 0.8, 0.1}) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(4, 4);
    z(0, 0) = 1;
    z(1, 0) = std::cos(angle);
    z(1, 1) = std::sin(angle);
    z(2, 2) = 1;
    z(3, 3) = 1;
    // rows 2, 3 are orthogonal to rows 0, 1; only anchors 0 and 1 vary
    const double loss = nt_xent(z, 0.5);
    CHECK(loss < previous);
    previous = loss;
  }
}

TEST_CASE("combined_loss_and_grad matches values and finite differences") {
  RngStream rng(31);
  for (bool use_cs : {false, true}) {
    const Eigen::MatrixXd z = random_z(8, 6, rng);
    const PositiveSets p = random_positives(8, rng);
    LossConfig cfg;
    cfg.tau = 0.3;
    cfg.use_cs = use_cs;
    const auto terms = combined_loss_and_grad(z, p, cfg);
    CHECK(std::abs(terms.total - combined_loss(z, p, cfg)) < 1e-12);
    CHECK(std::abs(terms.nt_xent - nt_xent(z, cfg.tau)) < 1e-12);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (Eigen::Index k = 0; k < z.cols(); ++k) {
        Eigen::MatrixXd up = z, down = z;
        up(i, k) += h;
        down(i, k) -= h;
        const double fd = (combined_loss(up, p, cfg) - combined_loss(down, p, cfg)) / (2 * h);
        CHECK(std::abs(fd - terms.grad(i, k)) < 1e-7);
      }
    }
    // Gradient along the global scale direction vanishes.
    CHECK(std::abs((terms.grad.array() * z.array()).sum()) < 1e-8);
  }

  LossConfig cfg;
  const auto zero = combined_loss_and_grad(Eigen::MatrixXd::Zero(4, 3), partner_only(4), cfg);
  CHECK(std::isfinite(zero.total));
  CHECK(zero.grad.allFinite());
}
