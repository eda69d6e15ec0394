#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "robreg/contamination.hpp"
#include "robreg/weight_solver.hpp"
#include "test_util.hpp"

using namespace robreg;
using namespace robreg::testing;

namespace {

TuningParams weight_params(double eps, double r1, double r2, double tau_cut) {
  TuningParams p;
  p.lambda_o = 1.0;
  p.eps = eps;
  p.r1 = r1;
  p.r2 = r2;
  p.tau_cut = tau_cut;
  return p;
}

// Random points of the capped simplex: projections of random vectors at
// several scales cover both interior points and vertices.
Vector random_feasible_weights(std::mt19937_64& rng, Index n, double eps) {
  std::uniform_real_distribution<double> scale(0.0, 3.0);
  const Vector v = random_vector(rng, n, std::pow(10.0, scale(rng)) / static_cast<double>(n));
  return project_capped_simplex(v, eps).w;
}

}  // namespace

TEST(WeightObjective, Examples) {
  const Matrix X = Matrix::Constant(1, 1, 2.0);
  const Matrix sigma = Matrix::Constant(1, 1, 1.0);
  const Vector w = Vector::Constant(1, 1.0);
  const Matrix m = Matrix::Constant(1, 1, 1.0);
  EXPECT_DOUBLE_EQ(objective_known_sigma(X, sigma, w, m), 3.0);
  EXPECT_DOUBLE_EQ(objective_unknown_sigma(X, w, m), 4.0);
  EXPECT_EQ(objective_known_sigma(X, sigma, w, Matrix::Zero(1, 1)), 0.0);
  EXPECT_EQ(objective_unknown_sigma(X, w, Matrix::Zero(1, 1)), 0.0);

  // A single row replicated, with the covariance equal to its outer product.
  Vector row(3);
  row << 1.0, -2.0, 0.5;
  const Matrix Xr = row.transpose().replicate(4, 1);
  const Matrix sig = row * row.transpose();
  std::mt19937_64 rng(3);
  const Matrix mm = random_symmetric(rng, 3, 1.0);
  EXPECT_NEAR(objective_known_sigma(Xr, sig, Vector::Constant(4, 0.25), mm), 0.0, 1e-12);
}

TEST(WeightObjective, BilinearAndNonnegative) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const Matrix X = random_matrix(rng, 8, 3);
    const Matrix sigma = Matrix::Identity(3, 3);
    const Vector w1 = random_vector(rng, 8), w2 = random_vector(rng, 8);
    const Matrix m1 = random_symmetric(rng, 3, 1.0), m2 = random_symmetric(rng, 3, 1.0);
    const double a = 0.7, b = -1.3;
    EXPECT_NEAR(objective_known_sigma(X, sigma, a * w1 + b * w2, m1),
                a * objective_known_sigma(X, sigma, w1, m1) + b * objective_known_sigma(X, sigma, w2, m1), 1e-9);
    EXPECT_NEAR(objective_known_sigma(X, sigma, w1, a * m1 + b * m2),
                a * objective_known_sigma(X, sigma, w1, m1) + b * objective_known_sigma(X, sigma, w1, m2), 1e-9);
    const Vector wp = project_capped_simplex(w1, 0.2).w;
    EXPECT_GE(objective_unknown_sigma(X, wp, project_psd(m1)), -1e-12);
  }
}

TEST(InnerMax, SpectralCandidateIsExactWhenL1Inactive) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const Matrix g = random_symmetric(rng, 4, 1.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    const auto res = maximize_over_candidates(g, 100.0, 1.5, 50);
    EXPECT_TRUE(res.exact);
    EXPECT_NEAR(res.value, 2.25 * std::max(0.0, es.eigenvalues().maxCoeff()), 1e-10);
    EXPECT_TRUE(is_feasible_matrix(res.m, 100.0, 1.5));
  }
  const auto neg = maximize_over_candidates(-Matrix::Identity(3, 3), 1.0, 1.0, 10);
  EXPECT_EQ(neg.value, 0.0);
  EXPECT_EQ(neg.m, Matrix::Zero(3, 3));
}

TEST(InnerMax, MatchesConicSolver) {
  std::ifstream is(data_path("inner_max_cases.txt"));
  std::string line;
  int count = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Index d = 0;
    double r1 = 0, r2 = 0, expected = 0;
    ls >> d >> r1 >> r2;
    Matrix g(d, d);
    for (Index i = 0; i < d * d; ++i) ls >> g(i / d, i % d);
    ls >> expected;
    const auto res = maximize_over_candidates(g, r1, r2, 5000);
    EXPECT_NEAR(res.value, expected, 1e-6 * std::max(1.0, std::abs(expected))) << line;
    EXPECT_TRUE(is_feasible_matrix(res.m, r1, r2, 1e-7)) << line;
    EXPECT_NEAR(res.value, g.cwiseProduct(res.m).sum(), 1e-10);
    ++count;
  }
  EXPECT_EQ(count, 60);
}

TEST(WeightObjective, HolderChain) {
  // (sum_i v' w_i X_i u_i)^2 <= 4/(1-eps) (o/n) sum_{i in O} w_i <X_i X_i', v v'>
  // for ||u||_inf <= 2 supported on O.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int k = 0; k < 500; ++k) {
    const Index n = 30, d = 4, o = 1 + k % 6;
    const double eps = 0.05 + 0.4 * (k % 5) / 5.0;
    const Matrix X = random_matrix(rng, n, d);
    const Vector w = random_feasible_weights(rng, n, eps);
    const Vector v = random_vector(rng, d);
    Vector u = Vector::Zero(n);
    for (Index i = 0; i < o; ++i) u[i] = unif(rng);
    double lhs = 0.0, rhs = 0.0;
    for (Index i = 0; i < n; ++i) lhs += v.dot(X.row(i).transpose()) * w[i] * u[i];
    for (Index i = 0; i < o; ++i) rhs += w[i] * std::pow(X.row(i).dot(v), 2);
    rhs *= 4.0 / (1.0 - eps) * static_cast<double>(o) / static_cast<double>(n);
    EXPECT_LE(lhs * lhs, rhs * (1.0 + 1e-12) + 1e-15);
  }
}

TEST(SolveWeights, CleanDataStaysNearUniform) {
  GeneratorSpec g;
  g.n = 100;
  g.d = 10;
  g.s = 2;
  g.seed = 21;
  const auto [data, truth] = generate_clean(g);
  const auto p = weight_params(0.05, 5.0, 1.0, 1e6);
  const auto rep = solve_weights(data.design(), truth.covariance, p);
  EXPECT_FALSE(rep.failed);
  EXPECT_TRUE(is_feasible_weight(rep.weights));
  EXPECT_LE((rep.weights.w.array() - 0.01).abs().maxCoeff(), rep.weights.cap());
  // The uniform comparator upper-bounds the certificate.
  const WeightProblem prob(data.design(), truth.covariance);
  const double comparator = prob.max_at(Vector::Constant(100, 0.01), 5.0, 1.0, 500).value;
  EXPECT_LE(rep.certificate_value, comparator + 1e-6);
}

TEST(SolveWeights, GrossCovariateOutlierGetsDropped) {
  std::mt19937_64 rng(8);
  Matrix X = random_matrix(rng, 20, 2);
  X.row(7) *= 100.0;
  const auto p = weight_params(0.05, 10.0, 1.0, 1e9);
  const auto rep = solve_weights(X, Matrix::Identity(2, 2), p);
  EXPECT_LT(rep.weights.w[7], 1.0 / 40.0);
  const auto t = truncate_weights(rep.weights);
  EXPECT_EQ(t.w_prime[7], 0.0);
  EXPECT_EQ(t.retained.size(), 19u);
  // Same for the unknown-covariance objective.
  const auto rep2 = solve_weights(X, std::nullopt, p);
  EXPECT_LT(rep2.weights.w[7], 1.0 / 40.0);
}

TEST(SolveWeights, FailFlagMatchesThreshold) {
  std::mt19937_64 rng(9);
  const Matrix X = random_matrix(rng, 30, 3);
  const auto rep0 = solve_weights(X, std::nullopt, weight_params(0.1, 5.0, 1.0, 0.0));
  EXPECT_GT(rep0.certificate_value, 0.0);
  EXPECT_TRUE(rep0.failed);
  for (double tau : {0.0, 0.5, 1.0, 2.0, 5.0, 1e3}) {
    const auto rep = solve_weights(X, Matrix::Identity(3, 3), weight_params(0.1, 5.0, 1.0, tau));
    EXPECT_EQ(rep.failed, rep.certificate_value > tau);
  }
}

TEST(SolveWeights, ZeroEpsGivesUniform) {
  std::mt19937_64 rng(10);
  const Matrix X = random_matrix(rng, 25, 3);
  const auto rep = solve_weights(X, std::nullopt, weight_params(0.0, 5.0, 1.0, 1e9));
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.weights.w, Vector::Constant(25, 1.0 / 25.0));
}

TEST(SolveWeights, RejectsBadInputs) {
  const Matrix X = Matrix::Ones(5, 2);
  EXPECT_THROW(solve_weights(X, Matrix::Identity(3, 3), weight_params(0.1, 1, 1, 1)), std::invalid_argument);
  EXPECT_THROW(solve_weights(X, std::nullopt, weight_params(1.0, 1, 1, 1)), std::invalid_argument);
  EXPECT_THROW(solve_weights(X, std::nullopt, weight_params(0.1, 0, 1, 1)), std::invalid_argument);
  EXPECT_THROW(solve_weights(Matrix(0, 2), std::nullopt, weight_params(0.1, 1, 1, 1)), std::invalid_argument);
}

TEST(Truncation, Examples) {
  WeightVector u{Vector::Constant(5, 0.2), 0.1};
  EXPECT_EQ(truncate_weights(u).w_prime, Vector::Constant(5, 0.2));

  Vector w(4);
  w << 0.4, 0.4, 0.1, 0.1;
  const auto t = truncate_weights(WeightVector{w, 0.5});
  Vector expected(4);
  expected << 0.25, 0.25, 0.0, 0.0;
  EXPECT_EQ(t.w_prime, expected);
  EXPECT_EQ(t.retained, (std::vector<Index>{0, 1}));

  // Boundary value 1/(2n) is kept.
  Vector b(4);
  b << 0.125, 0.375, 0.25, 0.25;
  EXPECT_EQ(truncate_weights(WeightVector{b, 0.5}).w_prime[0], 0.25);
}

TEST(Truncation, LawOnRandomWeights) {
  std::mt19937_64 rng(14);
  for (Index n : {5, 20, 50}) {
    for (double eps : {0.02, 0.1, 0.3}) {
      for (int k = 0; k < 500; ++k) {
        const Vector w = random_feasible_weights(rng, n, eps);
        const auto t = truncate_weights(WeightVector{w, eps});
        Index dropped = 0;
        for (Index i = 0; i < n; ++i) {
          EXPECT_TRUE(t.w_prime[i] == 0.0 || t.w_prime[i] == 1.0 / static_cast<double>(n));
          EXPECT_LE(t.w_prime[i], 2.0 * w[i]);
          if (w[i] < 0.5 / static_cast<double>(n)) ++dropped;
        }
        EXPECT_LE(static_cast<double>(dropped), 2.0 * static_cast<double>(n) * eps + 1e-9);
        EXPECT_EQ(static_cast<Index>(t.retained.size()), n - dropped);
      }
    }
  }
}
