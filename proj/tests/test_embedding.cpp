#include <gtest/gtest.h>

#include <sstream>

#include "ehcs/embedding.hpp"
#include "test_support.hpp"

namespace ehcs {
namespace {

using testing::random_ehcs;
using testing::random_policy;

TEST(ModeChain, LexicographicEnumeration) {
  ModeChain chain(2, 3);
  ASSERT_EQ(chain.size(), 3 * 3 * 4);
  int i = 0;
  for (int b = 0; b <= 2; ++b)
    for (int l = 0; l < 3; ++l)
      for (int g = 0; g < 2; ++g)
        for (int f = 0; f < 2; ++f) {
          const ModeState s{b, l, g, f};
          EXPECT_EQ(chain.state(i), s);
          EXPECT_EQ(chain.index(s), i);
          ++i;
        }
  EXPECT_EQ(chain.point_mass({1, 2, 0, 1}).sum(), 1.0);
}

TEST(BuildModeChain, ColumnsAreStochastic) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 40; ++rep) {
    const auto sys = random_ehcs(rng);
    for (const auto& u : {greedy_policy(sys), random_policy(sys, rng),
                          build_dwell_policy(sys, 2, 0.5)}) {
      const auto chain = build_mode_chain(sys, u);
      const Eigen::MatrixXd psi = chain.dense_psi();
      EXPECT_TRUE((psi.array() >= 0.0).all());
      for (int c = 0; c < psi.cols(); ++c) ASSERT_NEAR(psi.col(c).sum(), 1.0, 1e-12);
    }
  }
}

TEST(BuildModeChain, DeterministicPoliciesMatchLiteralConstruction) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 40; ++rep) {
    const auto sys = random_ehcs(rng);
    for (const auto& u : {greedy_policy(sys), build_dwell_policy(sys, 3, 0.4)}) {
      const Eigen::MatrixXd expect = testing::literal_psi(sys, u);
      const Eigen::MatrixXd got = build_mode_chain(sys, u).dense_psi();
      ASSERT_LE((expect - got).cwiseAbs().maxCoeff(), 1e-14) << "rep " << rep;
    }
  }
}

TEST(BuildModeChain, ClosedLoopOnlyWhereAnAttemptIsPossible) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto sys = random_ehcs(rng);
    const auto u = random_policy(sys, rng);
    const auto chain = build_mode_chain(sys, u);
    for (int c = 0; c < chain.size(); ++c) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(chain.psi(), c); it; ++it) {
        const auto& to = chain.state(static_cast<int>(it.row()));
        if (to.loop_closed == 1) {
          EXPECT_GT(u.attempt_mass(to.battery, to.latent, to.history, sys.tx_threshold()), 0.0);
        }
        EXPECT_LE(to.battery, sys.battery_capacity());
      }
    }
  }
}

TEST(BuildModeChain, RejectsInvalidPolicy) {
  std::mt19937_64 rng(4);
  const auto sys = random_ehcs(rng);
  auto u = greedy_policy(sys);
  u.distribution(0, 0, 0)(0) += 1.0;  // mass 2
  EXPECT_THROW(build_mode_chain(sys, u), std::invalid_argument);
}

TEST(SecondMomentOperator, MatchesDirectEvaluation) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    const auto sys = random_ehcs(rng);
    const auto chain = build_mode_chain(sys, random_policy(sys, rng));
    const int n = sys.dim();
    std::vector<Eigen::MatrixXd> q(chain.size());
    for (auto& m : q) {
      Eigen::MatrixXd r(n, n);
      for (int i = 0; i < n * n; ++i) r(i) = g(rng);
      m = r * r.transpose();
    }
    const auto op = second_moment_operator(chain, sys.plant());
    const Eigen::VectorXd via_op = op * stack(q);
    const Eigen::VectorXd direct = stack(apply_second_moment(chain, sys.plant(), q));
    ASSERT_LE((via_op - direct).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + direct.norm()));
  }
}

TEST(SecondMomentOperator, AdjointIdentity) {
  // sum_s <T(Q)_s, R_s> = sum_s <Q_s, T*(R)_s> in the trace inner product.
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    const auto sys = random_ehcs(rng);
    const auto chain = build_mode_chain(sys, random_policy(sys, rng));
    const int n = sys.dim();
    std::vector<Eigen::MatrixXd> q(chain.size()), r(chain.size());
    for (int s = 0; s < chain.size(); ++s) {
      q[s] = Eigen::MatrixXd(n, n);
      r[s] = Eigen::MatrixXd(n, n);
      for (int i = 0; i < n * n; ++i) {
        q[s](i) = g(rng);
        r[s](i) = g(rng);
      }
    }
    const auto tq = apply_second_moment(chain, sys.plant(), q);
    const auto tr = apply_adjoint_second_moment(chain, sys.plant(), r);
    double lhs = 0.0, rhs = 0.0;
    for (int s = 0; s < chain.size(); ++s) {
      lhs += (tq[s].transpose() * r[s]).trace();
      rhs += (q[s].transpose() * tr[s]).trace();
    }
    EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST(SecondMomentOperator, PreservesPsdCone) {
  std::mt19937_64 rng(7);
  const auto sys = random_ehcs(rng);
  const auto chain = build_mode_chain(sys, greedy_policy(sys));
  std::vector<Eigen::MatrixXd> q(chain.size(), Eigen::MatrixXd::Identity(sys.dim(), sys.dim()));
  for (int step = 0; step < 5; ++step) q = apply_second_moment(chain, sys.plant(), q);
  for (const auto& m : q) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(Kron, MatchesEntrywiseFormula) {
  Eigen::Matrix2d a{{1, 2}, {3, 4}};
  Eigen::Matrix2d b{{0, 5}, {6, 7}};
  const Eigen::MatrixXd k = kron(a, b);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) EXPECT_EQ(k(2 * i + r, 2 * j + c), a(i, j) * b(r, c));
}

TEST(StackUnstack, RoundTrip) {
  std::vector<Eigen::MatrixXd> q{Eigen::Matrix2d{{1, 2}, {3, 4}}, Eigen::Matrix2d{{5, 6}, {7, 8}}};
  const auto v = stack(q);
  EXPECT_EQ(v(1), 3.0);  // column-major
  const auto back = unstack(v, 2);
  EXPECT_EQ(back[0], q[0]);
  EXPECT_EQ(back[1], q[1]);
}

TEST(WritePsiTriplets, HeaderAndRowCount) {
  std::mt19937_64 rng(8);
  const auto sys = random_ehcs(rng);
  const auto chain = build_mode_chain(sys, greedy_policy(sys));
  std::ostringstream os;
  write_psi_triplets(os, chain);
  const auto text = os.str();
  EXPECT_EQ(text.rfind("row,col,value\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), chain.psi().nonZeros() + 1);
}

}  // namespace
}  // namespace ehcs
