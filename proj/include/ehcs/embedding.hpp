#pragma once

#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ehcs/model.hpp"
#include "ehcs/policy.hpp"

namespace ehcs {

/// One mode of the embedded jump process: (battery, latent, loop closed,
/// attempted-last-slot).
struct ModeState {
  int battery = 0;
  int latent = 0;
  int loop_closed = 0;
  int history = 0;

  bool operator==(const ModeState&) const = default;
};

/// Embedded Markov chain of the EHCS under a fixed memoryless policy.
///
/// States are ordered lexicographically in (battery, latent, loop_closed,
/// history). `psi` is column-stochastic: psi(next, current).
class ModeChain {
 public:
  ModeChain(int battery_capacity, int num_latent);

  int size() const { return static_cast<int>(states_.size()); }
  int battery_capacity() const { return battery_capacity_; }
  int num_latent() const { return num_latent_; }
  const std::vector<ModeState>& states() const { return states_; }
  const ModeState& state(int i) const { return states_[i]; }

  int index(int b, int l, int gamma, int f) const {
    return ((b * num_latent_ + l) * 2 + gamma) * 2 + f;
  }
  int index(const ModeState& s) const {
    return index(s.battery, s.latent, s.loop_closed, s.history);
  }

  /// A_s is A_c exactly when the loop is closed in state s.
  bool is_closed(int i) const { return states_[i].loop_closed == 1; }
  const Eigen::MatrixXd& mode_matrix(int i, const PlantModel& plant) const {
    return is_closed(i) ? plant.a_closed : plant.a_open;
  }

  /// A mode is admissible when its loop-closure coordinate is consistent with
  /// the policy at (battery, latent, history). Psi only enters admissible
  /// modes, and every simulated mode is admissible.
  bool admissible(int i) const { return admissible_[i] != 0; }

  const Eigen::SparseMatrix<double>& psi() const { return psi_; }
  Eigen::MatrixXd dense_psi() const { return Eigen::MatrixXd(psi_); }

  /// Probability vector over modes concentrated on one state.
  Eigen::VectorXd point_mass(const ModeState& s) const;

 private:
  friend ModeChain build_mode_chain(const ValidatedEhcs&, const TransmissionPolicy&);

  int battery_capacity_;
  int num_latent_;
  std::vector<ModeState> states_;
  std::vector<char> admissible_;
  Eigen::SparseMatrix<double> psi_;
};

/// Lexicographic (b, l, gamma, f) enumeration; size (B_cap + 1) * L * 4.
std::vector<ModeState> enumerate_mode_states(const ValidatedEhcs& ehcs);

/// Transition matrix of the mode process. Throws std::invalid_argument if the
/// policy does not pass validate_policy for `ehcs`.
ModeChain build_mode_chain(const ValidatedEhcs& ehcs, const TransmissionPolicy& policy);

/// Writes psi as "row,col,value" lines (0-based, with header).
void write_psi_triplets(std::ostream& os, const ModeChain& chain);

/// Kronecker product a (x) b.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                            a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Second-moment operator: block (s', s) = psi(s', s) * (A_s (x) A_s), acting
/// on the stacked column-major vec(Q_s). Dimension n^2 N.
template <typename Scalar = double>
Eigen::SparseMatrix<Scalar> second_moment_operator(const ModeChain& chain,
                                                   const PlantModel& plant) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = plant.dim();
  const Eigen::Index n2 = n * n;
  const Mat kc = kron(plant.a_closed, plant.a_closed).template cast<Scalar>();
  const Mat ko = kron(plant.a_open, plant.a_open).template cast<Scalar>();

  std::vector<Eigen::Triplet<Scalar>> trips;
  trips.reserve(static_cast<std::size_t>(chain.psi().nonZeros() * n2 * n2));
  for (int s = 0; s < chain.psi().outerSize(); ++s) {
    const Mat& k = chain.is_closed(s) ? kc : ko;
    for (Eigen::SparseMatrix<double>::InnerIterator it(chain.psi(), s); it; ++it) {
      const Scalar p = static_cast<Scalar>(it.value());
      for (Eigen::Index c = 0; c < n2; ++c) {
        for (Eigen::Index r = 0; r < n2; ++r) {
          const Scalar v = p * k(r, c);
          if (v != Scalar(0)) {
            trips.emplace_back(it.row() * n2 + r, s * n2 + c, v);
          }
        }
      }
    }
  }
  Eigen::SparseMatrix<Scalar> op(chain.size() * n2, chain.size() * n2);
  op.setFromTriplets(trips.begin(), trips.end());
  return op;
}

/// One step of the mode-conditioned second-moment recursion,
/// Q'_{s'} = sum_s psi(s', s) A_s Q_s A_s^T, evaluated directly.
std::vector<Eigen::MatrixXd> apply_second_moment(const ModeChain& chain,
                                                 const PlantModel& plant,
                                                 std::span<const Eigen::MatrixXd> q);

/// Adjoint step used by the coupled Lyapunov equations,
/// R'_s = A_s^T (sum_{s'} psi(s', s) R_{s'}) A_s.
std::vector<Eigen::MatrixXd> apply_adjoint_second_moment(
    const ModeChain& chain, const PlantModel& plant,
    std::span<const Eigen::MatrixXd> r);

/// Stacks / unstacks column-major vec(Q_s).
Eigen::VectorXd stack(std::span<const Eigen::MatrixXd> q);
std::vector<Eigen::MatrixXd> unstack(const Eigen::VectorXd& v, int n);

}  // namespace ehcs
