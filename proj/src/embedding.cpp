#include "ehcs/embedding.hpp"

#include <algorithm>
#include <iomanip>
#include <stdexcept>

namespace ehcs {

ModeChain::ModeChain(int battery_capacity, int num_latent)
    : battery_capacity_(battery_capacity), num_latent_(num_latent) {
  states_.reserve(static_cast<std::size_t>(battery_capacity + 1) * num_latent * 4);
  for (int b = 0; b <= battery_capacity; ++b) {
    for (int l = 0; l < num_latent; ++l) {
      for (int gamma = 0; gamma < 2; ++gamma) {
        for (int f = 0; f < 2; ++f) states_.push_back({b, l, gamma, f});
      }
    }
  }
  admissible_.assign(states_.size(), 1);
}

Eigen::VectorXd ModeChain::point_mass(const ModeState& s) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(size());
  p(index(s)) = 1.0;
  return p;
}

std::vector<ModeState> enumerate_mode_states(const ValidatedEhcs& ehcs) {
  return ModeChain(ehcs.battery_capacity(), ehcs.num_latent()).states();
}

ModeChain build_mode_chain(const ValidatedEhcs& ehcs, const TransmissionPolicy& policy) {
  const auto violations = validate_policy(policy, ehcs);
  if (!violations.empty()) {
    throw std::invalid_argument("build_mode_chain: policy invalid for this system (" +
                                violations.front().reason + ")");
  }
  ModeChain chain(ehcs.battery_capacity(), ehcs.num_latent());
  const int cap = ehcs.battery_capacity();
  const int ebar = ehcs.tx_threshold();
  const double lambda = ehcs.success_prob();
  const auto& src = ehcs.source();
  const auto& lat = src.transition();
  const int levels = ehcs.num_energy_levels();

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd weight(levels);
  for (int s = 0; s < chain.size(); ++s) {
    const ModeState& st = chain.state(s);
    const auto u = policy.distribution(st.battery, st.latent, st.history);

    // Action law given the whole mode: the loop-closure coordinate already
    // reveals whether the current action was an attempt.
    for (int eps = 0; eps < levels; ++eps) {
      const bool attempt = eps >= ebar;
      const double like = st.loop_closed == 1 ? (attempt ? 1.0 : 0.0)
                                              : (attempt ? 1.0 - lambda : 1.0);
      weight(eps) = u(eps) * like;
    }
    const double z = weight.sum();
    chain.admissible_[s] = z > 0.0;
    if (z > 0.0) {
      weight /= z;
    } else {
      weight = u;  // unreachable mode; keep the column stochastic
    }

    for (int eps = 0; eps < levels; ++eps) {
      const double pe = weight(eps);
      if (pe == 0.0) continue;
      const int b2 = std::clamp(st.battery + src.energy(st.latent) - eps, 0, cap);
      const int f2 = eps >= ebar ? 1 : 0;
      for (int l2 = 0; l2 < ehcs.num_latent(); ++l2) {
        const double pl = lat(l2, st.latent);
        if (pl == 0.0) continue;
        const double a = policy.attempt_mass(b2, l2, f2, ebar);
        const double closed = lambda * a;
        const double open = (1.0 - lambda) * a + (1.0 - a);
        if (closed != 0.0) trips.emplace_back(chain.index(b2, l2, 1, f2), s, pe * pl * closed);
        if (open != 0.0) trips.emplace_back(chain.index(b2, l2, 0, f2), s, pe * pl * open);
      }
    }
  }
  chain.psi_.resize(chain.size(), chain.size());
  chain.psi_.setFromTriplets(trips.begin(), trips.end());
  chain.psi_.makeCompressed();
  return chain;
}

void write_psi_triplets(std::ostream& os, const ModeChain& chain) {
  os << "row,col,value\n" << std::setprecision(17);
  for (int c = 0; c < chain.psi().outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(chain.psi(), c); it; ++it) {
      os << it.row() << ',' << it.col() << ',' << it.value() << '\n';
    }
  }
}

std::vector<Eigen::MatrixXd> apply_second_moment(const ModeChain& chain,
                                                 const PlantModel& plant,
                                                 std::span<const Eigen::MatrixXd> q) {
  const int n = plant.dim();
  std::vector<Eigen::MatrixXd> out(chain.size(), Eigen::MatrixXd::Zero(n, n));
  for (int s = 0; s < chain.size(); ++s) {
    const auto& a = chain.mode_matrix(s, plant);
    const Eigen::MatrixXd m = a * q[s] * a.transpose();
    for (Eigen::SparseMatrix<double>::InnerIterator it(chain.psi(), s); it; ++it) {
      out[it.row()] += it.value() * m;
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> apply_adjoint_second_moment(
    const ModeChain& chain, const PlantModel& plant,
    std::span<const Eigen::MatrixXd> r) {
  const int n = plant.dim();
  std::vector<Eigen::MatrixXd> out(chain.size());
  Eigen::MatrixXd acc(n, n);
  for (int s = 0; s < chain.size(); ++s) {
    acc.setZero();
    for (Eigen::SparseMatrix<double>::InnerIterator it(chain.psi(), s); it; ++it) {
      acc += it.value() * r[it.row()];
    }
    const auto& a = chain.mode_matrix(s, plant);
    out[s] = a.transpose() * acc * a;
  }
  return out;
}

Eigen::VectorXd stack(std::span<const Eigen::MatrixXd> q) {
  if (q.empty()) return {};
  const Eigen::Index n2 = q.front().size();
  Eigen::VectorXd v(static_cast<Eigen::Index>(q.size()) * n2);
  for (std::size_t s = 0; s < q.size(); ++s) {
    v.segment(static_cast<Eigen::Index>(s) * n2, n2) = q[s].reshaped();
  }
  return v;
}

std::vector<Eigen::MatrixXd> unstack(const Eigen::VectorXd& v, int n) {
  const Eigen::Index n2 = static_cast<Eigen::Index>(n) * n;
  std::vector<Eigen::MatrixXd> q(static_cast<std::size_t>(v.size() / n2));
  for (std::size_t s = 0; s < q.size(); ++s) {
    q[s] = v.segment(static_cast<Eigen::Index>(s) * n2, n2).reshaped(n, n);
  }
  return q;
}

}  // namespace ehcs
