#include "ehcs/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ehcs {

double TransmissionPolicy::attempt_mass(int b, int l, int f, int threshold) const {
  const auto d = distribution(b, l, f);
  if (threshold >= d.size()) return 0.0;
  return d.tail(d.size() - threshold).sum();
}

TransmissionPolicy greedy_policy(const ValidatedEhcs& ehcs) {
  auto policy = TransmissionPolicy::empty_for(ehcs);
  const int ebar = ehcs.tx_threshold();
  for (int b = 0; b <= ehcs.battery_capacity(); ++b) {
    for (int l = 0; l < ehcs.num_latent(); ++l) {
      const bool feasible = b + ehcs.source().energy(l) >= ebar;
      for (int f = 0; f < 2; ++f) {
        policy.set_deterministic(b, l, f, feasible ? ebar : 0);
      }
    }
  }
  return policy;
}

DwellProbTable dwell_probabilities(const ValidatedEhcs& ehcs, int k) {
  if (k < 1) throw std::invalid_argument("dwell_probabilities: k must be >= 1");

  const int cap = ehcs.battery_capacity();
  const int nl = ehcs.num_latent();
  const int ebar = ehcs.tx_threshold();
  const auto& src = ehcs.source();
  const auto& lat = src.transition();
  const int ng = (cap + 1) * nl;

  // G-chain: the battery moves deterministically given (b, l), the latent
  // state moves by the harvesting chain.
  std::vector<int> next_battery(ng);
  std::vector<char> in_t(ng);
  for (int b = 0; b <= cap; ++b) {
    for (int l = 0; l < nl; ++l) {
      const int g = b * nl + l;
      next_battery[g] = std::clamp(b + src.energy(l) - ebar, 0, cap);
      in_t[g] = b + src.energy(l) >= ebar;
    }
  }

  DwellProbTable table{k, Eigen::MatrixXd::Zero(cap + 1, nl)};
  Eigen::VectorXd cond(ng);
  Eigen::VectorXd next(ng);
  for (int g0 = 0; g0 < ng; ++g0) {
    // cond(g) = Pr(G(j) = g | E_0, ..., E_{j-1}, G(0) = g0)
    cond.setZero();
    cond(g0) = 1.0;
    double joint = 1.0;
    for (int j = 0; j < k; ++j) {
      double step = 0.0;
      for (int g = 0; g < ng; ++g) {
        if (in_t[g]) step += cond(g);
      }
      joint *= step;
      if (joint <= 0.0) {
        joint = 0.0;
        break;
      }
      if (j == k - 1) break;
      next.setZero();
      for (int g = 0; g < ng; ++g) {
        if (!in_t[g] || cond(g) == 0.0) continue;
        const double w = cond(g) / step;
        const int l = g % nl;
        const int base = next_battery[g] * nl;
        for (int l2 = 0; l2 < nl; ++l2) {
          const double p = lat(l2, l);
          if (p != 0.0) next(base + l2) += p * w;
        }
      }
      cond.swap(next);
    }
    table.probs(g0 / nl, g0 % nl) = std::clamp(joint, 0.0, 1.0);
  }
  return table;
}

TransmissionPolicy build_dwell_policy(const ValidatedEhcs& ehcs,
                                      const DwellProbTable& phi, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("build_dwell_policy: p must lie in [0,1]");
  }
  if (phi.probs.rows() != ehcs.battery_capacity() + 1 ||
      phi.probs.cols() != ehcs.num_latent()) {
    throw std::invalid_argument("build_dwell_policy: dwell table does not match the system");
  }
  auto policy = TransmissionPolicy::empty_for(ehcs);
  const int ebar = ehcs.tx_threshold();
  for (int b = 0; b <= ehcs.battery_capacity(); ++b) {
    for (int l = 0; l < ehcs.num_latent(); ++l) {
      const bool feasible = b + ehcs.source().energy(l) >= ebar;
      policy.set_deterministic(b, l, 0, feasible && phi(b, l) >= p ? ebar : 0);
      policy.set_deterministic(b, l, 1, feasible ? ebar : 0);
    }
  }
  return policy;
}

TransmissionPolicy build_dwell_policy(const ValidatedEhcs& ehcs, int k, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("build_dwell_policy: p must lie in [0,1]");
  }
  return build_dwell_policy(ehcs, dwell_probabilities(ehcs, k), p);
}

std::vector<PolicyViolation> validate_policy(const TransmissionPolicy& policy,
                                             const ValidatedEhcs& ehcs) {
  std::vector<PolicyViolation> out;
  if (policy.battery_capacity() != ehcs.battery_capacity() ||
      policy.num_latent() != ehcs.num_latent() ||
      policy.num_energy_levels() != ehcs.num_energy_levels()) {
    out.push_back({-1, -1, -1, -1, "policy grid does not match the system"});
    return out;
  }
  for (int b = 0; b <= ehcs.battery_capacity(); ++b) {
    for (int l = 0; l < ehcs.num_latent(); ++l) {
      const int avail = b + ehcs.source().energy(l);
      for (int f = 0; f < 2; ++f) {
        const auto d = policy.distribution(b, l, f);
        if ((d.array() < 0.0).any() || !d.allFinite()) {
          out.push_back({b, l, f, -1, "negative or non-finite probability"});
        }
        if (std::abs(d.sum() - 1.0) > 1e-12) {
          out.push_back({b, l, f, -1, "distribution does not sum to 1"});
        }
        for (int eps = avail + 1; eps < d.size(); ++eps) {
          if (d(eps) != 0.0) {
            out.push_back({b, l, f, eps, "energy causality: eps exceeds b + h(l)"});
          }
        }
      }
    }
  }
  return out;
}

}  // namespace ehcs
