#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ehcs/model.hpp"

namespace ehcs {

/// Memoryless transmission policy u(eps | b, l, f) stored as a dense table.
///
/// Column (b * L + l) * 2 + f holds the distribution over transmit energy
/// eps = 0 .. H_max + B_cap.
class TransmissionPolicy {
 public:
  TransmissionPolicy() = default;
  TransmissionPolicy(int battery_capacity, int num_latent, int num_energy_levels)
      : battery_capacity_(battery_capacity),
        num_latent_(num_latent),
        table_(Eigen::MatrixXd::Zero(num_energy_levels,
                                     (battery_capacity + 1) * num_latent * 2)) {}

  /// Zero table sized for `ehcs`.
  static TransmissionPolicy empty_for(const ValidatedEhcs& ehcs) {
    return {ehcs.battery_capacity(), ehcs.num_latent(), ehcs.num_energy_levels()};
  }

  int battery_capacity() const { return battery_capacity_; }
  int num_latent() const { return num_latent_; }
  int num_energy_levels() const { return static_cast<int>(table_.rows()); }

  Eigen::Index column(int b, int l, int f) const {
    return (static_cast<Eigen::Index>(b) * num_latent_ + l) * 2 + f;
  }
  auto distribution(int b, int l, int f) { return table_.col(column(b, l, f)); }
  auto distribution(int b, int l, int f) const {
    return table_.col(column(b, l, f));
  }
  double prob(int eps, int b, int l, int f) const {
    return table_(eps, column(b, l, f));
  }
  void set_deterministic(int b, int l, int f, int eps) {
    auto d = distribution(b, l, f);
    d.setZero();
    d(eps) = 1.0;
  }

  /// Probability mass on eps >= threshold at (b, l, f).
  double attempt_mass(int b, int l, int f, int threshold) const;

  const Eigen::MatrixXd& table() const { return table_; }
  Eigen::MatrixXd& table() { return table_; }

  bool operator==(const TransmissionPolicy& other) const {
    return battery_capacity_ == other.battery_capacity_ &&
           num_latent_ == other.num_latent_ &&
           table_.rows() == other.table_.rows() &&
           table_.cols() == other.table_.cols() && table_ == other.table_;
  }

 private:
  int battery_capacity_ = 0;
  int num_latent_ = 0;
  Eigen::MatrixXd table_;
};

/// Transmit exactly ebar whenever b + h(l) >= ebar, otherwise idle.
TransmissionPolicy greedy_policy(const ValidatedEhcs& ehcs);

/// phi_{k,(b,l)}: probability of k consecutive feasible attempts from (b, l)
/// when ebar is spent at every step.
struct DwellProbTable {
  int k = 1;
  Eigen::MatrixXd probs;  // (B_cap + 1) x L

  double operator()(int b, int l) const { return probs(b, l); }
};

/// Forward dynamic program over G = (battery, latent) restricted to the
/// feasible set T = {b + h(l) >= ebar}. O(k |G|^2) per start state.
/// Throws std::invalid_argument for k < 1.
DwellProbTable dwell_probabilities(const ValidatedEhcs& ehcs, int k);

/// Predictive dwell-time policy: start transmitting (f = 0) only when
/// phi >= p, keep transmitting (f = 1) while energy allows.
/// Throws std::invalid_argument if p is outside [0, 1] or k < 1.
TransmissionPolicy build_dwell_policy(const ValidatedEhcs& ehcs, int k, double p);
TransmissionPolicy build_dwell_policy(const ValidatedEhcs& ehcs,
                                      const DwellProbTable& phi, double p);

struct PolicyViolation {
  int battery;
  int latent;
  int history;
  int energy;  // -1 for a normalization violation of the whole row
  std::string reason;
};

/// Checks normalization and energy causality; empty result means valid.
std::vector<PolicyViolation> validate_policy(const TransmissionPolicy& policy,
                                             const ValidatedEhcs& ehcs);

}  // namespace ehcs
