#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ehcs {

/// Energy harvesting process given as a deterministic energy map over a
/// finite latent Markov chain.
///
/// `transition` is column-stochastic: entry (next, current) is the probability
/// of moving from latent state `current` to `next`. Latent states are indexed
/// from 0.
class HarvestSource {
 public:
  HarvestSource() = default;

  /// Throws std::invalid_argument if a column is not stochastic, an entry is
  /// negative, an energy value is negative, or the dimensions disagree.
  HarvestSource(Eigen::MatrixXd transition, std::vector<int> energy_map);

  /// Wraps the data without checks; validate_ehcs reports any violations
  /// together with the rest of the system's errors.
  static HarvestSource unchecked(Eigen::MatrixXd transition,
                                 std::vector<int> energy_map);

  const Eigen::MatrixXd& transition() const { return transition_; }
  const std::vector<int>& energy_map() const { return energy_map_; }
  int num_latent() const { return static_cast<int>(energy_map_.size()); }
  int energy(int latent) const { return energy_map_[latent]; }
  int h_max() const { return h_max_; }

  /// Long-run mean energy arrival: Cesaro average of the latent law over
  /// `steps` slots started from `initial_latent` (well defined for periodic
  /// chains too).
  double stationary_mean_energy(int initial_latent = 0,
                                int steps = 20000) const;

 private:
  Eigen::MatrixXd transition_;
  std::vector<int> energy_map_;
  int h_max_ = 0;
};

/// Cloud-modulated periodic source. Latent index encodes (tau, cloud) as
/// tau * n_cloud + cloud, both 0-based; tau = 0 is the first slot of the period.
struct SolarSourceSpec {
  int period = 1;
  double max_intensity = 0.0;
  double max_damping = 0.0;
  /// Ideal cloudless profile d(tau) for tau = 1..period (stored 0-based).
  std::vector<double> ideal_profile;
  Eigen::MatrixXd cloud_chain;
  std::vector<double> cloud_loss;

  /// d(tau) = clamp(sin(2 pi tau / period), 0, 1) for tau = 1..period.
  static std::vector<double> clamped_sine_profile(int period);
};

/// Checks a column-stochastic matrix; returns one message per violation with
/// 1-based column numbers. `what` prefixes every message.
std::vector<std::string> check_column_stochastic(const Eigen::MatrixXd& m,
                                                 const std::string& what,
                                                 double tol = 1e-12);

HarvestSource build_deterministic_periodic(const std::vector<int>& schedule);

HarvestSource build_ergodic(const Eigen::MatrixXd& transition,
                            const std::vector<int>& energy_map);

HarvestSource build_periodic_stochastic(const SolarSourceSpec& spec);

/// Half-up rounding used by the solar energy rule, with a 1e-9 guard so that
/// values like 5 * sin(pi / 6) = 2.4999999999999996 round to 3.
int round_half_up(double v);

}  // namespace ehcs
