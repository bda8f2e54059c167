#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ehcs/harvest.hpp"

namespace ehcs {

struct PlantModel {
  Eigen::MatrixXd a_closed;
  Eigen::MatrixXd a_open;

  int dim() const { return static_cast<int>(a_closed.rows()); }

  static PlantModel scalar(double a_closed, double a_open) {
    return {Eigen::MatrixXd::Constant(1, 1, a_closed),
            Eigen::MatrixXd::Constant(1, 1, a_open)};
  }
};

struct ChannelModel {
  double success_prob = 1.0;  // lambda
  int tx_threshold = 1;       // ebar, energy units per attempt
};

enum class DisturbanceKind { none, iid_uniform, iid_gaussian };

/// I.i.d. zero-mean plant disturbance. Only the second moment W matters for
/// certification; the law matters for simulation.
struct DisturbanceModel {
  DisturbanceKind kind = DisturbanceKind::none;
  Eigen::VectorXd half_width;  // iid_uniform: per-coordinate half width
  Eigen::MatrixXd covariance;  // iid_gaussian

  static DisturbanceModel none() { return {}; }
  static DisturbanceModel uniform(Eigen::VectorXd half_width) {
    return {DisturbanceKind::iid_uniform, std::move(half_width), {}};
  }
  static DisturbanceModel gaussian(Eigen::MatrixXd covariance) {
    return {DisturbanceKind::iid_gaussian, {}, std::move(covariance)};
  }

  /// W for dimension n: zero for `none`, diag(a_i^2 / 3) for uniform, the
  /// covariance for gaussian.
  Eigen::MatrixXd second_moment(int n) const;
};

/// The system tuple (plant, channel, source, battery) plus the disturbance law.
struct EhcsSpec {
  PlantModel plant;
  ChannelModel channel;
  HarvestSource source;
  int battery_capacity = 0;
  DisturbanceModel disturbance;
};

/// Thrown by validate_ehcs with the complete list of violated invariants.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// An EhcsSpec that passed validation, with derived constants cached.
/// Immutable; safe to share read-only across threads.
class ValidatedEhcs {
 public:
  const EhcsSpec& spec() const { return spec_; }
  const PlantModel& plant() const { return spec_.plant; }
  const ChannelModel& channel() const { return spec_.channel; }
  const HarvestSource& source() const { return spec_.source; }
  const DisturbanceModel& disturbance() const { return spec_.disturbance; }

  int dim() const { return spec_.plant.dim(); }
  int battery_capacity() const { return spec_.battery_capacity; }
  int num_latent() const { return spec_.source.num_latent(); }
  int h_max() const { return spec_.source.h_max(); }
  int tx_threshold() const { return spec_.channel.tx_threshold; }
  double success_prob() const { return spec_.channel.success_prob; }
  /// Number of energy levels in [0, H_max + B_cap].
  int num_energy_levels() const { return h_max() + battery_capacity() + 1; }
  const Eigen::MatrixXd& disturbance_second_moment() const { return w_; }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  friend ValidatedEhcs validate_ehcs(const EhcsSpec& spec);
  ValidatedEhcs(EhcsSpec spec, Eigen::MatrixXd w,
                std::vector<std::string> warnings)
      : spec_(std::move(spec)), w_(std::move(w)), warnings_(std::move(warnings)) {}

  EhcsSpec spec_;
  Eigen::MatrixXd w_;
  std::vector<std::string> warnings_;
};

/// Throws ValidationError listing every violated invariant.
ValidatedEhcs validate_ehcs(const EhcsSpec& spec);

/// Idempotent re-validation.
inline const ValidatedEhcs& validate_ehcs(const ValidatedEhcs& ehcs) {
  return ehcs;
}

/// Returns a copy of `ehcs` with a different battery capacity, revalidated.
ValidatedEhcs with_battery_capacity(const ValidatedEhcs& ehcs, int capacity);

}  // namespace ehcs
