#include "ehcs/model.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace ehcs {
namespace {

std::string join(const std::vector<std::string>& errors) {
  std::string msg = "invalid EHCS configuration:";
  for (const auto& e : errors) msg += "\n  - " + e;
  return msg;
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

ValidationError::ValidationError(std::vector<std::string> errors)
    : std::invalid_argument(join(errors)), errors_(std::move(errors)) {}

Eigen::MatrixXd DisturbanceModel::second_moment(int n) const {
  switch (kind) {
    case DisturbanceKind::none:
      return Eigen::MatrixXd::Zero(n, n);
    case DisturbanceKind::iid_uniform: {
      Eigen::VectorXd a = half_width;
      if (a.size() == 1 && n > 1) a = Eigen::VectorXd::Constant(n, a(0));
      return (a.array().square() / 3.0).matrix().asDiagonal();
    }
    case DisturbanceKind::iid_gaussian:
      return covariance;
  }
  return Eigen::MatrixXd::Zero(n, n);
}

ValidatedEhcs validate_ehcs(const EhcsSpec& spec) {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  const auto& plant = spec.plant;
  const Eigen::Index n = plant.a_closed.rows();
  if (n < 1 || plant.a_closed.cols() != n) {
    errors.push_back("plant.a_closed: must be a non-empty square matrix");
  }
  if (plant.a_open.rows() != plant.a_closed.rows() ||
      plant.a_open.cols() != plant.a_closed.cols()) {
    errors.push_back("plant: dimension mismatch between a_closed (" +
                     std::to_string(plant.a_closed.rows()) + "x" +
                     std::to_string(plant.a_closed.cols()) + ") and a_open (" +
                     std::to_string(plant.a_open.rows()) + "x" +
                     std::to_string(plant.a_open.cols()) + ")");
  }
  if (!all_finite(plant.a_closed)) errors.push_back("plant.a_closed: non-finite entry");
  if (!all_finite(plant.a_open)) errors.push_back("plant.a_open: non-finite entry");

  const auto& ch = spec.channel;
  if (!(ch.success_prob >= 0.0 && ch.success_prob <= 1.0)) {
    errors.push_back("channel.lambda: must lie in [0,1]");
  }
  if (ch.tx_threshold < 1) {
    errors.push_back("channel.tx_threshold: must be >= 1 (got " +
                     std::to_string(ch.tx_threshold) + ")");
  }
  if (spec.battery_capacity < 0) {
    errors.push_back("battery_capacity: must be >= 0");
  }

  // Sources parsed from config arrive via HarvestSource::unchecked.
  const auto& src = spec.source;
  if (src.num_latent() == 0) {
    errors.push_back("source: empty latent chain");
  } else {
    auto chain_errors = check_column_stochastic(src.transition(), "source.transition");
    errors.insert(errors.end(), chain_errors.begin(), chain_errors.end());
    if (src.transition().rows() != src.num_latent()) {
      errors.push_back("source.energy_map: length does not match the latent chain");
    }
    for (int l = 0; l < src.num_latent(); ++l) {
      if (src.energy(l) < 0) {
        errors.push_back("source.energy_map: negative energy value at latent " +
                         std::to_string(l + 1));
      }
    }
  }

  Eigen::MatrixXd w;
  const auto& dist = spec.disturbance;
  if (n >= 1) {
    if (dist.kind == DisturbanceKind::iid_uniform) {
      if (dist.half_width.size() != 1 && dist.half_width.size() != n) {
        errors.push_back("disturbance.half_width: expected 1 or " +
                         std::to_string(n) + " entries");
      } else if ((dist.half_width.array() < 0.0).any() ||
                 !dist.half_width.allFinite()) {
        errors.push_back("disturbance.half_width: must be finite and >= 0");
      }
    }
    if (dist.kind == DisturbanceKind::iid_gaussian &&
        (dist.covariance.rows() != n || dist.covariance.cols() != n)) {
      errors.push_back("disturbance.covariance: must be " + std::to_string(n) +
                       "x" + std::to_string(n));
    }
    if (errors.empty() || dist.kind == DisturbanceKind::none) {
      w = dist.second_moment(static_cast<int>(n));
      if (w.rows() == n && w.cols() == n) {
        const bool symmetric = (w - w.transpose()).cwiseAbs().maxCoeff() <=
                               1e-12 * (1.0 + w.cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            0.5 * (w + w.transpose()), Eigen::EigenvaluesOnly);
        if (!symmetric || !w.allFinite() ||
            es.eigenvalues().minCoeff() < -1e-12 * (1.0 + w.norm())) {
          errors.push_back("disturbance: second moment W is not symmetric PSD");
        }
      }
    }
  }

  if (!errors.empty()) throw ValidationError(std::move(errors));

  if (ch.tx_threshold > spec.battery_capacity + src.h_max()) {
    warnings.push_back(
        "transmission never feasible: tx_threshold " +
        std::to_string(ch.tx_threshold) + " exceeds battery_capacity + H_max = " +
        std::to_string(spec.battery_capacity + src.h_max()));
  }
  return ValidatedEhcs(spec, std::move(w), std::move(warnings));
}

ValidatedEhcs with_battery_capacity(const ValidatedEhcs& ehcs, int capacity) {
  EhcsSpec spec = ehcs.spec();
  spec.battery_capacity = capacity;
  return validate_ehcs(spec);
}

}  // namespace ehcs
