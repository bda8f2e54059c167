#include "ehcs/harvest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace ehcs {

std::vector<std::string> check_column_stochastic(const Eigen::MatrixXd& m,
                                                 const std::string& what,
                                                 double tol) {
  std::vector<std::string> errors;
  if (m.rows() != m.cols() || m.rows() == 0) {
    errors.push_back(what + ": matrix must be square and non-empty");
    return errors;
  }
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    bool bad_entry = false;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j)) || m(i, j) < 0.0) bad_entry = true;
    }
    if (bad_entry) {
      errors.push_back(what + ": column " + std::to_string(j + 1) +
                       " has a negative or non-finite entry");
      continue;
    }
    if (std::abs(m.col(j).sum() - 1.0) > tol) {
      errors.push_back(what + ": column " + std::to_string(j + 1) +
                       " not stochastic");
    }
  }
  return errors;
}

HarvestSource::HarvestSource(Eigen::MatrixXd transition,
                             std::vector<int> energy_map)
    : transition_(std::move(transition)), energy_map_(std::move(energy_map)) {
  auto errors = check_column_stochastic(transition_, "source.transition");
  if (static_cast<Eigen::Index>(energy_map_.size()) != transition_.rows()) {
    errors.push_back("source.energy_map: length " +
                     std::to_string(energy_map_.size()) +
                     " does not match the latent chain size " +
                     std::to_string(transition_.rows()));
  }
  for (std::size_t i = 0; i < energy_map_.size(); ++i) {
    if (energy_map_[i] < 0) {
      errors.push_back("source.energy_map: negative energy value at latent " +
                       std::to_string(i + 1));
    }
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
    throw std::invalid_argument(msg);
  }
  h_max_ = energy_map_.empty()
               ? 0
               : *std::max_element(energy_map_.begin(), energy_map_.end());
}

HarvestSource HarvestSource::unchecked(Eigen::MatrixXd transition,
                                       std::vector<int> energy_map) {
  HarvestSource src;
  src.transition_ = std::move(transition);
  src.energy_map_ = std::move(energy_map);
  src.h_max_ = src.energy_map_.empty()
                   ? 0
                   : *std::max_element(src.energy_map_.begin(),
                                       src.energy_map_.end());
  return src;
}

double HarvestSource::stationary_mean_energy(int initial_latent,
                                             int steps) const {
  // Cesaro average of the latent distribution; robust to periodic chains.
  const Eigen::Index n = transition_.rows();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  p(initial_latent) = 1.0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < steps; ++t) {
    acc += p;
    p = transition_ * p;
  }
  acc /= steps;
  double mean = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) mean += acc(i) * energy_map_[i];
  return mean;
}

std::vector<double> SolarSourceSpec::clamped_sine_profile(int period) {
  std::vector<double> d(period);
  for (int tau = 1; tau <= period; ++tau) {
    const double v = std::sin(2.0 * std::numbers::pi * tau / period);
    d[tau - 1] = std::clamp(v, 0.0, 1.0);
  }
  return d;
}

int round_half_up(double v) {
  return static_cast<int>(std::floor(v + 0.5 + 1e-9));
}

HarvestSource build_deterministic_periodic(const std::vector<int>& schedule) {
  if (schedule.empty()) {
    throw std::invalid_argument("deterministic_periodic: empty schedule");
  }
  const int rho = static_cast<int>(schedule.size());
  Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(rho, rho);
  for (int l = 0; l < rho; ++l) perm((l + 1) % rho, l) = 1.0;
  return HarvestSource(std::move(perm), schedule);
}

HarvestSource build_ergodic(const Eigen::MatrixXd& transition,
                            const std::vector<int>& energy_map) {
  return HarvestSource(transition, energy_map);
}

HarvestSource build_periodic_stochastic(const SolarSourceSpec& spec) {
  std::vector<std::string> errors;
  if (spec.period < 1) errors.push_back("period must be >= 1");
  if (spec.max_intensity < 0.0) errors.push_back("max_intensity must be >= 0");
  if (spec.max_damping < 0.0) errors.push_back("max_damping must be >= 0");
  if (static_cast<int>(spec.ideal_profile.size()) != spec.period) {
    errors.push_back("ideal_profile must have one entry per period slot");
  }
  for (double d : spec.ideal_profile) {
    if (!(d >= 0.0 && d <= 1.0)) {
      errors.push_back("ideal_profile values must lie in [0,1]");
      break;
    }
  }
  auto chain_errors = check_column_stochastic(spec.cloud_chain, "cloud_chain");
  errors.insert(errors.end(), chain_errors.begin(), chain_errors.end());
  if (static_cast<Eigen::Index>(spec.cloud_loss.size()) !=
      spec.cloud_chain.rows()) {
    errors.push_back("cloud_loss must have one entry per cloud state");
  }
  for (double c : spec.cloud_loss) {
    if (!(c >= 0.0 && c <= 1.0)) {
      errors.push_back("cloud_loss values must lie in [0,1]");
      break;
    }
  }
  if (!errors.empty()) {
    std::string msg = "periodic_stochastic:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw std::invalid_argument(msg);
  }

  const int rho = spec.period;
  const int nc = static_cast<int>(spec.cloud_chain.rows());
  const int n = rho * nc;
  Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> energy(n);
  for (int tau = 0; tau < rho; ++tau) {
    const int next_tau = (tau + 1) % rho;
    for (int c = 0; c < nc; ++c) {
      const int l = tau * nc + c;
      for (int c2 = 0; c2 < nc; ++c2) {
        transition(next_tau * nc + c2, l) = spec.cloud_chain(c2, c);
      }
      const double raw = spec.max_intensity * spec.ideal_profile[tau] -
                         spec.max_damping * spec.cloud_loss[c];
      energy[l] = std::max(0, round_half_up(raw));
    }
  }
  return HarvestSource(std::move(transition), std::move(energy));
}

}  // namespace ehcs
