#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ehcs/embedding.hpp"
#include "ehcs/model.hpp"

namespace ehcs {

enum class Verdict { stable, unstable, marginal };

std::string to_string(Verdict v);

/// |rho - 1| <= kMarginalBand is reported as marginal, never coerced.
inline constexpr double kMarginalBand = 1e-6;

struct SpectralResult {
  double rho = 0.0;
  Verdict verdict = Verdict::marginal;
  /// Power-iteration steps summed over the large components (0 if every
  /// component was solved densely).
  int iterations = 0;
  bool converged = true;
  int num_components = 0;
  int largest_component = 0;
  std::string diagnostic;
};

/// Spectral radius of the second-moment operator. The operator is block
/// triangular in the strongly connected components of psi, so rho is the
/// maximum over component blocks; blocks with n^2 |C| <= dense_limit use a
/// dense eigensolver, larger ones shifted power iteration on the PSD cone
/// with Collatz-Wielandt bounds.
SpectralResult spectral_radius_test(const ModeChain& chain, const PlantModel& plant,
                                    double tol = 1e-10, int max_iter = 500000,
                                    int dense_limit = 2000);

/// Verdict from a spectral radius estimate using kMarginalBand.
Verdict classify_spectral_radius(double rho);

struct LyapunovCertificate {
  std::vector<Eigen::MatrixXd> matrices;  // R_s, each >= identity
  /// max_s lambda_max(A_s^T (sum_{s'} psi(s', s) R_{s'}) A_s - R_s)
  double slack = 0.0;
  /// The same quantity per mode.
  std::vector<double> mode_slack;
  /// Admissible modes; the envelope constants are taken over these only.
  /// Empty means every mode.
  std::vector<int> support;
};

struct LyapunovResult {
  std::optional<LyapunovCertificate> certificate;
  int iterations = 0;
  bool direct_solve = false;
  std::string diagnostic;

  bool feasible() const { return certificate.has_value(); }
};

/// Coupled Lyapunov fixed point R_s <- A_s^T (sum psi R) A_s + I from R = I.
/// Divergence (trace above trace_cap) reports infeasible; if max_iter runs out
/// first, the linear system (I - B^T) vec R = vec I is solved directly and the
/// solution accepted only if every R_s is positive definite with negative
/// recomputed slack.
LyapunovResult lyapunov_certificate(const ModeChain& chain, const PlantModel& plant,
                                    double tol = 1e-10, int max_iter = 100000,
                                    double trace_cap = 1e14);

/// Recomputes the certificate slack from scratch.
double certificate_slack(const ModeChain& chain, const PlantModel& plant,
                         const std::vector<Eigen::MatrixXd>& r);

/// Per-mode slack lambda_max(T*(R)_s - R_s).
std::vector<double> mode_slacks(const ModeChain& chain, const PlantModel& plant,
                                const std::vector<Eigen::MatrixXd>& r);

/// Constants of the mean-square envelope
/// E|x(t)|^2 <= alpha xi^t E|x(0)|^2 + M Tr(W).
struct DecayConstants {
  double alpha = 1.0;
  double xi = 0.0;
  double ultimate_bound = 0.0;  // M = alpha / (1 - xi)
};

/// Over the certificate's support: alpha = max_s lambda_max(R_s) /
/// min_s lambda_min(R_s) and xi = 1 + max_s slack_s / lambda_max(R_s), the
/// contraction rate of the Lyapunov function x^T R_s x (never below rho).
/// Throws std::invalid_argument when rho >= 1 or the certificate has
/// non-negative slack.
DecayConstants decay_constants(const LyapunovCertificate& cert, double rho);

struct StabilityReport {
  double rho = 0.0;
  Verdict verdict = Verdict::marginal;
  std::optional<DecayConstants> constants;
  std::optional<LyapunovCertificate> certificate;
  double slack = 0.0;
  int iterations = 0;
  SpectralResult spectral;
  std::string diagnostic;
};

struct CertifyOptions {
  double spectral_tol = 1e-10;
  int spectral_max_iter = 500000;
  double lyapunov_tol = 1e-10;
  int lyapunov_max_iter = 100000;
};

/// Runs both tests. The verdict is stable only if rho < 1 - band and a
/// certificate exists; disagreement outside the band is reported as marginal.
StabilityReport certify(const ModeChain& chain, const PlantModel& plant,
                        const CertifyOptions& options = {});

/// Convenience: build the chain for `policy` and certify.
StabilityReport certify(const ValidatedEhcs& ehcs, const TransmissionPolicy& policy,
                        const CertifyOptions& options = {});

}  // namespace ehcs
