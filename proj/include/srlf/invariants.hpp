#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace srlf {

/// Outcome of one property suite: the worst residual seen against its
/// pass threshold.
struct SuiteResult {
  std::string suite;
  long cases = 0;
  double max_residual = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

SuiteResult check_lse_bound(long n, std::uint64_t seed);
SuiteResult check_lie_derivatives(long n, std::uint64_t seed);
SuiteResult check_gain(long n, std::uint64_t seed);
/// Random filter QPs against the dual projected-gradient oracle (objective
/// gap), a grid search of spacing `grid_step`, and the KKT certificate.
SuiteResult check_filter_qp_oracle(long n, std::uint64_t seed, double grid_step);
/// Random generic QPs (3 variables, up to 7 rows) against the same oracles.
SuiteResult check_generic_qp_oracle(long n, std::uint64_t seed, double grid_step);
SuiteResult check_qp_permutation(long n, std::uint64_t seed);
SuiteResult check_qp_monotone(long n, std::uint64_t seed);
SuiteResult check_filter_certificate(long n, std::uint64_t seed, int mu_samples);
SuiteResult check_filter_passthrough(long n, std::uint64_t seed);
SuiteResult check_filter_idempotence(long n, std::uint64_t seed);
SuiteResult check_saturation(long n, std::uint64_t seed);
SuiteResult check_dynamics_consistency(long n, std::uint64_t seed);
SuiteResult check_reference_periodicity(long n);

/// Every suite at its documented sample size (`quick` shrinks the sizes
/// for smoke runs).
std::vector<SuiteResult> run_all_suites(std::uint64_t seed, bool quick = false);

}  // namespace srlf
