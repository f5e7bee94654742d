#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipg/instance.hpp"

namespace ipg {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Gradient consistency of h_i, f_i and f0 against central finite differences
// (relative error <= 1e-6 at `points` random points per function, all i).
// inject_fault flips the sign of one gradient branch to prove the harness
// detects a broken gradient; the property is then expected to fail.
PropertyResult check_gradient_fd(const Instance& inst, int points, std::uint64_t seed,
                                 bool inject_fault = false);

// Sampled scalar bounds, the sup-norm gradient bound, the empirical Lipschitz
// bounds, and the sampled objective-gap bound. Zero violations allowed.
PropertyResult check_bound_suite(const Instance& inst, int samples, int lipschitz_pairs,
                                 long gap_samples, std::uint64_t seed);

// Closed-form spectra vs dense eigensolves, condition-number window,
// Abar Abar^T = 2 m^2 L_f^2 I, for each admissible (m1, m2) pair given.
PropertyResult check_spectra(const std::vector<std::pair<int, int>>& m1_m2_pairs, int block_dim,
                             double lip_f);

// Adjointness, null space, row split, and the dense-vs-implicit matvec match.
PropertyResult check_structured_ops(std::uint64_t seed);

// Closed-form prox maps vs brute-force minimizers, the Moreau identity,
// the subdifferential-distance grid oracle, and firm nonexpansiveness.
PropertyResult check_prox_oracles(int pairwise_inputs, std::uint64_t seed);

// Gradient-support table (exhaustive prefixes), matvec/prox propagation, and
// the y-side support rules, all with exact zeros.
PropertyResult check_support_combinatorics(const Instance& inst, int sparse_inputs,
                                           std::uint64_t seed);

// Greedy adversarial schedules respect the support-expansion floors, and the
// replayed solver triggers no span-rule violations.
PropertyResult check_span_floors(const InstanceParams& params, std::uint64_t seed);

// Block-average lower bound and the small-coordinate certificate, sampled.
PropertyResult check_stationarity_bounds(const Instance& inst, int trials, std::uint64_t seed);

struct VerifyOptions {
  std::uint64_t seed = 12345;
  bool inject_gradient_fault = false;
  InstanceParams params{2, 1, 5, 0.1, 1.0, 0.0};
};

std::vector<PropertyResult> run_verify_suite(const VerifyOptions& opts);

}  // namespace ipg
