#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ipg/instance.hpp"
#include "ipg/oracle_counter.hpp"

namespace ipg {

// Per-block coordinate supports with exact-zero semantics. Bit j-1 of the
// mask marks coordinate j (1-based). Coordinate dimensions are capped at 63.
using SupportMask = std::uint64_t;

std::vector<std::vector<int>> support_of(const BlockVector& v, double tol = 0.0);
std::vector<SupportMask> support_masks(const BlockVector& v, double tol = 0.0);

enum class SpanModel { a2, a3 };

// ---- Model A2: oracle terms {A^T b} U {x^(s), grad f0(x^(s)), A^T A x^(s)},
//      one prox_{eta g} application per iteration.
enum class A2Term { x, grad_f0, ata_x };

struct A2Ref {
  int s = 0;
  A2Term kind = A2Term::x;
  double coef = 0.0;
};

struct A2Step {
  double coef_atb = 0.0;
  std::vector<A2Ref> terms;
  bool use_prox = false;
  double prox_eta = 1.0;
  double coef_xi = 1.0;
  double coef_zeta = 0.0;
};

struct A2Schedule {
  std::vector<A2Step> steps;
};

// ---- Model A3: x from {A^T b, Abar^T bbar} U {x, grad f0(x), A^T A x,
//      Abar^T Abar x, Abar^T y}; y from {bbar} U {y, Abar Abar^T y, Abar x}
//      plus one prox_{eta gbar}.
enum class A3XTerm { x, grad_f0, ata_x, abart_abar_x, abart_y };
enum class A3YTerm { y, abar_abart_y, abar_x };

struct A3XRef {
  int s = 0;
  A3XTerm kind = A3XTerm::x;
  double coef = 0.0;
};

struct A3YRef {
  int s = 0;
  A3YTerm kind = A3YTerm::y;
  double coef = 0.0;
};

struct A3Step {
  double x_coef_atb = 0.0;
  double x_coef_abart_bbar = 0.0;
  std::vector<A3XRef> x_terms;
  double y_coef_bbar = 0.0;
  std::vector<A3YRef> y_terms;
  bool y_use_prox = false;
  double y_prox_eta = 1.0;
  double y_coef_xi = 1.0;
  double y_coef_zeta = 0.0;
};

struct A3Schedule {
  std::vector<A3Step> steps;
};

struct SupportTrace {
  SpanModel model = SpanModel::a2;
  struct Entry {
    long t = 0;
    std::vector<SupportMask> x_supports;  // m blocks
    std::vector<SupportMask> y_supports;  // 3*m2-1 blocks (A3 only)
  };
  std::vector<Entry> entries;
  OracleCounter counters;
  // First iteration at which coordinate j (1-based) appears in any x block;
  // -1 when censored by the horizon.
  std::vector<long> first_activation;
};

// Executes a schedule on the instance from x^(0) = 0 (and y^(0) = 0 under
// A3), recording supports and oracle counts. Throws SpanRuleError if a step
// references a future iterate or if a recorded support violates the
// support-expansion floor (6(t-1) > m(jmax-2) under A2, 3(t-1) > m(jmax-2)
// under A3, for the largest active coordinate jmax >= 2).
SupportTrace run_tracked_a2(const Instance& inst, const A2Schedule& schedule);
SupportTrace run_tracked_a3(const Instance& inst, const A3Schedule& schedule);

// Adversarial schedule: every available term with seeded positive weights and
// a prox application per iteration, maximizing support growth.
A2Schedule greedy_a2_schedule(int steps, std::uint64_t seed);
A3Schedule greedy_a3_schedule(int steps, std::uint64_t seed);

// Proximal gradient with an inexact-projection penalty term:
// xi = x - step*grad f0(x) - penalty*A^T A x, x+ = prox_{eta g}(xi).
A2Schedule pg_a2_schedule(int steps, double step, double penalty, double eta);

struct EpisodeResult {
  SpanModel model = SpanModel::a2;
  std::vector<long> activation_t;  // per coordinate, -1 censored
  long predicted_floor_p = 0;      // ceil(kappa * L_f * dF0 * eps^-2 / (36000 pi^2))
  long predicted_floor_sp = 0;     // ceil(kappa * L_f * dF  * eps^-2 / (72000 pi^2))
  long oracle_total = 0;
  bool censored = false;
  SupportTrace trace;
};

// Runs the greedy schedule until coordinate dbar activates (or the cap) and
// reports activation times next to the predicted complexity floors from the
// certified objective-gap bound.
EpisodeResult lower_bound_episode(const Instance& inst, SpanModel model, int t_cap,
                                  std::uint64_t seed);

struct TrackedIpgConfig {
  double tau = 0.0;    // <= 0 selects 2 L_f
  double sigma = 0.0;  // <= 0 selects L_f
  double delta = 1e-4;
  int outer_iters = 3;
  int max_cycles = 64;
};

// Replays the inexact proximal gradient method through tracked A3 oracles,
// maintaining A^T z2 directly instead of z2. Every tracked product asserts
// its support-propagation rule and every declared iterate the A3 floor;
// SpanRuleError on any violation.
SupportTrace run_ipg_tracked_a3(const Instance& inst, const TrackedIpgConfig& cfg = {});

}  // namespace ipg
