#pragma once

namespace ipg {

// First-order oracle call counts. Monotone per run; totals define the
// measured oracle complexity.
struct OracleCounter {
  long grad_f0_calls = 0;
  long a_matvecs = 0;
  long at_matvecs = 0;
  long abar_matvecs = 0;
  long abart_matvecs = 0;
  long prox_g_calls = 0;
  long prox_gbar_calls = 0;

  long matvecs() const { return a_matvecs + at_matvecs + abar_matvecs + abart_matvecs; }
  long prox_calls() const { return prox_g_calls + prox_gbar_calls; }
  long total() const { return grad_f0_calls + matvecs() + prox_calls(); }

  OracleCounter& operator+=(const OracleCounter& o) {
    grad_f0_calls += o.grad_f0_calls;
    a_matvecs += o.a_matvecs;
    at_matvecs += o.at_matvecs;
    abar_matvecs += o.abar_matvecs;
    abart_matvecs += o.abart_matvecs;
    prox_g_calls += o.prox_g_calls;
    prox_gbar_calls += o.prox_gbar_calls;
    return *this;
  }
};

}  // namespace ipg
