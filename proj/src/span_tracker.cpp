#include "ipg/span_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "ipg/errors.hpp"
#include "ipg/prox.hpp"

namespace ipg {

namespace {

constexpr double kPi = std::numbers::pi;

SupportMask prefix_mask(int k) {
  if (k <= 0) return 0;
  if (k >= 64) return ~SupportMask{0};
  return (SupportMask{1} << k) - 1;
}

int mask_max(SupportMask m) {  // highest 1-based coordinate, 0 if empty
  int j = 0;
  while (m) {
    ++j;
    m >>= 1;
  }
  return j;
}

std::vector<SupportMask> masks_of(const BlockVector& v, double tol) {
  if (v.block_dim() >= 64) {
    throw CapacityError("span tracker: block dimension must stay below 64");
  }
  std::vector<SupportMask> out(v.blocks(), 0);
  for (int i = 0; i < v.blocks(); ++i) {
    for (int j = 0; j < v.block_dim(); ++j) {
      if (std::abs(v.block(i)(j)) > tol) out[i] |= SupportMask{1} << j;
    }
  }
  return out;
}

std::string mask_str(SupportMask m) {
  std::string s = "{";
  for (int j = 1; j <= 64 && m; ++j, m >>= 1) {
    if (m & 1) s += std::to_string(j) + ",";
  }
  s += "}";
  return s;
}

// supp(out_i) must be contained in the union of the neighbor supports.
void assert_neighbor_union(const std::vector<SupportMask>& out,
                           const std::vector<SupportMask>& in, const char* what) {
  const int n = static_cast<int>(out.size());
  for (int i = 0; i < n; ++i) {
    SupportMask allowed = in[i];
    if (i > 0) allowed |= in[i - 1];
    if (i + 1 < n) allowed |= in[i + 1];
    if (out[i] & ~allowed) {
      throw SpanRuleError(std::string(what) + ": block " + std::to_string(i + 1) +
                          " support " + mask_str(out[i]) + " escapes neighbor union " +
                          mask_str(allowed));
    }
  }
}

// Gradient support rule: input supported in {1..jbar-1} yields a
// parity- and region-dependent prefix for the gradient.
void assert_grad_support(SupportMask out, SupportMask in, int block_i, int m) {
  const int jbar = mask_max(in) + 1;
  int allowed;
  if (jbar == 1) {
    allowed = 1;
  } else if (jbar % 2 == 0) {
    allowed = (block_i <= m / 3) ? jbar : jbar - 1;
  } else {
    allowed = (block_i <= 2 * m / 3) ? jbar - 1 : jbar;
  }
  if (out & ~prefix_mask(allowed)) {
    throw SpanRuleError("grad f support: block " + std::to_string(block_i) + " support " +
                        mask_str(out) + " escapes prefix {1.." + std::to_string(allowed) + "}");
  }
}

struct FloorPolicy {
  int divisor = 6;  // 6 under A2, 3 under A3
  int m = 0;
};

void assert_floor(const std::vector<SupportMask>& masks, long t, const FloorPolicy& fp,
                  const char* what) {
  for (size_t i = 0; i < masks.size(); ++i) {
    const int jmax = mask_max(masks[i]);
    if (jmax >= 2 && fp.divisor * (t - 1) <= static_cast<long>(fp.m) * (jmax - 2)) {
      throw SpanRuleError(std::string(what) + ": coordinate " + std::to_string(jmax) +
                          " active in block " + std::to_string(i + 1) + " at t = " +
                          std::to_string(t) + " violates the support-expansion floor");
    }
  }
}

void merge_activation(std::vector<long>& first_activation,
                      const std::vector<SupportMask>& masks, long t) {
  for (const SupportMask m : masks) {
    for (int j = 0; j < static_cast<int>(first_activation.size()); ++j) {
      if ((m >> j) & 1 && first_activation[j] < 0) first_activation[j] = t;
    }
  }
}

// ---------------------------------------------------------------------------
// Shared tracker state: lazily computed, individually counted oracle results.
// ---------------------------------------------------------------------------

class A2Engine {
 public:
  explicit A2Engine(const Instance& inst)
      : inst_(inst),
        geom_(make_pairwise_geometry(inst.rows_m, inst.m, inst.params.block_dim)) {
    if (inst.params.block_dim >= 64) {
      throw CapacityError("span tracker: block dimension must stay below 64");
    }
    xs_.push_back(inst.zero_x());
    trace_.model = SpanModel::a2;
    trace_.first_activation.assign(inst.params.block_dim, -1);
    record_entry(0);
  }

  void step(const A2Step& s) {
    const long t = static_cast<long>(xs_.size());
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(inst_.dim_x);
    if (s.coef_atb != 0.0) xi += s.coef_atb * atb();
    for (const A2Ref& r : s.terms) {
      if (r.s < 0 || r.s >= static_cast<int>(xs_.size())) {
        throw SpanRuleError("A2 schedule at t=" + std::to_string(t) +
                            " references iterate s=" + std::to_string(r.s) +
                            " outside the generated history");
      }
      switch (r.kind) {
        case A2Term::x:
          xi += r.coef * xs_[r.s].vec();
          break;
        case A2Term::grad_f0:
          xi += r.coef * grad_of(r.s).vec();
          break;
        case A2Term::ata_x:
          xi += r.coef * atax_of(r.s).vec();
          break;
      }
    }
    BlockVector xiv(inst_.m, inst_.params.block_dim, std::move(xi));
    Eigen::VectorXd next = s.coef_xi * xiv.vec();
    if (s.use_prox) {
      if (!(s.prox_eta > 0.0)) throw SpanRuleError("A2 schedule: prox eta must be > 0");
      ++trace_.counters.prox_g_calls;
      BlockVector zeta =
          prox_pairwise_l1(xiv, s.prox_eta * inst_.params.beta, geom_);
      assert_neighbor_union(masks_of(zeta, 0.0), masks_of(xiv, 0.0), "prox_g");
      next += s.coef_zeta * zeta.vec();
    }
    xs_.emplace_back(inst_.m, inst_.params.block_dim, std::move(next));
    grads_.resize(xs_.size());
    atax_.resize(xs_.size());
    record_entry(t);
  }

  bool coordinate_active(int j) const {  // 1-based
    return trace_.first_activation[j - 1] >= 0;
  }

  SupportTrace take_trace() { return std::move(trace_); }

 private:
  const Eigen::VectorXd& atb() {
    if (!atb_) {
      ++trace_.counters.at_matvecs;
      atb_ = inst_.op_a.apply_transpose(inst_.problem.b);
    }
    return *atb_;
  }

  const BlockVector& grad_of(int s) {
    grads_.resize(std::max(grads_.size(), xs_.size()));
    if (!grads_[s]) {
      ++trace_.counters.grad_f0_calls;
      grads_[s] = f0_grad(xs_[s], inst_.params);
      const auto in = masks_of(xs_[s], 0.0);
      const auto out = masks_of(*grads_[s], 0.0);
      for (int i = 0; i < inst_.m; ++i) assert_grad_support(out[i], in[i], i + 1, inst_.m);
    }
    return *grads_[s];
  }

  const BlockVector& atax_of(int s) {
    atax_.resize(std::max(atax_.size(), xs_.size()));
    if (!atax_[s]) {
      ++trace_.counters.a_matvecs;
      ++trace_.counters.at_matvecs;
      atax_[s] = BlockVector(inst_.m, inst_.params.block_dim,
                             inst_.op_a.apply_transpose(inst_.op_a.apply(xs_[s].vec())));
      assert_neighbor_union(masks_of(*atax_[s], 0.0), masks_of(xs_[s], 0.0), "A^T A");
    }
    return *atax_[s];
  }

  void record_entry(long t) {
    SupportTrace::Entry e;
    e.t = t;
    e.x_supports = masks_of(xs_.back(), 0.0);
    assert_floor(e.x_supports, t, FloorPolicy{6, inst_.m}, "A2 iterate");
    merge_activation(trace_.first_activation, e.x_supports, t);
    trace_.entries.push_back(std::move(e));
  }

  const Instance& inst_;
  PairwiseGeometry geom_;
  std::vector<BlockVector> xs_;
  std::vector<std::optional<BlockVector>> grads_;
  std::vector<std::optional<BlockVector>> atax_;
  std::optional<Eigen::VectorXd> atb_;
  SupportTrace trace_;
};

class A3Engine {
 public:
  explicit A3Engine(const Instance& inst) : inst_(inst) {
    if (inst.params.block_dim >= 64) {
      throw CapacityError("span tracker: block dimension must stay below 64");
    }
    xs_.push_back(inst.zero_x());
    ys_.emplace_back(3 * inst.params.m2 - 1, inst.params.block_dim);
    trace_.model = SpanModel::a3;
    trace_.first_activation.assign(inst.params.block_dim, -1);
    record_entry(0);
  }

  void step(const A3Step& s) {
    const long t = static_cast<long>(xs_.size());
    Eigen::VectorXd x_next = Eigen::VectorXd::Zero(inst_.dim_x);
    if (s.x_coef_atb != 0.0) x_next += s.x_coef_atb * atb();
    if (s.x_coef_abart_bbar != 0.0) x_next += s.x_coef_abart_bbar * abart_bbar();
    for (const A3XRef& r : s.x_terms) {
      check_history(r.s, t);
      switch (r.kind) {
        case A3XTerm::x:
          x_next += r.coef * xs_[r.s].vec();
          break;
        case A3XTerm::grad_f0:
          x_next += r.coef * grad_of(r.s).vec();
          break;
        case A3XTerm::ata_x:
          x_next += r.coef * atax_of(r.s).vec();
          break;
        case A3XTerm::abart_abar_x:
          x_next += r.coef * abart_abar_x_of(r.s).vec();
          break;
        case A3XTerm::abart_y:
          x_next += r.coef * abart_y_of(r.s);
          break;
      }
    }

    Eigen::VectorXd xi = Eigen::VectorXd::Zero(inst_.dim_nbar);
    (void)s.y_coef_bbar;  // bbar = 0 for the instance; kept for schedule symmetry
    for (const A3YRef& r : s.y_terms) {
      check_history(r.s, t);
      switch (r.kind) {
        case A3YTerm::y:
          xi += r.coef * ys_[r.s].vec();
          break;
        case A3YTerm::abar_abart_y:
          xi += r.coef * abar_abart_y_of(r.s);
          break;
        case A3YTerm::abar_x:
          xi += r.coef * abar_x_of(r.s);
          break;
      }
    }
    BlockVector xiv(3 * inst_.params.m2 - 1, inst_.params.block_dim, std::move(xi));
    Eigen::VectorXd y_next = s.y_coef_xi * xiv.vec();
    if (s.y_use_prox) {
      if (!(s.y_prox_eta > 0.0)) throw SpanRuleError("A3 schedule: prox eta must be > 0");
      ++trace_.counters.prox_gbar_calls;
      Eigen::VectorXd zeta =
          prox_weighted_l1(xiv.vec(), s.y_prox_eta * inst_.gbar_weight);
      BlockVector zv(xiv.blocks(), xiv.block_dim(), zeta);
      const auto zm = masks_of(zv, 0.0);
      const auto xm = masks_of(xiv, 0.0);
      for (size_t j = 0; j < zm.size(); ++j) {
        if (zm[j] & ~xm[j]) throw SpanRuleError("prox_gbar: support grew");
      }
      y_next += s.y_coef_zeta * zeta;
    }

    xs_.emplace_back(inst_.m, inst_.params.block_dim, std::move(x_next));
    ys_.emplace_back(3 * inst_.params.m2 - 1, inst_.params.block_dim, std::move(y_next));
    grow_caches();
    record_entry(t);
  }

  bool coordinate_active(int j) const { return trace_.first_activation[j - 1] >= 0; }

  SupportTrace take_trace() { return std::move(trace_); }

 private:
  void check_history(int s, long t) const {
    if (s < 0 || s >= static_cast<int>(xs_.size())) {
      throw SpanRuleError("A3 schedule at t=" + std::to_string(t) +
                          " references iterate s=" + std::to_string(s) +
                          " outside the generated history");
    }
  }

  void grow_caches() {
    grads_.resize(xs_.size());
    atax_.resize(xs_.size());
    abart_abar_x_.resize(xs_.size());
    abar_x_.resize(xs_.size());
    abart_y_.resize(ys_.size());
    abar_abart_y_.resize(ys_.size());
  }

  const Eigen::VectorXd& atb() {
    if (!atb_) {
      ++trace_.counters.at_matvecs;
      atb_ = inst_.op_a.apply_transpose(inst_.problem.b);
    }
    return *atb_;
  }

  const Eigen::VectorXd& abart_bbar() {
    if (!abart_bbar_) {
      ++trace_.counters.abart_matvecs;
      abart_bbar_ = inst_.op_abar.apply_transpose(inst_.problem.bbar);
    }
    return *abart_bbar_;
  }

  const BlockVector& grad_of(int s) {
    grow_caches();
    if (!grads_[s]) {
      ++trace_.counters.grad_f0_calls;
      grads_[s] = f0_grad(xs_[s], inst_.params);
      const auto in = masks_of(xs_[s], 0.0);
      const auto out = masks_of(*grads_[s], 0.0);
      for (int i = 0; i < inst_.m; ++i) assert_grad_support(out[i], in[i], i + 1, inst_.m);
    }
    return *grads_[s];
  }

  const BlockVector& atax_of(int s) {
    grow_caches();
    if (!atax_[s]) {
      ++trace_.counters.a_matvecs;
      ++trace_.counters.at_matvecs;
      atax_[s] = BlockVector(inst_.m, inst_.params.block_dim,
                             inst_.op_a.apply_transpose(inst_.op_a.apply(xs_[s].vec())));
      assert_neighbor_union(masks_of(*atax_[s], 0.0), masks_of(xs_[s], 0.0), "A^T A");
    }
    return *atax_[s];
  }

  const BlockVector& abart_abar_x_of(int s) {
    grow_caches();
    if (!abart_abar_x_[s]) {
      ++trace_.counters.abar_matvecs;
      ++trace_.counters.abart_matvecs;
      abart_abar_x_[s] =
          BlockVector(inst_.m, inst_.params.block_dim,
                      inst_.op_abar.apply_transpose(inst_.op_abar.apply(xs_[s].vec())));
      assert_neighbor_union(masks_of(*abart_abar_x_[s], 0.0), masks_of(xs_[s], 0.0),
                            "Abar^T Abar");
    }
    return *abart_abar_x_[s];
  }

  const Eigen::VectorXd& abar_x_of(int s) {
    grow_caches();
    if (!abar_x_[s]) {
      ++trace_.counters.abar_matvecs;
      abar_x_[s] = inst_.op_abar.apply(xs_[s].vec());
      // supp((Abar x)_j) within supp(x_{j m1}) U supp(x_{j m1 + 1}).
      const auto xm = masks_of(xs_[s], 0.0);
      BlockVector yb(3 * inst_.params.m2 - 1, inst_.params.block_dim, *abar_x_[s]);
      const auto ym = masks_of(yb, 0.0);
      for (int j = 1; j <= 3 * inst_.params.m2 - 1; ++j) {
        const int row = j * inst_.params.m1;  // 1-based pair (row, row+1)
        const SupportMask allowed = xm[row - 1] | xm[row];
        if (ym[j - 1] & ~allowed) {
          throw SpanRuleError("Abar x: y block " + std::to_string(j) + " escapes pair support");
        }
      }
    }
    return *abar_x_[s];
  }

  const Eigen::VectorXd& abart_y_of(int s) {
    grow_caches();
    if (!abart_y_[s]) {
      ++trace_.counters.abart_matvecs;
      abart_y_[s] = inst_.op_abar.apply_transpose(ys_[s].vec());
      const auto ym = masks_of(ys_[s], 0.0);
      BlockVector xb(inst_.m, inst_.params.block_dim, *abart_y_[s]);
      const auto xm = masks_of(xb, 0.0);
      for (int i = 1; i <= inst_.m; ++i) {
        SupportMask allowed = 0;
        if (i % inst_.params.m1 == 0 && i / inst_.params.m1 <= 3 * inst_.params.m2 - 1) {
          allowed |= ym[i / inst_.params.m1 - 1];  // i = j m1 in M
        }
        if ((i - 1) % inst_.params.m1 == 0 && (i - 1) / inst_.params.m1 >= 1 &&
            (i - 1) / inst_.params.m1 <= 3 * inst_.params.m2 - 1) {
          allowed |= ym[(i - 1) / inst_.params.m1 - 1];  // i - 1 = j m1 in M
        }
        if (xm[i - 1] & ~allowed) {
          throw SpanRuleError("Abar^T y: x block " + std::to_string(i) + " escapes rule");
        }
      }
    }
    return *abart_y_[s];
  }

  const Eigen::VectorXd& abar_abart_y_of(int s) {
    grow_caches();
    if (!abar_abart_y_[s]) {
      ++trace_.counters.abar_matvecs;
      ++trace_.counters.abart_matvecs;
      abar_abart_y_[s] = inst_.op_abar.apply(inst_.op_abar.apply_transpose(ys_[s].vec()));
      // Abar Abar^T = 2 m^2 L_f^2 I: supports must match exactly.
      BlockVector ob(3 * inst_.params.m2 - 1, inst_.params.block_dim, *abar_abart_y_[s]);
      const auto om = masks_of(ob, 0.0);
      const auto ym = masks_of(ys_[s], 0.0);
      for (size_t j = 0; j < om.size(); ++j) {
        if (om[j] != ym[j]) throw SpanRuleError("Abar Abar^T y: support changed");
      }
    }
    return *abar_abart_y_[s];
  }

  void record_entry(long t) {
    SupportTrace::Entry e;
    e.t = t;
    e.x_supports = masks_of(xs_.back(), 0.0);
    e.y_supports = masks_of(ys_.back(), 0.0);
    const FloorPolicy fp{3, inst_.m};
    assert_floor(e.x_supports, t, fp, "A3 x iterate");
    assert_floor(e.y_supports, t, fp, "A3 y iterate");
    merge_activation(trace_.first_activation, e.x_supports, t);
    trace_.entries.push_back(std::move(e));
  }

  const Instance& inst_;
  std::vector<BlockVector> xs_;
  std::vector<BlockVector> ys_;
  std::vector<std::optional<BlockVector>> grads_, atax_, abart_abar_x_;
  std::vector<std::optional<Eigen::VectorXd>> abar_x_, abart_y_, abar_abart_y_;
  std::optional<Eigen::VectorXd> atb_, abart_bbar_;
  SupportTrace trace_;
};

double weight(std::mt19937_64& rng) {
  return 0.5 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

std::vector<std::vector<int>> support_of(const BlockVector& v, double tol) {
  if (tol < 0.0) throw InvariantError("support_of: tol must be >= 0");
  std::vector<std::vector<int>> out(v.blocks());
  for (int i = 0; i < v.blocks(); ++i) {
    for (int j = 0; j < v.block_dim(); ++j) {
      if (std::abs(v.block(i)(j)) > tol) out[i].push_back(j + 1);
    }
  }
  return out;
}

std::vector<SupportMask> support_masks(const BlockVector& v, double tol) {
  if (tol < 0.0) throw InvariantError("support_masks: tol must be >= 0");
  return masks_of(v, tol);
}

SupportTrace run_tracked_a2(const Instance& inst, const A2Schedule& schedule) {
  A2Engine eng(inst);
  for (const A2Step& s : schedule.steps) eng.step(s);
  return eng.take_trace();
}

SupportTrace run_tracked_a3(const Instance& inst, const A3Schedule& schedule) {
  A3Engine eng(inst);
  for (const A3Step& s : schedule.steps) eng.step(s);
  return eng.take_trace();
}

A2Schedule greedy_a2_schedule(int steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  A2Schedule sched;
  for (int t = 1; t <= steps; ++t) {
    A2Step st;
    st.coef_atb = weight(rng);
    for (int s = 0; s < t; ++s) {
      st.terms.push_back({s, A2Term::x, weight(rng)});
      st.terms.push_back({s, A2Term::grad_f0, weight(rng)});
      st.terms.push_back({s, A2Term::ata_x, weight(rng)});
    }
    st.use_prox = true;
    st.prox_eta = 0.25 + 0.5 * weight(rng);
    st.coef_xi = weight(rng);
    st.coef_zeta = weight(rng);
    sched.steps.push_back(std::move(st));
  }
  return sched;
}

A3Schedule greedy_a3_schedule(int steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  A3Schedule sched;
  for (int t = 1; t <= steps; ++t) {
    A3Step st;
    st.x_coef_atb = weight(rng);
    st.x_coef_abart_bbar = weight(rng);
    for (int s = 0; s < t; ++s) {
      st.x_terms.push_back({s, A3XTerm::x, weight(rng)});
      st.x_terms.push_back({s, A3XTerm::grad_f0, weight(rng)});
      st.x_terms.push_back({s, A3XTerm::ata_x, weight(rng)});
      st.x_terms.push_back({s, A3XTerm::abart_abar_x, weight(rng)});
      st.x_terms.push_back({s, A3XTerm::abart_y, weight(rng)});
      st.y_terms.push_back({s, A3YTerm::y, weight(rng)});
      st.y_terms.push_back({s, A3YTerm::abar_abart_y, weight(rng)});
      st.y_terms.push_back({s, A3YTerm::abar_x, weight(rng)});
    }
    st.y_coef_bbar = weight(rng);
    st.y_use_prox = true;
    st.y_prox_eta = 0.25 + 0.5 * weight(rng);
    st.y_coef_xi = weight(rng);
    st.y_coef_zeta = weight(rng);
    sched.steps.push_back(std::move(st));
  }
  return sched;
}

A2Schedule pg_a2_schedule(int steps, double step, double penalty, double eta) {
  A2Schedule sched;
  for (int t = 1; t <= steps; ++t) {
    A2Step st;
    st.terms.push_back({t - 1, A2Term::x, 1.0});
    st.terms.push_back({t - 1, A2Term::grad_f0, -step});
    st.terms.push_back({t - 1, A2Term::ata_x, -penalty});
    st.use_prox = true;
    st.prox_eta = eta;
    st.coef_xi = 0.0;
    st.coef_zeta = 1.0;
    sched.steps.push_back(std::move(st));
  }
  return sched;
}

EpisodeResult lower_bound_episode(const Instance& inst, SpanModel model, int t_cap,
                                  std::uint64_t seed) {
  EpisodeResult out;
  out.model = model;
  const int dbar = inst.params.block_dim;

  SupportTrace trace;
  if (model == SpanModel::a2) {
    A2Engine eng(inst);
    const A2Schedule sched = greedy_a2_schedule(t_cap, seed);
    for (const A2Step& s : sched.steps) {
      eng.step(s);
      if (eng.coordinate_active(dbar)) break;
    }
    trace = eng.take_trace();
  } else {
    A3Engine eng(inst);
    const A3Schedule sched = greedy_a3_schedule(t_cap, seed);
    for (const A3Step& s : sched.steps) {
      eng.step(s);
      if (eng.coordinate_active(dbar)) break;
    }
    trace = eng.take_trace();
  }

  out.activation_t = trace.first_activation;
  out.censored = trace.first_activation[dbar - 1] < 0;
  out.oracle_total = trace.counters.total();
  out.trace = std::move(trace);

  // Predicted complexity floors with the certified gap bound 3000 pi^2 dbar eps^2 / L_f.
  const double kappa = stacked_condition_number(inst.m);
  const double gap = 3000.0 * kPi * kPi * dbar * inst.params.eps * inst.params.eps /
                     inst.params.lip_f;
  const double inv_eps2 = 1.0 / (inst.params.eps * inst.params.eps);
  out.predicted_floor_p = static_cast<long>(
      std::ceil(kappa * inst.params.lip_f * gap * inv_eps2 / (36000.0 * kPi * kPi)));
  out.predicted_floor_sp = static_cast<long>(
      std::ceil(kappa * inst.params.lip_f * gap * inv_eps2 / (72000.0 * kPi * kPi)));
  return out;
}

// ---------------------------------------------------------------------------
// IPG replayed through tracked A3 oracles, carrying A^T z2 instead of z2.
// ---------------------------------------------------------------------------

namespace {

class TrackedOracles {
 public:
  explicit TrackedOracles(const Instance& inst) : inst_(inst) {}

  long t() const { return t_; }
  const OracleCounter& counters() const { return counters_; }

  BlockVector grad_f0(const BlockVector& x) {
    ++t_;
    ++counters_.grad_f0_calls;
    BlockVector g = ipg::f0_grad(x, inst_.params);
    const auto in = masks_of(x, 0.0);
    const auto out = masks_of(g, 0.0);
    for (int i = 0; i < inst_.m; ++i) assert_grad_support(out[i], in[i], i + 1, inst_.m);
    return g;
  }

  Eigen::VectorXd ata(const Eigen::VectorXd& x) {
    ++t_;
    ++counters_.a_matvecs;
    ++counters_.at_matvecs;
    Eigen::VectorXd out = inst_.op_a.apply_transpose(inst_.op_a.apply(x));
    assert_neighbor_union(masks_of(wrap_x(out), 0.0), masks_of(wrap_x(x), 0.0), "A^T A");
    return out;
  }

  Eigen::VectorXd abar(const Eigen::VectorXd& x) {
    ++t_;
    ++counters_.abar_matvecs;
    return inst_.op_abar.apply(x);
  }

  Eigen::VectorXd abart(const Eigen::VectorXd& y) {
    ++t_;
    ++counters_.abart_matvecs;
    return inst_.op_abar.apply_transpose(y);
  }

  Eigen::VectorXd prox_gbar(const Eigen::VectorXd& v, double t_prox) {
    ++t_;
    ++counters_.prox_gbar_calls;
    Eigen::VectorXd out = prox_weighted_l1(v, t_prox * inst_.gbar_weight);
    const auto vm = masks_of(wrap_y(v), 0.0);
    const auto om = masks_of(wrap_y(out), 0.0);
    for (size_t j = 0; j < om.size(); ++j) {
      if (om[j] & ~vm[j]) throw SpanRuleError("prox_gbar: support grew");
    }
    return out;
  }

  BlockVector wrap_x(const Eigen::VectorXd& v) const {
    return BlockVector(inst_.m, inst_.params.block_dim, v);
  }
  BlockVector wrap_y(const Eigen::VectorXd& v) const {
    return BlockVector(3 * inst_.params.m2 - 1, inst_.params.block_dim, v);
  }

 private:
  const Instance& inst_;
  OracleCounter counters_;
  long t_ = 0;
};

}  // namespace

SupportTrace run_ipg_tracked_a3(const Instance& inst, const TrackedIpgConfig& cfg) {
  const double lf = inst.params.lip_f;
  const double tau = cfg.tau > 0.0 ? cfg.tau : 2.0 * lf;
  const double sigma = cfg.sigma > 0.0 ? cfg.sigma : lf;

  TrackedOracles orc(inst);
  SupportTrace trace;
  trace.model = SpanModel::a3;
  trace.first_activation.assign(inst.params.block_dim, -1);
  const FloorPolicy fp{3, inst.m};

  const double lip_dual = inst.problem.norm_stacked * inst.problem.norm_stacked / tau;
  const double mu_dual = inst.problem.min_pos_gram_stacked / tau;
  const double kappa = std::sqrt(lip_dual / mu_dual);
  const int jk = static_cast<int>(std::ceil(2.0 * std::sqrt(2.0) * kappa));

  BlockVector x = inst.zero_x();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(inst.dim_nbar);

  auto declare = [&](const BlockVector& xv, const Eigen::VectorXd& yv) {
    SupportTrace::Entry e;
    e.t = orc.t();
    e.x_supports = masks_of(xv, 0.0);
    e.y_supports = masks_of(orc.wrap_y(yv), 0.0);
    assert_floor(e.x_supports, e.t, fp, "tracked IPG x iterate");
    assert_floor(e.y_supports, e.t, fp, "tracked IPG y iterate");
    merge_activation(trace.first_activation, e.x_supports, e.t);
    trace.entries.push_back(std::move(e));
  };
  declare(x, y);

  for (int k = 0; k < cfg.outer_iters; ++k) {
    const BlockVector grad = orc.grad_f0(x);
    const Eigen::VectorXd shift = grad.vec() - tau * x.vec();

    // z_ini = (y0, A x0) = 0 for the zero start; q carries A^T z2.
    Eigen::VectorXd z1 = Eigen::VectorXd::Zero(inst.dim_nbar);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(inst.dim_x);
    Eigen::VectorXd z1_hat = z1, q_hat = q;
    double alpha = 1.0;

    // Certified initial gap by weak duality, evaluated through tracked calls.
    const Eigen::VectorXd core0 = orc.abart(z1) + q + shift;
    const double dual0 = 0.5 / tau * core0.squaredNorm();
    const double primal0 = -grad.vec().dot(x.vec()) + 0.5 * tau * x.vec().squaredNorm();
    const double gap = std::max(dual0 + primal0, 1e-300);
    const double arg = 2.0 * gap / (mu_dual * cfg.delta * cfg.delta);
    const int ik = std::min(cfg.max_cycles,
                            arg <= 1.0 ? 0 : static_cast<int>(std::ceil(std::log2(arg))));

    for (int i = 0; i < ik; ++i) {
      for (int j = 0; j < jk; ++j) {
        const Eigen::VectorXd core = orc.abart(z1_hat) + q_hat + shift;
        const Eigen::VectorXd g1 = orc.abar(core) / tau;
        const Eigen::VectorXd atg2 = orc.ata(core) / tau;
        const Eigen::VectorXd z1_arg = z1_hat - g1 / lip_dual;
        const Eigen::VectorXd z1_new =
            z1_arg - orc.prox_gbar(lip_dual * z1_arg, lip_dual) / lip_dual;
        const Eigen::VectorXd q_new = q_hat - atg2 / lip_dual;
        const double alpha_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * alpha * alpha));
        const double mom = (alpha - 1.0) / alpha_next;
        z1_hat = z1_new + mom * (z1_new - z1);
        q_hat = q_new + mom * (q_new - q);
        z1 = z1_new;
        q = q_new;
        alpha = alpha_next;
        // Inner multipliers obey the same prefix floors as declared iterates.
        assert_floor(masks_of(orc.wrap_y(z1), 0.0), orc.t(), fp, "tracked z1");
        assert_floor(masks_of(orc.wrap_x(q), 0.0), orc.t(), fp, "tracked A^T z2");
      }
      z1_hat = z1;
      q_hat = q;
      alpha = 1.0;
    }

    const Eigen::VectorXd abart_z1 = orc.abart(z1);
    x = orc.wrap_x(x.vec() - (abart_z1 + q + grad.vec()) / tau);
    y = orc.prox_gbar(z1 / sigma + orc.abar(x.vec()), 1.0 / sigma);
    declare(x, y);
  }

  trace.counters = orc.counters();
  return trace;
}

}  // namespace ipg
