#pragma once

/// \file
/// Extrapolated primal-dual hybrid gradient iteration for
///
///   min_u  sum φ(x, ∇u + F) h² + sum H u h² [+ sum_f φ(x,ν)|g_f - u_c| h]
///
/// with the dual pair (b, t): b per cell with φ⁰(x,b) ≤ 1, t per Dirichlet
/// boundary face with |t_f| ≤ φ(x,ν). The dual is feasible when
///   Neumann:   divK b = H - mean(H)
///   Dirichlet: divK b + (1/h) sum_{faces of c} t_f = H
/// and its value is <F,b> + sum t_f g_f h. Dual values are only reported for
/// exactly feasible pairs, see DualRepair.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "plg/field.hpp"
#include "plg/grid.hpp"
#include "plg/norm.hpp"
#include "plg/problem.hpp"

namespace plg {

struct SolverParams {
  double tau = 0.0;    // 0 selects 0.99 / L
  double sigma = 0.0;  // 0 selects 0.99 / L
  double theta = 1.0;
  double tol_gap = 1e-4;
  long max_iter = 100000;
  long gap_check_stride = 50;
  PoincareOptions poincare{};

  /// Fills default step sizes and throws ConfigError on tau*sigma*L^2 > 1.
  SolverParams resolved(const GridDomain& dom) const {
    SolverParams p = *this;
    const double L = operator_norm_estimate(dom);
    if (p.tau == 0.0) p.tau = 0.99 / L;
    if (p.sigma == 0.0) p.sigma = 0.99 / L;
    if (!(p.tau > 0.0) || !(p.sigma > 0.0)) throw ConfigError("step sizes tau and sigma must be > 0");
    if (p.tau * p.sigma * L * L > 1.0 + 1e-12)
      throw ConfigError("step sizes violate tau*sigma*L^2 <= 1 (L = sqrt(8)/h = " + std::to_string(L) +
                        ", tau*sigma*L^2 = " + std::to_string(p.tau * p.sigma * L * L) + ")");
    if (!(p.theta >= 0.0 && p.theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
    if (!(p.tol_gap > 0.0)) throw ConfigError("tol_gap must be > 0");
    if (p.max_iter < 0) throw ConfigError("max_iter must be >= 0");
    if (p.gap_check_stride <= 0) throw ConfigError("gap_check_stride must be > 0");
    return p;
  }
};

struct GapRecord {
  long iter = 0;
  double primal = 0.0;  // energy of the current iterate
  double dual = 0.0;    // value of the repaired current dual, -inf if no feasible repair
  double gap = 0.0;     // primal - dual
  double best_primal = 0.0;
  double best_dual = 0.0;
  double rel_gap = 0.0;  // (best_primal - best_dual) / max(1, |best_primal|)
};

struct PrimalDualState {
  ScalarField u;
  VectorField b;
  FaceData t;  // Dirichlet face fluxes; empty under Neumann
  ScalarField u_bar;
  long iter = 0;
  std::vector<GapRecord> gap_history;

  static PrimalDualState zeros(const ProblemSpec& spec) {
    PrimalDualState s;
    s.u = spec.dom.scalar();
    s.b = spec.dom.vector();
    if (spec.dirichlet()) s.t.assign(spec.dom.face_count(), 0.0);
    s.u_bar = s.u;
    return s;
  }
};

/// Divergence target of a feasible dual: H (Dirichlet) or H - mean(H) (Neumann).
inline ScalarField dual_divergence_target(const ProblemSpec& spec) {
  ScalarField T = spec.source;
  if (!spec.dirichlet()) subtract_mean(spec.dom, T);
  return T;
}

/// One iteration. b and t are projected onto their dual balls, u takes an
/// explicit step on the Lagrangian and is re-centred under Neumann.
inline void pdhg_step(PrimalDualState& s, const ProblemSpec& spec, const SolverParams& params) {
  const auto& dom = spec.dom;
  const double tau = params.tau, sigma = params.sigma;
  const VectorField g = gradient(dom, s.u_bar);
  for (const auto& c : dom.cells()) {
    const std::size_t k = dom.flat(c);
    s.b[k] = spec.norm.project_unchecked(k, s.b[k] + sigma * (g[k] + spec.drift[k]));
  }
  if (spec.dirichlet()) {
    const auto& faces = dom.boundary_faces();
    const double inv_h = 1.0 / dom.h();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const std::size_t k = dom.flat(faces[f].cell);
      const double w = spec.norm.phi_unchecked(k, faces[f].normal);
      s.t[f] = std::clamp(s.t[f] + sigma * (spec.bc.f[f] - s.u_bar[k]) * inv_h, -w, w);
    }
  }
  const ScalarField d = flux_divergence(dom, s.b, s.t);
  ScalarField u_old = s.u;
  for (const auto& c : dom.cells()) {
    const std::size_t k = dom.flat(c);
    s.u[k] += tau * (d[k] - spec.source[k]);
  }
  if (!spec.dirichlet()) subtract_mean(dom, s.u);
  for (const auto& c : dom.cells()) {
    const std::size_t k = dom.flat(c);
    s.u_bar[k] = s.u[k] + params.theta * (s.u[k] - u_old[k]);
  }
  ++s.iter;
}

// Dual repair -------------------------------------------------------------------------

/// Turns a ball-feasible dual pair into an exactly feasible one.
///
/// The divergence defect r = div(b,t) - T is removed with the least-squares
/// correction (b,t) + Aψ, A*A ψ = r, where A is the (extended) gradient. The
/// corrected pair can leave the dual ball; it is then blended with a
/// reference pair that satisfies the divergence constraint strictly inside
/// the ball (the minimum-norm field b0 = Aψ0 or the best pair seen so far).
/// Blending keeps the divergence exact and, by convexity of the ball, restores
/// feasibility.
class DualRepair {
 public:
  explicit DualRepair(const ProblemSpec& spec) : spec_(&spec), target_(dual_divergence_target(spec)) {
    if (spec.dirichlet()) face_w_ = spec.face_norms();
    ScalarField rhs = target_;
    for (auto& v : rhs.values()) v = -v;
    ScalarField psi = solve_normal(rhs);
    apply_A(psi, b0_, t0_);
    rho_ = ball_gauge(b0_, t0_);
  }

  /// max φ⁰(b0) over cells and |t0_f|/φ(x,ν) over faces.
  double reference_gauge() const { return rho_; }
  const ScalarField& target() const { return target_; }

  struct Result {
    bool feasible = false;
    double value = -std::numeric_limits<double>::infinity();
    VectorField b;
    FaceData t;
    double correction = 0.0;  // max |Aψ| applied by the least-squares step
    double blend = 1.0;       // weight kept on the corrected pair
  };

  Result repair(const VectorField& b, std::span<const double> t, const Result* best = nullptr) const {
    const auto& spec = *spec_;
    const auto& dom = spec.dom;
    Result out;
    ScalarField r = flux_divergence(dom, b, t);
    for (const auto& c : dom.cells()) r(c.i, c.j) -= target_(c.i, c.j);
    ScalarField psi = solve_normal(r);
    VectorField db;
    FaceData dt;
    apply_A(psi, db, dt);
    out.b = b;
    out.t.assign(t.begin(), t.end());
    for (const auto& c : dom.cells()) {
      const std::size_t k = dom.flat(c);
      out.b[k] += db[k];
      out.correction = std::max({out.correction, std::abs(db[k].x), std::abs(db[k].y)});
    }
    for (std::size_t f = 0; f < out.t.size(); ++f) {
      out.t[f] += dt[f];
      out.correction = std::max(out.correction, std::abs(dt[f]));
    }
    const double s = ball_gauge(out.b, out.t);
    if (s <= 1.0) {
      out.feasible = true;
      out.value = value(out.b, out.t);
    }
    if (s <= 1.0) return out;
    // Blend with the admissible references; keep whichever scores best.
    std::optional<Result> pick;
    auto blend_with = [&](const VectorField& rb, const FaceData& rt, double rho) {
      if (!(rho <= 1.0)) return;
      const double lam = (1.0 - rho) / (s - rho);
      Result cand;
      cand.b = rb;
      cand.t = rt;
      for (const auto& c : dom.cells()) {
        const std::size_t k = dom.flat(c);
        cand.b[k] = lam * out.b[k] + (1.0 - lam) * rb[k];
      }
      for (std::size_t f = 0; f < cand.t.size(); ++f) cand.t[f] = lam * out.t[f] + (1.0 - lam) * rt[f];
      cand.value = value(cand.b, cand.t);
      cand.feasible = true;
      cand.correction = out.correction;
      cand.blend = lam;
      if (!pick || cand.value > pick->value) pick = std::move(cand);
    };
    blend_with(b0_, t0_, rho_);
    if (best && best->feasible) blend_with(best->b, best->t, ball_gauge(best->b, best->t));
    return pick ? std::move(*pick) : out;
  }

  /// <F,b> + sum t_f g_f h.
  double value(const VectorField& b, std::span<const double> t) const {
    const auto& spec = *spec_;
    const auto& dom = spec.dom;
    double v = inner(dom, spec.drift, b);
    if (spec.dirichlet()) {
      double s = 0.0;
      for (std::size_t f = 0; f < t.size(); ++f) s += t[f] * spec.bc.f[f];
      v += s * dom.h();
    }
    return v;
  }

  /// Largest dual-ball gauge over cells and faces; ≤ 1 means feasible.
  double ball_gauge(const VectorField& b, std::span<const double> t) const {
    const auto& spec = *spec_;
    double s = 0.0;
    for (const auto& c : spec.dom.cells()) {
      const std::size_t k = spec.dom.flat(c);
      s = std::max(s, spec.norm.phi_dual_unchecked(k, b[k]));
    }
    for (std::size_t f = 0; f < t.size(); ++f) s = std::max(s, std::abs(t[f]) / face_w_[f]);
    return s;
  }

 private:
  // A ψ = (∇ψ, -ψ_c/h per face); the second part only under Dirichlet.
  void apply_A(const ScalarField& psi, VectorField& b, FaceData& t) const {
    const auto& dom = spec_->dom;
    b = gradient(dom, psi);
    t.clear();
    if (spec_->dirichlet()) {
      t.resize(dom.face_count());
      const auto& faces = dom.boundary_faces();
      for (std::size_t f = 0; f < faces.size(); ++f) t[f] = -psi(faces[f].cell.i, faces[f].cell.j) / dom.h();
    }
  }

  // A*A ψ = -div(Aψ).
  ScalarField apply_normal(const ScalarField& psi) const {
    VectorField b;
    FaceData t;
    apply_A(psi, b, t);
    ScalarField d = flux_divergence(spec_->dom, b, t);
    for (auto& v : d.values()) v = -v;
    return d;
  }

  // Conjugate gradients on A*A ψ = r (restricted to mean-zero fields under Neumann).
  ScalarField solve_normal(ScalarField r) const {
    const auto& dom = spec_->dom;
    const bool neumann = !spec_->dirichlet();
    if (neumann) subtract_mean(dom, r);
    ScalarField x = dom.scalar();
    ScalarField p = r;
    double rr = inner(dom, r, r);
    const double stop = rr * 1e-30;
    const int max_it = 4 * static_cast<int>(dom.cell_count()) + 20;
    for (int it = 0; it < max_it && rr > stop && rr > 0.0; ++it) {
      ScalarField Ap = apply_normal(p);
      const double pAp = inner(dom, p, Ap);
      if (!(pAp > 0.0)) break;
      const double a = rr / pAp;
      for (const auto& c : dom.cells()) {
        const std::size_t k = dom.flat(c);
        x[k] += a * p[k];
        r[k] -= a * Ap[k];
      }
      if (neumann) subtract_mean(dom, r);
      const double rr_new = inner(dom, r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (const auto& c : dom.cells()) {
        const std::size_t k = dom.flat(c);
        p[k] = r[k] + beta * p[k];
      }
    }
    return x;
  }

  const ProblemSpec* spec_;
  ScalarField target_;
  FaceData face_w_;
  VectorField b0_;
  FaceData t0_;
  double rho_ = 0.0;
};

// Gap ---------------------------------------------------------------------------------

struct GapValue {
  double primal = 0.0;
  double dual = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  bool dual_feasible = false;
  double repair = 0.0;
};

inline GapValue duality_gap(const PrimalDualState& s, const ProblemSpec& spec, const DualRepair& rep) {
  GapValue g;
  g.primal = energy_primal(spec, s.u);
  const auto r = rep.repair(s.b, s.t);
  g.dual_feasible = r.feasible;
  g.dual = r.value;
  g.repair = r.correction;
  g.gap = g.primal - g.dual;
  return g;
}

inline GapValue duality_gap(const PrimalDualState& s, const ProblemSpec& spec) {
  const DualRepair rep(spec);
  return duality_gap(s, spec, rep);
}

// Residuals -----------------------------------------------------------------------------

struct FeasibilityResiduals {
  double div_residual = 0.0;
  double trace_residual = 0.0;
};

/// Neumann: ‖divK b - (H - H̄)‖∞ and max |[b,ν]|. Dirichlet: ‖div(b,t) - H‖∞
/// and max |t_f| (reported only). An empty t under Dirichlet means the face
/// fluxes are N·ν.
inline FeasibilityResiduals dual_feasibility_residuals(const VectorField& b, const ProblemSpec& spec,
                                                       std::span<const double> t = {}) {
  const auto& dom = spec.dom;
  FeasibilityResiduals r;
  const ScalarField T = dual_divergence_target(spec);
  ScalarField d;
  FaceData trace;
  if (spec.dirichlet()) {
    trace = t.empty() ? normal_flux(dom, b) : FaceData(t.begin(), t.end());
    d = flux_divergence(dom, b, trace);
  } else {
    d = masked_divergence(dom, b);
    trace = boundary_trace_normal(dom, b);
  }
  for (const auto& c : dom.cells()) r.div_residual = std::max(r.div_residual, std::abs(d(c.i, c.j) - T(c.i, c.j)));
  for (double v : trace) r.trace_residual = std::max(r.trace_residual, std::abs(v));
  return r;
}

// Solve ---------------------------------------------------------------------------------

struct SolveReport {
  bool certified = false;
  bool diverging = false;
  bool dual_feasible = false;
  long iterations = 0;
  double primal = 0.0;  // best primal energy of the original problem
  double dual = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  double rel_gap = std::numeric_limits<double>::infinity();
  double repair = 0.0;
  double energy_constant = 0.0;  // Dirichlet substitution constant
  FeasibilityResiduals residuals;
  ExistenceCheck existence;
  std::vector<GapRecord> gap_history;
};

struct SolveResult {
  ScalarField u;   // minimizer of the original problem
  VectorField N;   // exactly feasible dual field
  FaceData N_faces;  // Dirichlet face fluxes [N,ν]
  ProblemSpec working;  // problem actually iterated (zero-shifted for Dirichlet)
  SolveReport report;
};

inline SolveResult solve(const ProblemSpec& spec_in, const SolverParams& params_in, PrimalDualState* warm = nullptr) {
  spec_in.validate();
  const SolverParams params = params_in.resolved(spec_in.dom);
  SolveResult res;
  res.report.existence = existence_condition_check(spec_in, params.poincare);

  ScalarField ext;
  if (spec_in.dirichlet()) {
    ProblemSpec with_ext = spec_in;
    if (!with_ext.f_extension) with_ext.f_extension = nearest_boundary_extension(spec_in.dom, spec_in.bc.f);
    auto sub = substitute_dirichlet(with_ext);
    res.working = std::move(sub.shifted);
    res.report.energy_constant = sub.constant;
    ext = std::move(sub.extension);
  } else {
    res.working = spec_in;
  }
  const ProblemSpec& spec = res.working;
  const auto& dom = spec.dom;

  PrimalDualState s = warm ? *warm : PrimalDualState::zeros(spec);
  if (!spec.dirichlet()) {
    subtract_mean(dom, s.u);
    s.u_bar = s.u;
  }
  const DualRepair rep(spec);

  double best_primal = std::numeric_limits<double>::infinity();
  ScalarField best_u = s.u;
  DualRepair::Result best_dual;
  auto check = [&]() {
    const double primal = energy_primal(spec, s.u);
    if (primal < best_primal) {
      best_primal = primal;
      best_u = s.u;
    }
    auto r = rep.repair(s.b, s.t, best_dual.feasible ? &best_dual : nullptr);
    if (r.feasible && (!best_dual.feasible || r.value > best_dual.value)) best_dual = std::move(r);
    GapRecord g;
    g.iter = s.iter;
    g.primal = primal;
    g.dual = r.feasible ? r.value : -std::numeric_limits<double>::infinity();
    g.gap = primal - g.dual;
    g.best_primal = best_primal;
    g.best_dual = best_dual.value;
    g.rel_gap = (best_primal - best_dual.value) / std::max(1.0, std::abs(best_primal));
    s.gap_history.push_back(g);
    res.report.repair = std::max(res.report.repair, best_dual.feasible ? best_dual.correction : 0.0);
    return g.rel_gap <= params.tol_gap;
  };

  bool done = check();
  while (!done && s.iter < params.max_iter) {
    pdhg_step(s, spec, params);
    if (s.iter % params.gap_check_stride == 0 || s.iter == params.max_iter) done = check();
  }

  auto& rp = res.report;
  rp.iterations = s.iter;
  rp.primal = best_primal + rp.energy_constant;
  rp.dual_feasible = best_dual.feasible;
  rp.dual = best_dual.value + rp.energy_constant;
  rp.gap = best_primal - best_dual.value;
  rp.rel_gap = rp.gap / std::max(1.0, std::abs(best_primal));
  rp.certified = rp.dual_feasible && rp.rel_gap <= params.tol_gap;
  rp.gap_history = s.gap_history;

  // Unbounded below: no feasible dual exists and the energy keeps falling.
  if (!rp.certified && s.gap_history.size() >= 4) {
    const auto& hist = s.gap_history;
    const double mid = hist[hist.size() / 2].primal;
    const double last = hist.back().primal;
    rp.diverging = !rp.dual_feasible && last < mid - 1e-3 * std::max(1.0, std::abs(mid));
  }

  res.u = best_u;
  if (spec_in.dirichlet())
    for (const auto& c : dom.cells()) res.u(c.i, c.j) += ext(c.i, c.j);
  if (best_dual.feasible) {
    res.N = best_dual.b;
    res.N_faces = best_dual.t;
  } else {
    res.N = s.b;
    res.N_faces = s.t;
  }
  rp.residuals = dual_feasibility_residuals(res.N, spec, res.N_faces);
  if (warm) *warm = std::move(s);
  return res;
}

}  // namespace plg
