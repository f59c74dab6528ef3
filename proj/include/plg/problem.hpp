#pragma once

/// \file
/// Problem data and energy evaluation for
///
///   I(u) = sum_cells φ(x, ∇u + F) h² + sum_cells H u h²
///          [+ sum_faces φ(x, ν) |f - u_c| h   under Dirichlet data f]
///
/// The Dirichlet face term is the relaxed boundary penalty; on a grid it is
/// what the per-face ghost extension produces. Neumann problems live on
/// mean-zero fields; energies subtract the mean before evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "plg/field.hpp"
#include "plg/grid.hpp"
#include "plg/norm.hpp"

namespace plg {

enum class BoundaryKind { Neumann, Dirichlet };

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::Neumann;
  FaceData f;  // Dirichlet data per boundary face; empty for Neumann

  static BoundaryCondition neumann() { return {}; }
  static BoundaryCondition dirichlet(FaceData f) { return {BoundaryKind::Dirichlet, std::move(f)}; }
  bool is_dirichlet() const { return kind == BoundaryKind::Dirichlet; }
};

struct ProblemSpec {
  GridDomain dom;
  NormSpec norm;
  VectorField drift;   // F, units 1/length
  ScalarField source;  // H
  BoundaryCondition bc;
  /// Interior extension of the Dirichlet data used by substitute_dirichlet.
  std::optional<ScalarField> f_extension;

  bool dirichlet() const { return bc.is_dirichlet(); }

  /// Throws on shape mismatch or non-finite data.
  void validate() const {
    require_shape(dom, norm.nx(), norm.ny(), "norm field");
    require_shape(dom, drift.nx(), drift.ny(), "drift F");
    require_shape(dom, source.nx(), source.ny(), "source H");
    for (const auto& c : dom.cells()) {
      if (!is_finite(drift(c.i, c.j))) throw InputError("drift F is not finite on the mask");
      if (!std::isfinite(source(c.i, c.j))) throw InputError("source H is not finite on the mask");
    }
    if (bc.is_dirichlet()) {
      if (bc.f.size() != dom.face_count())
        throw InputError("Dirichlet data has " + std::to_string(bc.f.size()) + " values, domain has " +
                         std::to_string(dom.face_count()) + " boundary faces");
      for (double v : bc.f)
        if (!std::isfinite(v)) throw InputError("Dirichlet data is not finite");
    }
    if (f_extension) require_shape(dom, f_extension->nx(), f_extension->ny(), "f_extension");
  }

  /// φ(x, ν) for every boundary face (norm of the owning interior cell).
  FaceData face_norms() const {
    FaceData w(dom.face_count());
    const auto& faces = dom.boundary_faces();
    for (std::size_t k = 0; k < faces.size(); ++k) w[k] = norm.phi_unchecked(dom.flat(faces[k].cell), faces[k].normal);
    return w;
  }
};

/// Problem with zero fields and uniform unit weight; convenient starting point.
inline ProblemSpec make_problem(GridDomain dom, NormSpec norm, BoundaryCondition bc = BoundaryCondition::neumann()) {
  ProblemSpec p{dom, std::move(norm), dom.vector(), dom.scalar(), std::move(bc), std::nullopt};
  p.validate();
  return p;
}

// Energies --------------------------------------------------------------------

struct EnergyBreakdown {
  double bulk = 0.0;      // sum φ(x, ∇u + F) h²
  double boundary = 0.0;  // sum φ(x, ν)|f - u_c| h   (Dirichlet only)
  double source = 0.0;    // sum H u h²
  double total = 0.0;
  double mean_removed = 0.0;  // Neumann: mean subtracted from u before evaluation
};

inline EnergyBreakdown energy_breakdown(const ProblemSpec& spec, const ScalarField& u_in) {
  const auto& dom = spec.dom;
  require_shape(dom, u_in.nx(), u_in.ny(), "u");
  EnergyBreakdown e;
  const ScalarField* up = &u_in;
  ScalarField shifted;
  if (!spec.dirichlet()) {
    e.mean_removed = mean(dom, u_in);
    if (e.mean_removed != 0.0) {
      shifted = u_in;
      subtract_mean(dom, shifted);
      up = &shifted;
    }
  }
  const ScalarField& u = *up;
  const VectorField g = gradient(dom, u);
  for (const auto& c : dom.cells()) {
    const std::size_t k = dom.flat(c);
    e.bulk += spec.norm.phi_unchecked(k, g[k] + spec.drift[k]);
    e.source += spec.source[k] * u[k];
  }
  e.bulk *= dom.cell_area();
  e.source *= dom.cell_area();
  if (spec.dirichlet()) {
    const FaceData w = spec.face_norms();
    const auto& faces = dom.boundary_faces();
    for (std::size_t k = 0; k < faces.size(); ++k) e.boundary += w[k] * std::abs(spec.bc.f[k] - u(faces[k].cell.i, faces[k].cell.j));
    e.boundary *= dom.h();
  }
  e.total = e.bulk + e.boundary + e.source;
  if (!std::isfinite(e.total)) throw InputError("energy is not finite");
  return e;
}

inline double energy_primal(const ProblemSpec& spec, const ScalarField& u) { return energy_breakdown(spec, u).total; }

// Weak-duality pairing ------------------------------------------------------------

/// Cells within two layers of the boundary: boundary cells and their mask neighbours.
inline std::vector<std::uint8_t> boundary_band(const GridDomain& dom, int layers = 2) {
  std::vector<std::uint8_t> band(dom.mask().size(), 0);
  std::vector<CellIndex> front;
  for (const auto& c : dom.cells())
    if (dom.is_boundary_cell(c)) {
      band[dom.flat(c)] = 1;
      front.push_back(c);
    }
  for (int l = 1; l < layers; ++l) {
    std::vector<CellIndex> next;
    for (const auto& c : front)
      for (FaceDir d : kFaceDirs) {
        const CellIndex n = neighbor(c, d);
        if (dom.in_mask(n) && !band[dom.flat(n)]) {
          band[dom.flat(n)] = 1;
          next.push_back(n);
        }
      }
    front = std::move(next);
  }
  return band;
}

/// sum (u div Y - Y·F) h² for compactly supported dual-feasible Y; a lower
/// bound for the φ-part of the energy.
inline double pairing_lower_bound(const ProblemSpec& spec, const ScalarField& u, const VectorField& Y) {
  const auto& dom = spec.dom;
  require_shape(dom, Y.nx(), Y.ny(), "Y");
  require_shape(dom, u.nx(), u.ny(), "u");
  const auto band = boundary_band(dom, 2);
  for (const auto& c : dom.cells()) {
    const std::size_t k = dom.flat(c);
    if (band[k] && (Y[k].x != 0.0 || Y[k].y != 0.0))
      throw PreconditionError("Y must vanish on the two cell layers adjacent to the boundary");
    if (spec.norm.phi_dual_unchecked(k, Y[k]) > 1.0 + 1e-9) throw PreconditionError("Y violates phi_dual(x, Y) <= 1");
  }
  const ScalarField dY = divergence(dom, Y);
  double s = 0.0;
  for (const auto& c : dom.cells()) {
    const std::size_t k = dom.flat(c);
    s += u[k] * dY[k] - dot(Y[k], spec.drift[k]);
  }
  return s * dom.cell_area();
}

// Drift presets ------------------------------------------------------------------

/// X*(p) = (p_y, -p_x) for a point p relative to the mask centroid.
constexpr Vec2 heisenberg_drift_at(Vec2 p) { return {p.y, -p.x}; }

inline VectorField heisenberg_drift(const GridDomain& dom) {
  VectorField F = dom.vector();
  const Vec2 o = dom.centroid();
  for (const auto& c : dom.cells()) F(c.i, c.j) = heisenberg_drift_at(dom.center(c) - o);
  return F;
}

// Dirichlet substitution --------------------------------------------------------------

/// Each mask cell takes the value of the nearest boundary-face midpoint
/// (first face in canonical order on ties).
inline ScalarField nearest_boundary_extension(const GridDomain& dom, std::span<const double> f) {
  if (f.size() != dom.face_count()) throw InputError("Dirichlet data size differs from boundary face count");
  ScalarField ext = dom.scalar();
  const auto& faces = dom.boundary_faces();
  for (const auto& c : dom.cells()) {
    const Vec2 x = dom.center(c);
    double best = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (std::size_t k = 0; k < faces.size(); ++k) {
      const Vec2 d = dom.face_midpoint(faces[k]) - x;
      const double r = dot(d, d);
      if (r < best) {
        best = r;
        value = f[k];
      }
    }
    ext(c.i, c.j) = value;
  }
  return ext;
}

struct SubstitutedProblem {
  ProblemSpec shifted;    // drift F + ∇f_ext, face data f - f_ext(c), zero extension
  double constant = 0.0;  // sum H f_ext h²
  ScalarField extension;
};

/// u ↦ v = u - f_ext maps the Dirichlet problem onto one with drift
/// F̃ = F + ∇f_ext and residual face data f - f_ext(c):
///   energy(spec, u) = energy(shifted, u - f_ext) + constant.
inline SubstitutedProblem substitute_dirichlet(const ProblemSpec& spec) {
  if (!spec.dirichlet()) throw UsageError("substitute_dirichlet needs a Dirichlet problem");
  if (!spec.f_extension) throw InputError("Dirichlet problem has no f_extension");
  const auto& dom = spec.dom;
  const ScalarField& ext = *spec.f_extension;
  SubstitutedProblem out{spec, 0.0, ext};
  const VectorField g = gradient(dom, ext);
  for (const auto& c : dom.cells()) {
    const std::size_t k = dom.flat(c);
    out.shifted.drift[k] = spec.drift[k] + g[k];
    out.constant += spec.source[k] * ext[k];
  }
  out.constant *= dom.cell_area();
  const auto& faces = dom.boundary_faces();
  for (std::size_t k = 0; k < faces.size(); ++k) out.shifted.bc.f[k] = spec.bc.f[k] - ext(faces[k].cell.i, faces[k].cell.j);
  out.shifted.f_extension = dom.scalar();
  return out;
}

// Existence condition -------------------------------------------------------------------

struct PoincareOptions {
  int trials = 200;
  std::uint64_t seed = 7;
};

struct ExistenceCheck {
  bool satisfied = false;
  double margin = 0.0;     // β / C_Ω - ‖H‖∞
  double c_omega = 0.0;    // max(c_search, c_analytic)
  double c_search = 0.0;
  double c_analytic = 0.0;
  double h_inf = 0.0;
  double threshold = 0.0;  // β / C_Ω
};

namespace detail {

/// ‖v‖₁ / ‖Dv‖₁ for the discrete Poincaré inequality. Neumann: v is made
/// mean-zero, Dv is the interior gradient. Dirichlet: v is compared with zero
/// exterior data, so Dv includes the boundary jumps.
inline double poincare_ratio(const GridDomain& dom, const ScalarField& v_in, bool dirichlet) {
  ScalarField v = v_in;
  if (!dirichlet) subtract_mean(dom, v);
  const VectorField g = gradient(dom, v);
  double num = 0.0, den = 0.0;
  for (const auto& c : dom.cells()) {
    const std::size_t k = dom.flat(c);
    num += std::abs(v[k]);
    den += norm2(g[k]);
  }
  num *= dom.cell_area();
  den *= dom.cell_area();
  if (dirichlet)
    for (const auto& f : dom.boundary_faces()) den += std::abs(v(f.cell.i, f.cell.j)) * dom.h();
  return den > 0.0 ? num / den : 0.0;
}

/// Best two-valued (indicator) field among the super-level sets of v.
inline double best_levelset_ratio(const GridDomain& dom, const ScalarField& v, bool dirichlet) {
  std::vector<double> levels;
  levels.reserve(dom.cell_count());
  for (const auto& c : dom.cells()) levels.push_back(v(c.i, c.j));
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  double best = 0.0;
  ScalarField ind = dom.scalar();
  const std::size_t stride = std::max<std::size_t>(1, levels.size() / 64);
  for (std::size_t l = 1; l < levels.size(); l += stride) {
    for (const auto& c : dom.cells()) ind(c.i, c.j) = v(c.i, c.j) >= levels[l] ? 1.0 : 0.0;
    best = std::max(best, poincare_ratio(dom, ind, dirichlet));
  }
  return best;
}

}  // namespace detail

/// Power-style search for the discrete Poincaré constant: random smooth
/// fields are pushed through a few smoothing sweeps (which raise the ratio)
/// and their level-set indicators are scored as well.
inline double estimate_poincare_constant(const GridDomain& dom, bool dirichlet, const PoincareOptions& opt = {}) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_int_distribution<int> modes(1, 3);
  const double Lx = dom.nx() * dom.h(), Ly = dom.ny() * dom.h();
  double best = 0.0;
  for (int t = 0; t < opt.trials; ++t) {
    ScalarField v = dom.scalar();
    const int m = modes(rng);
    for (int q = 0; q < m; ++q) {
      const double kx = std::floor(3.0 * std::abs(U(rng))), ky = std::floor(3.0 * std::abs(U(rng)));
      const double amp = U(rng), phase = std::numbers::pi * U(rng);
      for (const auto& c : dom.cells()) {
        const Vec2 x = dom.center(c);
        v(c.i, c.j) += amp * std::cos(std::numbers::pi * (kx * x.x / Lx + ky * x.y / Ly) + phase);
      }
    }
    for (int sweep = 0; sweep < 4; ++sweep) {
      best = std::max(best, detail::poincare_ratio(dom, v, dirichlet));
      best = std::max(best, detail::best_levelset_ratio(dom, v, dirichlet));
      ScalarField d = masked_divergence(dom, gradient(dom, v));
      const double step = 0.2 * dom.cell_area();
      for (const auto& c : dom.cells()) v(c.i, c.j) += step * d(c.i, c.j);
    }
  }
  return best;
}

/// Sufficient condition ‖H‖∞ < β / C_Ω for coercivity. C_Ω is the larger of
/// the search estimate and diam/2 of the mask's bounding box.
inline ExistenceCheck existence_condition_check(const ProblemSpec& spec, const PoincareOptions& opt = {}) {
  ExistenceCheck r;
  r.c_search = estimate_poincare_constant(spec.dom, spec.dirichlet(), opt);
  r.c_analytic = 0.5 * spec.dom.bounding_diameter();
  r.c_omega = std::max(r.c_search, r.c_analytic);
  for (const auto& c : spec.dom.cells()) r.h_inf = std::max(r.h_inf, std::abs(spec.source(c.i, c.j)));
  r.threshold = spec.norm.beta() / r.c_omega;
  r.margin = r.threshold - r.h_inf;
  r.satisfied = r.h_inf < r.threshold;
  return r;
}

}  // namespace plg
