#pragma once

/// \file
/// Independent optimality checks for a primal/dual pair (u, N).
///
/// For an exactly feasible dual pair the gap splits into non-negative local
/// terms,
///   primal - dual = sum_cells [φ(x,w) - N·w] h² + sum_faces [φ(x,ν)|j| - t j] h²,
/// with w = ∇u + F and j = (f - u_c)/h, so each local defect is bounded by
/// gap / weight. Activity thresholds can use that bound (gap_aware) so that a
/// near-optimal pair is only judged where the gap resolves the identity.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "plg/field.hpp"
#include "plg/grid.hpp"
#include "plg/problem.hpp"
#include "plg/solver.hpp"

namespace plg {

struct Tolerances {
  double gap = 1e-4;           // relative gap
  double feasibility = 1e-9;   // max φ⁰(N) - 1
  double divergence = 1e-6;
  double trace = 1e-3;         // Neumann only
  double structure = 1e-3;
  double boundary = 1e-2;
  double eps_active_rel = 1e-6;  // activity threshold relative to the field max
  bool gap_aware = true;
};

/// max φ⁰(x,N) - 1 over cells, and |t_f|/φ(x,ν) - 1 over faces when given.
inline double check_dual_feasible(const VectorField& N, const ProblemSpec& spec, std::span<const double> faces = {}) {
  const auto& dom = spec.dom;
  require_shape(dom, N.nx(), N.ny(), "N");
  double s = 0.0;
  for (const auto& c : dom.cells()) s = std::max(s, spec.norm.phi_dual(c, N(c.i, c.j)));
  if (!faces.empty()) {
    const FaceData w = spec.face_norms();
    for (std::size_t f = 0; f < faces.size() && f < w.size(); ++f) s = std::max(s, std::abs(faces[f]) / w[f]);
  }
  return s - 1.0;
}

struct StructureCheck {
  double defect = 0.0;
  std::size_t active_cells = 0;
  CellIndex worst{-1, -1};
};

/// Max of φ(x,d) - N·d with d = w/|w|, w = ∇u + F, over cells where |w| > eps_active.
inline StructureCheck check_structure(const ScalarField& u, const VectorField& N, const ProblemSpec& spec,
                                      double eps_active) {
  const auto& dom = spec.dom;
  require_shape(dom, N.nx(), N.ny(), "N");
  const VectorField g = gradient(dom, u);
  StructureCheck r;
  for (const auto& c : dom.cells()) {
    const std::size_t k = dom.flat(c);
    const Vec2 w = g[k] + spec.drift[k];
    const double m = norm2(w);
    if (!(m > eps_active)) continue;
    const Vec2 d = w / m;
    const double defect = spec.norm.phi_unchecked(k, d) - dot(N[k], d);
    if (r.active_cells == 0 || defect > r.defect) {
      r.defect = defect;
      r.worst = c;
    }
    ++r.active_cells;
  }
  return r;
}

struct BoundaryContactCheck {
  double defect = 0.0;
  std::size_t detached_faces = 0;
  int worst_face = -1;
};

/// Over faces where the data are not attained (|f - u_c| > eps_active):
/// max |φ(x,ν) - sign(f - u_c) t_f|. Faces with f = u_c are skipped.
inline BoundaryContactCheck check_boundary_contact(const ScalarField& u, std::span<const double> t,
                                                   const ProblemSpec& spec, double eps_active) {
  if (!spec.dirichlet()) throw UsageError("boundary contact is only defined for Dirichlet problems");
  const auto& dom = spec.dom;
  require_shape(dom, u.nx(), u.ny(), "u");
  if (t.size() != dom.face_count()) throw InputError("face flux count differs from boundary face count");
  const FaceData w = spec.face_norms();
  const auto& faces = dom.boundary_faces();
  BoundaryContactCheck r;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const double jump = spec.bc.f[f] - u(faces[f].cell.i, faces[f].cell.j);
    if (!(std::abs(jump) > eps_active)) continue;
    const double sgn = jump > 0.0 ? 1.0 : -1.0;
    const double defect = std::abs(w[f] - sgn * t[f]);
    if (r.detached_faces == 0 || defect > r.defect) {
      r.defect = defect;
      r.worst_face = static_cast<int>(f);
    }
    ++r.detached_faces;
  }
  return r;
}

/// Convenience overload taking the face fluxes as N·ν.
inline BoundaryContactCheck check_boundary_contact(const ScalarField& u, const VectorField& N, const ProblemSpec& spec,
                                                   double eps_active) {
  if (!spec.dirichlet()) throw UsageError("boundary contact is only defined for Dirichlet problems");
  return check_boundary_contact(u, normal_flux(spec.dom, N), spec, eps_active);
}

struct Certificate {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double rel_gap = 0.0;
  double dual_feasibility_max = 0.0;
  double div_residual = 0.0;
  double trace_residual = 0.0;
  double alignment_defect = 0.0;
  double boundary_contact_defect = 0.0;
  std::size_t active_cell_count = 0;
  std::size_t detached_face_count = 0;
  double eps_active_cells = 0.0;
  double eps_active_faces = 0.0;
  bool certified = false;
  std::vector<std::string> failures;  // names of the fields that exceed their tolerance
};

/// Runs every check on (u, N[, N_faces]) for the problem as given (Dirichlet
/// problems in their original variables).
inline Certificate certify(const ScalarField& u, const VectorField& N, const ProblemSpec& spec, const Tolerances& tol = {},
                           std::span<const double> N_faces = {}) {
  spec.validate();
  const auto& dom = spec.dom;
  require_shape(dom, u.nx(), u.ny(), "u");
  require_shape(dom, N.nx(), N.ny(), "N");
  FaceData t;
  if (spec.dirichlet()) {
    if (N_faces.empty())
      t = normal_flux(dom, N);
    else if (N_faces.size() != dom.face_count())
      throw InputError("face flux count differs from boundary face count");
    else
      t.assign(N_faces.begin(), N_faces.end());
  }

  Certificate cert;
  cert.primal = energy_primal(spec, u);
  const DualRepair values(spec);
  cert.dual = values.value(N, t);
  cert.gap = cert.primal - cert.dual;
  cert.rel_gap = cert.gap / std::max(1.0, std::abs(cert.primal));
  cert.dual_feasibility_max = check_dual_feasible(N, spec, t);
  const auto res = dual_feasibility_residuals(N, spec, t);
  cert.div_residual = res.div_residual;
  cert.trace_residual = res.trace_residual;

  ScalarField uc = u;
  if (!spec.dirichlet()) subtract_mean(dom, uc);
  const VectorField g = gradient(dom, uc);
  double wmax = 0.0;
  for (const auto& c : dom.cells()) wmax = std::max(wmax, norm2(g(c.i, c.j) + spec.drift(c.i, c.j)));
  const double slack = std::max(cert.gap, 0.0);
  cert.eps_active_cells = tol.eps_active_rel * wmax;
  if (tol.gap_aware) cert.eps_active_cells = std::max(cert.eps_active_cells, slack / (dom.area() * tol.structure));
  const auto st = check_structure(uc, N, spec, cert.eps_active_cells);
  cert.alignment_defect = st.defect;
  cert.active_cell_count = st.active_cells;

  if (spec.dirichlet()) {
    double jmax = 0.0;
    const auto& faces = dom.boundary_faces();
    for (std::size_t f = 0; f < faces.size(); ++f)
      jmax = std::max(jmax, std::abs(spec.bc.f[f] - u(faces[f].cell.i, faces[f].cell.j)));
    cert.eps_active_faces = tol.eps_active_rel * jmax;
    if (tol.gap_aware) cert.eps_active_faces = std::max(cert.eps_active_faces, slack / (dom.h() * static_cast<double>(std::max<std::size_t>(1, dom.face_count())) * tol.boundary));
    const auto bc = check_boundary_contact(u, t, spec, cert.eps_active_faces);
    cert.boundary_contact_defect = bc.defect;
    cert.detached_face_count = bc.detached_faces;
  }

  auto require = [&](bool ok, const char* name) {
    if (!ok) cert.failures.emplace_back(name);
  };
  require(cert.gap >= -1e-9, "gap");
  require(cert.rel_gap <= tol.gap, "rel_gap");
  require(cert.dual_feasibility_max <= tol.feasibility, "dual_feasibility_max");
  require(cert.div_residual <= tol.divergence, "div_residual");
  if (!spec.dirichlet()) require(cert.trace_residual <= tol.trace, "trace_residual");
  require(cert.alignment_defect <= tol.structure, "alignment_defect");
  if (spec.dirichlet()) require(cert.boundary_contact_defect <= tol.boundary, "boundary_contact_defect");
  cert.certified = cert.failures.empty();
  return cert;
}

}  // namespace plg
