#pragma once

/// \file
/// Sets of cells, their ψ-perimeter
///
///   P_ψ(E; A) = |Dχ_E|_φ(A) + sum_{c in E} (φ(c, F) + H) h²,
///
/// super-level sets and truncations of fields, exhaustive local minimality
/// checks and the barrier-condition checker.
///
/// The jump part of Dχ_E lives on faces and the drift part on cells; the two
/// measures are mutually singular, so φ applies to each separately. A face
/// between mask cells is weighted with the norm of its lower/left cell, a
/// boundary face with the norm of its interior cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "plg/field.hpp"
#include "plg/grid.hpp"
#include "plg/problem.hpp"

namespace plg {

/// Largest number of free cells an exhaustive set enumeration accepts (2^16 states).
inline constexpr std::size_t kMaxFreeCells = 16;

enum class Region { omega, all };

/// A set of mask cells plus the membership of the exterior ghost behind each
/// boundary face (only read for Region::all).
struct CellSet {
  Field<std::uint8_t> indicator;
  std::vector<std::uint8_t> exterior;  // per boundary face

  static CellSet empty(const GridDomain& dom) {
    return {Field<std::uint8_t>(dom.nx(), dom.ny(), 0), std::vector<std::uint8_t>(dom.face_count(), 0)};
  }
  static CellSet full(const GridDomain& dom) {
    CellSet s = empty(dom);
    for (const auto& c : dom.cells()) s.indicator(c.i, c.j) = 1;
    return s;
  }

  bool contains(CellIndex c) const { return indicator.contains(c.i, c.j) && indicator(c.i, c.j) != 0; }
  void set(CellIndex c, bool in) { indicator(c.i, c.j) = in ? 1 : 0; }

  std::size_t count(const GridDomain& dom) const {
    std::size_t n = 0;
    for (const auto& c : dom.cells()) n += indicator(c.i, c.j) ? 1 : 0;
    return n;
  }

  friend bool operator==(const CellSet&, const CellSet&) = default;
};

/// Axis-aligned block of cells [i0, i0+w) x [j0, j0+hgt), clipped to the mask when used.
struct CellWindow {
  int i0 = 0;
  int j0 = 0;
  int w = 0;
  int hgt = 0;

  static CellWindow centered(CellIndex c, int half) { return {c.i - half, c.j - half, 2 * half + 1, 2 * half + 1}; }
  bool contains(CellIndex c) const { return c.i >= i0 && c.i < i0 + w && c.j >= j0 && c.j < j0 + hgt; }

  std::vector<CellIndex> cells(const GridDomain& dom) const {
    std::vector<CellIndex> out;
    for (const auto& c : dom.cells())
      if (contains(c)) out.push_back(c);
    return out;
  }
};

// ψ-perimeter -------------------------------------------------------------------------

inline double psi_perimeter(const CellSet& E, const ProblemSpec& spec, Region region) {
  const auto& dom = spec.dom;
  require_shape(dom, E.indicator.nx(), E.indicator.ny(), "cell set");
  double faces = 0.0, bulk = 0.0;
  for (const auto& c : dom.cells()) {
    const std::size_t k = dom.flat(c);
    const bool in = E.indicator[k] != 0;
    for (FaceDir d : {FaceDir::PlusX, FaceDir::PlusY}) {
      const CellIndex n = neighbor(c, d);
      if (dom.in_mask(n) && in != E.contains(n)) faces += spec.norm.phi_unchecked(k, outward_normal(d));
    }
    if (region == Region::all) {
      const auto& ids = dom.faces_of(c);
      for (FaceDir d : kFaceDirs) {
        const int f = ids[static_cast<int>(d)];
        if (f < 0) continue;
        const bool out = !E.exterior.empty() && E.exterior[static_cast<std::size_t>(f)] != 0;
        if (in != out) faces += spec.norm.phi_unchecked(k, outward_normal(d));
      }
    }
    if (in) bulk += spec.norm.phi_unchecked(k, spec.drift[k]) + spec.source[k];
  }
  return faces * dom.h() + bulk * dom.cell_area();
}

// Level sets ---------------------------------------------------------------------------

/// {u ≥ λ} over mask cells. Under Dirichlet data the exterior ghosts follow {f ≥ λ}.
inline CellSet superlevel(const GridDomain& dom, const ScalarField& u, double lambda, std::span<const double> f = {}) {
  require_shape(dom, u.nx(), u.ny(), "u");
  CellSet E = CellSet::empty(dom);
  for (const auto& c : dom.cells()) E.set(c, u(c.i, c.j) >= lambda);
  for (std::size_t k = 0; k < f.size() && k < E.exterior.size(); ++k) E.exterior[k] = f[k] >= lambda ? 1 : 0;
  return E;
}

inline CellSet superlevel(const ProblemSpec& spec, const ScalarField& u, double lambda) {
  return superlevel(spec.dom, u, lambda, spec.dirichlet() ? std::span<const double>(spec.bc.f) : std::span<const double>());
}

/// u1 = max(u - λ, 0), u2 = u - u1.
inline std::pair<ScalarField, ScalarField> truncate(const ScalarField& u, double lambda) {
  ScalarField u1 = u, u2 = u;
  for (std::size_t k = 0; k < u.size(); ++k) {
    u1[k] = std::max(u[k] - lambda, 0.0);
    u2[k] = u[k] - u1[k];
  }
  return {std::move(u1), std::move(u2)};
}

/// min(1, max(u - λ, 0) / ε).
inline ScalarField smoothed_indicator(const ScalarField& u, double lambda, double eps) {
  if (!(eps > 0.0)) throw InputError("smoothed_indicator needs eps > 0");
  ScalarField s = u;
  for (std::size_t k = 0; k < u.size(); ++k) s[k] = std::min(1.0, std::max(u[k] - lambda, 0.0) / eps);
  return s;
}

// Exhaustive local enumeration ---------------------------------------------------------------

namespace detail {

/// P_ψ restricted to the terms that change when only `free` cells flip.
/// Free cell k is bit (n-1-k) of the state, so increasing states visit
/// indicators in lexicographic (row-major) order.
class LocalEnumerator {
 public:
  LocalEnumerator(const ProblemSpec& spec, const CellSet& base, std::vector<CellIndex> free, Region region)
      : base_(base), free_(std::move(free)) {
    if (free_.size() > kMaxFreeCells)
      throw BudgetError("enumeration over " + std::to_string(free_.size()) + " cells exceeds the 16-cell cap");
    const auto& dom = spec.dom;
    const int n = static_cast<int>(free_.size());
    std::vector<int> slot(dom.mask().size(), -1);
    for (int k = 0; k < n; ++k) slot[dom.flat(free_[k])] = k;
    bulk_.resize(free_.size());
    for (int k = 0; k < n; ++k) {
      const CellIndex c = free_[k];
      const std::size_t fk = dom.flat(c);
      bulk_[k] = (spec.norm.phi_unchecked(fk, spec.drift[fk]) + spec.source[fk]) * dom.cell_area();
      const auto& ids = dom.faces_of(c);
      for (FaceDir d : kFaceDirs) {
        const CellIndex nb = neighbor(c, d);
        const Vec2 nu = outward_normal(d);
        if (dom.in_mask(nb)) {
          const int other = slot[dom.flat(nb)];
          if (other >= 0 && other < k) continue;  // counted from the other side
          const bool owner_is_c = d == FaceDir::PlusX || d == FaceDir::PlusY;
          const std::size_t owner = owner_is_c ? fk : dom.flat(nb);
          Face face{bit(k), other >= 0 ? bit(other) : 0u, other < 0 && base.contains(nb),
                    spec.norm.phi_unchecked(owner, nu) * dom.h()};
          faces_.push_back(face);
        } else if (region == Region::all) {
          const int f = ids[static_cast<int>(d)];
          const bool out = !base.exterior.empty() && base.exterior[static_cast<std::size_t>(f)] != 0;
          faces_.push_back({bit(k), 0u, out, spec.norm.phi_unchecked(fk, nu) * dom.h()});
        }
      }
    }
    base_state_ = 0;
    for (int k = 0; k < n; ++k)
      if (base.contains(free_[k])) base_state_ |= bit(k);
    offset_ = psi_perimeter(base, spec, region) - local(base_state_);
  }

  std::uint32_t states() const { return 1u << free_.size(); }
  std::uint32_t base_state() const { return base_state_; }

  double local(std::uint32_t s) const {
    double e = 0.0;
    for (const auto& f : faces_) {
      const bool a = (s & f.a) != 0;
      const bool b = f.b ? (s & f.b) != 0 : f.fixed_in;
      if (a != b) e += f.w;
    }
    for (std::size_t k = 0; k < free_.size(); ++k)
      if (s & bit(static_cast<int>(k))) e += bulk_[k];
    return e;
  }
  double value(std::uint32_t s) const { return offset_ + local(s); }

  CellSet materialize(std::uint32_t s) const {
    CellSet E = base_;
    for (std::size_t k = 0; k < free_.size(); ++k) E.set(free_[k], (s & bit(static_cast<int>(k))) != 0);
    return E;
  }

  bool member(std::uint32_t s, std::size_t k) const { return (s & bit(static_cast<int>(k))) != 0; }
  const std::vector<CellIndex>& free_cells() const { return free_; }

 private:
  struct Face {
    std::uint32_t a;
    std::uint32_t b;  // 0 when the other side is fixed
    bool fixed_in;
    double w;
  };
  std::uint32_t bit(int k) const { return 1u << (free_.size() - 1 - static_cast<std::size_t>(k)); }

  CellSet base_;
  std::vector<CellIndex> free_;
  std::vector<Face> faces_;
  std::vector<double> bulk_;
  std::uint32_t base_state_ = 0;
  double offset_ = 0.0;
};

}  // namespace detail

struct SetMinimum {
  CellSet set;
  double value = 0.0;
};

/// Exact minimizer of P_ψ(·; region) over sets agreeing with `fixed` outside
/// the window; ties go to the lexicographically smallest indicator.
inline SetMinimum brute_force_set_min(const ProblemSpec& spec, const CellSet& fixed, const CellWindow& window,
                                      Region region = Region::all) {
  const detail::LocalEnumerator en(spec, fixed, window.cells(spec.dom), region);
  std::uint32_t best = 0;
  double best_v = en.local(0);
  for (std::uint32_t s = 1; s < en.states(); ++s) {
    const double v = en.local(s);
    if (v < best_v) {
      best_v = v;
      best = s;
    }
  }
  return {en.materialize(best), en.value(best)};
}

/// Problem data under which super-level sets of a minimizer minimize P_ψ:
/// Neumann problems see the source H - mean(H) on Ω only.
inline ProblemSpec level_set_problem(const ProblemSpec& spec) {
  ProblemSpec p = spec;
  if (!spec.dirichlet()) subtract_mean(spec.dom, p.source);
  return p;
}

inline Region level_set_region(const ProblemSpec& spec) { return spec.dirichlet() ? Region::all : Region::omega; }

struct MinimalityVerdict {
  bool minimal = true;
  SetMinimum best_competitor;
  double value = 0.0;   // P_ψ(E_λ)
  double margin = 0.0;  // best competitor - P_ψ(E_λ)
};

/// Compares E_λ = {u ≥ λ} against every set that differs only inside the window.
inline MinimalityVerdict verify_superlevel_minimality(const ScalarField& u, double lambda, const ProblemSpec& spec,
                                                      const CellWindow& window) {
  const ProblemSpec p = level_set_problem(spec);
  const Region region = level_set_region(spec);
  const CellSet E = superlevel(p, u, lambda);
  MinimalityVerdict r;
  r.value = psi_perimeter(E, p, region);
  r.best_competitor = brute_force_set_min(p, E, window, region);
  r.margin = r.best_competitor.value - r.value;
  r.minimal = !(r.best_competitor.value < r.value - 1e-9);
  return r;
}

// Barrier condition ---------------------------------------------------------------------------

struct BarrierResult {
  CellIndex cell;
  bool passes = true;
  std::size_t ball_cells = 0;
  std::size_t minimizers = 0;
  double min_value = 0.0;
  double omega_value = 0.0;  // P_ψ(Ω ∩ ball configuration = Ω)
  std::optional<CellSet> violating_set;
};

/// Mask cells whose centres lie within radius·h of the centre of x0.
inline std::vector<CellIndex> ball_cells(const GridDomain& dom, CellIndex x0, int radius) {
  std::vector<CellIndex> out;
  for (const auto& c : dom.cells()) {
    const long di = c.i - x0.i, dj = c.j - x0.j;
    if (di * di + dj * dj <= static_cast<long>(radius) * radius) out.push_back(c);
  }
  return out;
}

/// For each boundary cell x0: every minimizer V of P_ψ(·; all) among W ⊆ Ω
/// with W = Ω outside the ball must keep clear of ∂Ω inside the ball, i.e.
/// no ball cell of V may carry a boundary face. Minimizers are all states
/// within 1e-9 of the minimum; the first violating one is reported.
inline std::vector<BarrierResult> check_barrier_condition(const ProblemSpec& spec, int radius) {
  const auto& dom = spec.dom;
  if (radius < 0) throw InputError("barrier radius must be >= 0");
  std::vector<CellIndex> centers;
  for (const auto& c : dom.cells())
    if (dom.is_boundary_cell(c)) centers.push_back(c);
  for (const auto& c : centers) {
    const auto ball = ball_cells(dom, c, radius);
    if (ball.size() > kMaxFreeCells)
      throw BudgetError("ball of radius " + std::to_string(radius) + " holds " + std::to_string(ball.size()) +
                        " cells, more than the 16-cell cap");
  }
  const CellSet omega = CellSet::full(dom);
  std::vector<BarrierResult> out;
  out.reserve(centers.size());
  for (const auto& x0 : centers) {
    const auto ball = ball_cells(dom, x0, radius);
    const detail::LocalEnumerator en(spec, omega, ball, Region::all);
    std::vector<double> v(en.states());
    double vmin = HUGE_VAL;
    for (std::uint32_t s = 0; s < en.states(); ++s) {
      v[s] = en.local(s);
      vmin = std::min(vmin, v[s]);
    }
    BarrierResult r;
    r.cell = x0;
    r.ball_cells = ball.size();
    r.min_value = en.value(0) - en.local(0) + vmin;
    r.omega_value = en.value(en.base_state());
    for (std::uint32_t s = 0; s < en.states(); ++s) {
      if (v[s] > vmin + 1e-9) continue;
      ++r.minimizers;
      if (!r.passes) continue;
      for (std::size_t k = 0; k < ball.size(); ++k)
        if (en.member(s, k) && dom.is_boundary_cell(ball[k])) {
          r.passes = false;
          r.violating_set = en.materialize(s);
          break;
        }
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace plg
