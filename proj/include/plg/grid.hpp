#pragma once

/// \file
/// Masked rectangular cell grids and the discrete gradient / divergence pair.
///
/// The gradient is the forward difference between mask cells; it is zero
/// across faces that leave the mask (Neumann ghost). The divergence is the
/// backward difference with b taken as zero outside the mask. With these
/// stencils the discrete integration by parts
///
///   <grad u, b> + <u, div b> = sum over boundary faces [b,nu] u_c h
///
/// holds exactly, where [b,nu] = b(c)·nu on +x/+y faces and 0 on -x/-y faces
/// (the flux through a -x/-y face would live in the exterior ghost cell).
///
/// Dirichlet data enter through one ghost per boundary face whose gradient is
/// purely normal, see extended_gradient().

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "plg/field.hpp"

namespace plg {

enum class FaceDir : std::uint8_t { PlusX = 0, PlusY = 1, MinusX = 2, MinusY = 3 };

constexpr Vec2 outward_normal(FaceDir d) {
  switch (d) {
    case FaceDir::PlusX: return {1.0, 0.0};
    case FaceDir::PlusY: return {0.0, 1.0};
    case FaceDir::MinusX: return {-1.0, 0.0};
    case FaceDir::MinusY: return {0.0, -1.0};
  }
  return {};
}

constexpr CellIndex neighbor(CellIndex c, FaceDir d) {
  switch (d) {
    case FaceDir::PlusX: return {c.i + 1, c.j};
    case FaceDir::PlusY: return {c.i, c.j + 1};
    case FaceDir::MinusX: return {c.i - 1, c.j};
    case FaceDir::MinusY: return {c.i, c.j - 1};
  }
  return c;
}

inline constexpr std::array<FaceDir, 4> kFaceDirs{FaceDir::PlusX, FaceDir::PlusY, FaceDir::MinusX, FaceDir::MinusY};

/// A face between a mask cell and a non-mask (or off-extent) cell.
struct BoundaryFace {
  CellIndex cell;
  FaceDir dir;
  Vec2 normal;  // outward unit normal
};

/// Per-boundary-face scalar data, in GridDomain::boundary_faces() order.
using FaceData = std::vector<double>;

class GridDomain {
 public:
  GridDomain() = default;

  GridDomain(int nx, int ny, double h, Field<std::uint8_t> mask) : nx_(nx), ny_(ny), h_(h), mask_(std::move(mask)) {
    if (nx <= 0 || ny <= 0) throw ConfigError("grid extent must be positive");
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid spacing must be finite and > 0");
    if (mask_.nx() != nx || mask_.ny() != ny) throw ConfigError("mask shape differs from grid extent");
    build();
  }

  static GridDomain rectangle(int nx, int ny, double h) {
    if (nx <= 0 || ny <= 0) throw ConfigError("grid extent must be positive");
    return GridDomain(nx, ny, h, Field<std::uint8_t>(nx, ny, 1));
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double h() const { return h_; }
  double cell_area() const { return h_ * h_; }
  double area() const { return static_cast<double>(cells_.size()) * cell_area(); }
  const Field<std::uint8_t>& mask() const { return mask_; }

  bool in_mask(int i, int j) const { return mask_.contains(i, j) && mask_(i, j) != 0; }
  bool in_mask(CellIndex c) const { return in_mask(c.i, c.j); }
  bool contains(CellIndex c) const { return mask_.contains(c.i, c.j); }

  /// Mask cells in row-major order.
  const std::vector<CellIndex>& cells() const { return cells_; }
  std::size_t cell_count() const { return cells_.size(); }
  std::size_t flat(CellIndex c) const { return mask_.index(c.i, c.j); }

  /// Boundary faces, ordered by cell (row-major) then +x, +y, -x, -y.
  const std::vector<BoundaryFace>& boundary_faces() const { return faces_; }
  std::size_t face_count() const { return faces_.size(); }

  /// Face ids of cell c per FaceDir, -1 where the neighbour is in the mask.
  const std::array<int, 4>& faces_of(CellIndex c) const { return cell_faces_[flat(c)]; }
  bool is_boundary_cell(CellIndex c) const {
    for (int f : faces_of(c))
      if (f >= 0) return true;
    return false;
  }

  /// Physical coordinates with the origin at the extent's lower-left corner.
  Vec2 center(CellIndex c) const { return {(c.i + 0.5) * h_, (c.j + 0.5) * h_}; }
  Vec2 face_midpoint(const BoundaryFace& f) const { return center(f.cell) + (0.5 * h_) * f.normal; }

  /// Centroid of the mask cells.
  Vec2 centroid() const {
    Vec2 s{};
    for (const auto& c : cells_) s += center(c);
    return s / static_cast<double>(cells_.size());
  }

  /// Diameter of the mask's cell-union bounding box.
  double bounding_diameter() const {
    int i0 = nx_, i1 = -1, j0 = ny_, j1 = -1;
    for (const auto& c : cells_) {
      i0 = std::min(i0, c.i);
      i1 = std::max(i1, c.i);
      j0 = std::min(j0, c.j);
      j1 = std::max(j1, c.j);
    }
    return h_ * std::hypot(i1 - i0 + 1, j1 - j0 + 1);
  }

  ScalarField scalar(double fill = 0.0) const { return ScalarField(nx_, ny_, fill); }
  VectorField vector(Vec2 fill = {}) const { return VectorField(nx_, ny_, fill); }

 private:
  void build() {
    cells_.clear();
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i)
        if (mask_(i, j)) cells_.push_back({i, j});
    if (cells_.empty()) throw ConfigError("mask has no cells");
    check_connected();
    cell_faces_.assign(mask_.size(), {-1, -1, -1, -1});
    faces_.clear();
    for (const auto& c : cells_) {
      for (FaceDir d : kFaceDirs) {
        if (!in_mask(neighbor(c, d))) {
          cell_faces_[flat(c)][static_cast<int>(d)] = static_cast<int>(faces_.size());
          faces_.push_back({c, d, outward_normal(d)});
        }
      }
    }
  }

  void check_connected() const {
    std::vector<std::uint8_t> seen(mask_.size(), 0);
    std::vector<CellIndex> stack{cells_.front()};
    seen[flat(cells_.front())] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
      const CellIndex c = stack.back();
      stack.pop_back();
      ++reached;
      for (FaceDir d : kFaceDirs) {
        const CellIndex n = neighbor(c, d);
        if (in_mask(n) && !seen[flat(n)]) {
          seen[flat(n)] = 1;
          stack.push_back(n);
        }
      }
    }
    if (reached != cells_.size()) throw ConfigError("mask is not 4-connected");
  }

  int nx_ = 0;
  int ny_ = 0;
  double h_ = 1.0;
  Field<std::uint8_t> mask_;
  std::vector<CellIndex> cells_;
  std::vector<BoundaryFace> faces_;
  std::vector<std::array<int, 4>> cell_faces_;
};

inline void require_shape(const GridDomain& dom, int nx, int ny, const char* what) {
  if (nx != dom.nx() || ny != dom.ny())
    throw DomainError(std::string(what) + " shape " + std::to_string(nx) + "x" + std::to_string(ny) +
                      " differs from grid " + std::to_string(dom.nx()) + "x" + std::to_string(dom.ny()));
}

// Operators -------------------------------------------------------------------

/// Forward differences between mask cells; zero normal difference across the
/// boundary (Neumann ghost). Off-mask entries are zero.
inline VectorField gradient(const GridDomain& dom, const ScalarField& u) {
  require_shape(dom, u.nx(), u.ny(), "scalar field");
  VectorField g = dom.vector();
  const double inv_h = 1.0 / dom.h();
  for (const auto& c : dom.cells()) {
    const double uc = u(c.i, c.j);
    Vec2 d{};
    if (dom.in_mask(c.i + 1, c.j)) d.x = (u(c.i + 1, c.j) - uc) * inv_h;
    if (dom.in_mask(c.i, c.j + 1)) d.y = (u(c.i, c.j + 1) - uc) * inv_h;
    g(c.i, c.j) = d;
  }
  return g;
}

/// Gradient of u extended by Dirichlet data: the cell part is gradient(dom,u);
/// each boundary face carries the normal jump (f - u_c)/h of its own ghost.
struct ExtendedGradient {
  VectorField cells;
  FaceData faces;
};

inline FaceData boundary_jump(const GridDomain& dom, const ScalarField& u, std::span<const double> f) {
  if (f.size() != dom.face_count())
    throw InputError("Dirichlet data has " + std::to_string(f.size()) + " values, domain has " +
                     std::to_string(dom.face_count()) + " boundary faces");
  FaceData j(dom.face_count());
  const double inv_h = 1.0 / dom.h();
  const auto& faces = dom.boundary_faces();
  for (std::size_t k = 0; k < faces.size(); ++k) j[k] = (f[k] - u(faces[k].cell.i, faces[k].cell.j)) * inv_h;
  return j;
}

inline ExtendedGradient extended_gradient(const GridDomain& dom, const ScalarField& u, std::span<const double> f) {
  return {gradient(dom, u), boundary_jump(dom, u, f)};
}

/// Backward-difference divergence with b = 0 outside the mask.
inline ScalarField divergence(const GridDomain& dom, const VectorField& b) {
  require_shape(dom, b.nx(), b.ny(), "vector field");
  ScalarField d = dom.scalar();
  const double inv_h = 1.0 / dom.h();
  for (const auto& c : dom.cells()) {
    const Vec2 bc = b(c.i, c.j);
    const double bxm = dom.in_mask(c.i - 1, c.j) ? b(c.i - 1, c.j).x : 0.0;
    const double bym = dom.in_mask(c.i, c.j - 1) ? b(c.i, c.j - 1).y : 0.0;
    d(c.i, c.j) = (bc.x - bxm + bc.y - bym) * inv_h;
  }
  return d;
}

/// Per-face [b,nu] such that the integration-by-parts identity holds exactly.
inline FaceData boundary_trace_normal(const GridDomain& dom, const VectorField& b) {
  require_shape(dom, b.nx(), b.ny(), "vector field");
  FaceData t(dom.face_count(), 0.0);
  const auto& faces = dom.boundary_faces();
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const auto& f = faces[k];
    if (f.dir == FaceDir::PlusX || f.dir == FaceDir::PlusY) t[k] = dot(b(f.cell.i, f.cell.j), f.normal);
  }
  return t;
}

/// N(c)·ν on every boundary face: the face fluxes under which a field that is
/// divergence-free in the interior stays so in the boundary cells.
inline FaceData normal_flux(const GridDomain& dom, const VectorField& b) {
  require_shape(dom, b.nx(), b.ny(), "vector field");
  FaceData t(dom.face_count());
  const auto& faces = dom.boundary_faces();
  for (std::size_t k = 0; k < faces.size(); ++k) t[k] = dot(b(faces[k].cell.i, faces[k].cell.j), faces[k].normal);
  return t;
}

/// Divergence of a dual pair (cell field b, boundary face fluxes t):
/// the exact negative adjoint of the extended gradient,
///   div(b,t)(c) = divK b(c) + (1/h) sum_{faces f of c} t_f,
/// where divK ignores b's components across boundary faces.
/// With t = boundary_trace_normal(b) this equals divergence(b).
inline ScalarField flux_divergence(const GridDomain& dom, const VectorField& b, std::span<const double> t) {
  require_shape(dom, b.nx(), b.ny(), "vector field");
  if (!t.empty() && t.size() != dom.face_count()) throw InputError("face flux count differs from boundary face count");
  ScalarField d = dom.scalar();
  const double inv_h = 1.0 / dom.h();
  for (const auto& c : dom.cells()) {
    const Vec2 bc = b(c.i, c.j);
    double s = 0.0;
    if (dom.in_mask(c.i + 1, c.j)) s += bc.x;
    if (dom.in_mask(c.i, c.j + 1)) s += bc.y;
    if (dom.in_mask(c.i - 1, c.j)) s -= b(c.i - 1, c.j).x;
    if (dom.in_mask(c.i, c.j - 1)) s -= b(c.i, c.j - 1).y;
    if (!t.empty())
      for (int f : dom.faces_of(c))
        if (f >= 0) s += t[static_cast<std::size_t>(f)];
    d(c.i, c.j) = s * inv_h;
  }
  return d;
}

/// Exact negative adjoint of gradient(): flux_divergence with no face fluxes.
inline ScalarField masked_divergence(const GridDomain& dom, const VectorField& b) {
  return flux_divergence(dom, b, {});
}

// Discrete integrals ----------------------------------------------------------

inline double integrate(const GridDomain& dom, const ScalarField& u) {
  double s = 0.0;
  for (const auto& c : dom.cells()) s += u(c.i, c.j);
  return s * dom.cell_area();
}

inline double inner(const GridDomain& dom, const ScalarField& u, const ScalarField& v) {
  double s = 0.0;
  for (const auto& c : dom.cells()) s += u(c.i, c.j) * v(c.i, c.j);
  return s * dom.cell_area();
}

inline double inner(const GridDomain& dom, const VectorField& a, const VectorField& b) {
  double s = 0.0;
  for (const auto& c : dom.cells()) s += dot(a(c.i, c.j), b(c.i, c.j));
  return s * dom.cell_area();
}

/// sum over faces of t_f * u(c_f) * h.
inline double boundary_integral(const GridDomain& dom, std::span<const double> t, const ScalarField& u) {
  double s = 0.0;
  const auto& faces = dom.boundary_faces();
  for (std::size_t k = 0; k < faces.size(); ++k) s += t[k] * u(faces[k].cell.i, faces[k].cell.j);
  return s * dom.h();
}

inline double mean(const GridDomain& dom, const ScalarField& u) { return integrate(dom, u) / dom.area(); }

inline void subtract_mean(const GridDomain& dom, ScalarField& u) {
  const double m = mean(dom, u);
  for (const auto& c : dom.cells()) u(c.i, c.j) -= m;
}

// Step-size bound --------------------------------------------------------------

/// Upper bound on the operator norm of the (extended) gradient with respect to
/// h²-weighted inner products: every cell has at most four differences or
/// ghost jumps, so Gershgorin on gradᵀgrad gives 8/h².
inline double operator_norm_estimate(const GridDomain& dom) { return std::sqrt(8.0) / dom.h(); }

/// Power iteration on gradᵀgrad (Neumann gradient); a lower estimate of the
/// true norm that converges from below.
inline double power_iteration_norm(const GridDomain& dom, int steps = 50, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ScalarField u = dom.scalar();
  for (const auto& c : dom.cells()) u(c.i, c.j) = U(rng);
  double est = 0.0;
  for (int s = 0; s < steps; ++s) {
    const double nu = std::sqrt(inner(dom, u, u));
    if (nu == 0.0) return 0.0;
    for (const auto& c : dom.cells()) u(c.i, c.j) /= nu;
    ScalarField w = masked_divergence(dom, gradient(dom, u));
    for (const auto& c : dom.cells()) w(c.i, c.j) = -w(c.i, c.j);
    est = std::sqrt(std::max(0.0, inner(dom, u, w)));
    u = std::move(w);
  }
  return est;
}

}  // namespace plg
