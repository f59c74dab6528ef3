#pragma once

// Random fixtures shared by the unit tests and the acceptance binary.

#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "plg/plg.hpp"

namespace plg {
// gtest picks this up for parameter values
inline void PrintTo(NormKind k, std::ostream* os) { *os << to_string(k); }
}  // namespace plg

namespace plg::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec2 random_vec(Rng& rng, double scale = 1.0) { return {uniform(rng, -scale, scale), uniform(rng, -scale, scale)}; }

inline constexpr NormKind kAllKinds[] = {NormKind::WeightedEuclidean, NormKind::AnisotropicRiemannian,
                                         NormKind::WeightedL1, NormKind::WeightedLinf};

/// SPD matrix with eigenvalues in [lo, hi] and a random orientation.
inline Sym2 random_metric(Rng& rng, double lo = 0.5, double hi = 2.0) {
  const double l1 = uniform(rng, lo, hi), l2 = uniform(rng, lo, hi);
  const double t = uniform(rng, 0.0, 3.141592653589793);
  const double c = std::cos(t), s = std::sin(t);
  return {l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c};
}

inline NormSpec random_norm(Rng& rng, NormKind kind, int nx, int ny) {
  ScalarField a(nx, ny);
  for (auto& v : a.values()) v = uniform(rng, 0.5, 2.0);
  switch (kind) {
    case NormKind::WeightedEuclidean: return NormSpec::weighted_euclidean(a);
    case NormKind::WeightedL1: return NormSpec::weighted_l1(a);
    case NormKind::WeightedLinf: return NormSpec::weighted_linf(a);
    case NormKind::AnisotropicRiemannian: {
      Field<Sym2> m(nx, ny);
      for (auto& v : m.values()) v = random_metric(rng);
      return NormSpec::anisotropic(a, m);
    }
  }
  return NormSpec::weighted_euclidean(a);
}

/// Connected blob grown from the centre, covering roughly `fill` of the extent.
inline GridDomain random_mask(Rng& rng, int nx, int ny, double h, double fill = 0.6) {
  Field<std::uint8_t> m(nx, ny, 0);
  std::vector<CellIndex> front{{nx / 2, ny / 2}};
  m(nx / 2, ny / 2) = 1;
  const auto target = static_cast<std::size_t>(std::max(1.0, fill * nx * ny));
  std::size_t count = 1;
  while (count < target) {
    const CellIndex c = front[std::uniform_int_distribution<std::size_t>(0, front.size() - 1)(rng)];
    static constexpr int di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
    const int d = std::uniform_int_distribution<int>(0, 3)(rng);
    const CellIndex n{c.i + di[d], c.j + dj[d]};
    if (!m.contains(n.i, n.j) || m(n.i, n.j)) continue;
    m(n.i, n.j) = 1;
    front.push_back(n);
    ++count;
  }
  return GridDomain(nx, ny, h, m);
}

inline ScalarField random_scalar(Rng& rng, const GridDomain& dom, double scale = 1.0) {
  ScalarField u = dom.scalar();
  for (const auto& c : dom.cells()) u(c.i, c.j) = uniform(rng, -scale, scale);
  return u;
}

inline VectorField random_vector(Rng& rng, const GridDomain& dom, double scale = 1.0) {
  VectorField b = dom.vector();
  for (const auto& c : dom.cells()) b(c.i, c.j) = random_vec(rng, scale);
  return b;
}

inline FaceData random_faces(Rng& rng, const GridDomain& dom, double lo = -1.0, double hi = 1.0) {
  FaceData f(dom.face_count());
  for (auto& v : f) v = uniform(rng, lo, hi);
  return f;
}

/// Random problem on a rectangle with H scaled to `frac` of the existence
/// threshold; Dirichlet data uniform in [-1, 1].
inline ProblemSpec random_instance(Rng& rng, NormKind kind, int nx, int ny, bool dirichlet, double frac = 0.9,
                                   double drift_scale = 0.5) {
  const GridDomain dom = GridDomain::rectangle(nx, ny, 1.0 / nx);
  ProblemSpec spec = make_problem(dom, random_norm(rng, kind, nx, ny),
                                  dirichlet ? BoundaryCondition::dirichlet(random_faces(rng, dom))
                                            : BoundaryCondition::neumann());
  spec.drift = random_vector(rng, dom, drift_scale);
  spec.source = random_scalar(rng, dom, 1.0);
  const double threshold = existence_condition_check(spec).threshold;
  for (auto& v : spec.source.values()) v *= frac * threshold;
  return spec;
}

}  // namespace plg::testing
