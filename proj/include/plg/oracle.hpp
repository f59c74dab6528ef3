#pragma once

/// \file
/// Brute-force references for tiny grids: exhaustive minimization of the
/// primal energy over quantized fields, and random convexity probes. The set
/// enumeration lives in levelset.hpp (brute_force_set_min).

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "plg/field.hpp"
#include "plg/grid.hpp"
#include "plg/levelset.hpp"
#include "plg/parallel.hpp"
#include "plg/problem.hpp"

namespace plg {

inline constexpr double kBruteForceBudget = 1e7;

struct QuantizedSearchSpec {
  std::vector<double> levels{-1.0, -0.5, 0.0, 0.5, 1.0};
  std::size_t max_cells = 10;
};

struct BruteForceResult {
  ScalarField u_star;
  double value = 0.0;
  std::uint64_t candidates = 0;
};

namespace detail {

/// Allocation-free energy evaluation for a fixed problem; mirrors energy_primal.
class CompactEnergy {
 public:
  explicit CompactEnergy(const ProblemSpec& spec) : spec_(&spec), n_(spec.dom.cell_count()) {
    const auto& dom = spec.dom;
    std::vector<int> slot(dom.mask().size(), -1);
    for (std::size_t k = 0; k < n_; ++k) slot[dom.flat(dom.cells()[k])] = static_cast<int>(k);
    right_.resize(n_);
    up_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const CellIndex c = dom.cells()[k];
      right_[k] = dom.in_mask(c.i + 1, c.j) ? slot[dom.flat({c.i + 1, c.j})] : -1;
      up_[k] = dom.in_mask(c.i, c.j + 1) ? slot[dom.flat({c.i, c.j + 1})] : -1;
    }
    if (spec.dirichlet()) {
      const FaceData w = spec.face_norms();
      const auto& faces = dom.boundary_faces();
      for (std::size_t f = 0; f < faces.size(); ++f)
        faces_.push_back({static_cast<std::size_t>(slot[dom.flat(faces[f].cell)]), spec.bc.f[f], w[f]});
    }
  }

  /// values[k] belongs to dom.cells()[k].
  double operator()(std::span<const double> values) const {
    const auto& spec = *spec_;
    const auto& dom = spec.dom;
    const double inv_h = 1.0 / dom.h();
    double shift = 0.0;
    if (!spec.dirichlet()) {
      for (double v : values) shift += v;
      shift /= static_cast<double>(n_);
    }
    double bulk = 0.0, src = 0.0, bnd = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t fk = dom.flat(dom.cells()[k]);
      const double uk = values[k] - shift;
      Vec2 g{};
      if (right_[k] >= 0) g.x = ((values[static_cast<std::size_t>(right_[k])] - shift) - uk) * inv_h;
      if (up_[k] >= 0) g.y = ((values[static_cast<std::size_t>(up_[k])] - shift) - uk) * inv_h;
      bulk += spec.norm.phi_unchecked(fk, g + spec.drift[fk]);
      src += spec.source[fk] * uk;
    }
    for (const auto& f : faces_) bnd += f.w * std::abs(f.data - values[f.cell]);
    return bulk * dom.cell_area() + bnd * dom.h() + src * dom.cell_area();
  }

 private:
  struct Face {
    std::size_t cell;
    double data;
    double w;
  };
  const ProblemSpec* spec_;
  std::size_t n_;
  std::vector<int> right_, up_;
  std::vector<Face> faces_;
};

}  // namespace detail

/// Exhaustive minimum of the energy over fields taking values in q.levels.
/// Candidates are visited in mixed-radix order with the first mask cell as
/// the most significant digit; the first minimum found wins. Under Neumann
/// the minimizer is returned mean-free.
inline BruteForceResult brute_force_primal(const ProblemSpec& spec, const QuantizedSearchSpec& q) {
  spec.validate();
  const auto& dom = spec.dom;
  const std::size_t n = dom.cell_count();
  if (q.levels.empty()) throw InputError("quantized search needs at least one level");
  if (q.max_cells > 10) throw ConfigError("quantized search caps max_cells at 10");
  if (n > q.max_cells)
    throw BudgetError("mask has " + std::to_string(n) + " cells, quantized search allows " + std::to_string(q.max_cells));
  const std::size_t L = q.levels.size();
  const double total = std::pow(static_cast<double>(L), static_cast<double>(n));
  if (total > kBruteForceBudget) throw BudgetError("quantized search exceeds the 1e7 candidate budget");
  const std::uint64_t count = static_cast<std::uint64_t>(std::llround(total));

  const detail::CompactEnergy energy(spec);
  // Split on the leading digit; blocks are merged in order so the result is
  // independent of the thread count.
  struct Best {
    double value = std::numeric_limits<double>::infinity();
    std::uint64_t index = 0;
  };
  const std::uint64_t block = count / L;
  std::vector<Best> best(L);
  parallel_for(L, [&](std::size_t lead) {
    std::vector<std::size_t> digit(n, 0);
    std::vector<double> vals(n, q.levels[0]);
    if (n > 0) {
      digit[0] = lead;
      vals[0] = q.levels[lead];
    }
    Best b;
    for (std::uint64_t r = 0; r < block; ++r) {
      const double e = energy(vals);
      if (e < b.value) {
        b.value = e;
        b.index = lead * block + r;
      }
      for (std::size_t k = n; k-- > 1;) {
        if (++digit[k] < L) {
          vals[k] = q.levels[digit[k]];
          break;
        }
        digit[k] = 0;
        vals[k] = q.levels[0];
      }
    }
    best[lead] = b;
  });
  Best win;
  for (const auto& b : best)
    if (b.value < win.value) win = b;

  BruteForceResult r;
  r.candidates = count;
  r.u_star = dom.scalar();
  std::uint64_t idx = win.index;
  for (std::size_t k = n; k-- > 0;) {
    const CellIndex c = dom.cells()[k];
    r.u_star(c.i, c.j) = q.levels[idx % L];
    idx /= L;
  }
  if (!spec.dirichlet()) subtract_mean(dom, r.u_star);
  r.value = energy_primal(spec, r.u_star);
  return r;
}

/// max over random pairs of I((u+v)/2) - (I(u) + I(v))/2; ≤ 1e-10 for any norm.
inline double convexity_probe(const ProblemSpec& spec, int trials, std::uint64_t seed = 1) {
  const auto& dom = spec.dom;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  ScalarField u = dom.scalar(), v = dom.scalar(), m = dom.scalar();
  for (int t = 0; t < trials; ++t) {
    for (const auto& c : dom.cells()) {
      u(c.i, c.j) = U(rng);
      v(c.i, c.j) = U(rng);
      m(c.i, c.j) = 0.5 * (u(c.i, c.j) + v(c.i, c.j));
    }
    worst = std::max(worst, energy_primal(spec, m) - 0.5 * (energy_primal(spec, u) + energy_primal(spec, v)));
  }
  return trials > 0 ? worst : 0.0;
}

}  // namespace plg
