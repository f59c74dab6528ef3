#pragma once

/// \file
/// Position-dependent norm families φ(x,·) on R², their dual norms
/// φ⁰(x,ξ) = sup{ξ·p : φ(x,p) ≤ 1}, and projection onto the dual unit ball.
///
/// Parameters are piecewise constant per cell. The global bounds
///   β|ξ| ≤ φ(x,ξ) ≤ α|ξ|
/// are computed from field extrema when the spec is built.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "plg/field.hpp"

namespace plg {

enum class NormKind { WeightedEuclidean, AnisotropicRiemannian, WeightedL1, WeightedLinf };

inline std::string_view to_string(NormKind k) {
  switch (k) {
    case NormKind::WeightedEuclidean: return "euclidean";
    case NormKind::AnisotropicRiemannian: return "riemannian";
    case NormKind::WeightedL1: return "l1";
    case NormKind::WeightedLinf: return "linf";
  }
  return "?";
}

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  double quad(Vec2 v) const { return xx * v.x * v.x + 2.0 * xy * v.x * v.y + yy * v.y * v.y; }
  double det() const { return xx * yy - xy * xy; }
  Sym2 inverse() const {
    const double d = det();
    return {yy / d, -xy / d, xx / d};
  }
  /// Eigenvalues, smallest first.
  std::pair<double, double> eigenvalues() const {
    const double m = 0.5 * (xx + yy);
    const double r = std::hypot(0.5 * (xx - yy), xy);
    return {m - r, m + r};
  }
  friend bool operator==(const Sym2&, const Sym2&) = default;
};

/// Skip parameter validation; only useful for probing deliberately broken norms.
enum class Validation { checked, unchecked };

class NormSpec {
 public:
  /// Smallest admissible eigenvalue of σ₀ before it is treated as singular.
  static constexpr double kEigenFloor = 1e-10;

  NormSpec() = default;

  static NormSpec weighted_euclidean(ScalarField a, Validation v = Validation::checked) {
    return NormSpec(NormKind::WeightedEuclidean, std::move(a), {}, v);
  }
  static NormSpec weighted_l1(ScalarField a, Validation v = Validation::checked) {
    return NormSpec(NormKind::WeightedL1, std::move(a), {}, v);
  }
  static NormSpec weighted_linf(ScalarField a, Validation v = Validation::checked) {
    return NormSpec(NormKind::WeightedLinf, std::move(a), {}, v);
  }
  static NormSpec anisotropic(ScalarField a, Field<Sym2> sigma0, Validation v = Validation::checked) {
    return NormSpec(NormKind::AnisotropicRiemannian, std::move(a), std::move(sigma0), v);
  }
  /// Uniform parameters over an nx-by-ny extent.
  static NormSpec uniform(NormKind kind, int nx, int ny, double a, Sym2 sigma0 = {}) {
    ScalarField w(nx, ny, a);
    if (kind == NormKind::AnisotropicRiemannian) return anisotropic(std::move(w), Field<Sym2>(nx, ny, sigma0));
    return NormSpec(kind, std::move(w), {}, Validation::checked);
  }

  NormKind kind() const { return kind_; }
  int nx() const { return weight_.nx(); }
  int ny() const { return weight_.ny(); }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double weight_min() const { return a_min_; }
  double weight_max() const { return a_max_; }
  double lambda_min() const { return lam_min_; }
  double lambda_max() const { return lam_max_; }
  const ScalarField& weight() const { return weight_; }
  const Field<Sym2>& metric() const { return sigma0_; }

  double weight_at(CellIndex c) const { return weight_.at(c.i, c.j); }

  /// φ(x, ξ).
  double phi(CellIndex c, Vec2 xi) const {
    check(c, xi);
    return phi_unchecked(weight_.index(c.i, c.j), xi);
  }

  /// φ⁰(x, ξ), closed form per kind.
  double phi_dual(CellIndex c, Vec2 xi) const {
    check(c, xi);
    return phi_dual_unchecked(weight_.index(c.i, c.j), xi);
  }

  /// Euclidean nearest point of {q : φ⁰(x,q) ≤ 1}.
  Vec2 project_dual_ball(CellIndex c, Vec2 b) const {
    check(c, b);
    return project_unchecked(weight_.index(c.i, c.j), b);
  }

  /// b / φ⁰(x,b) when infeasible: lands in the dual ball but is not the
  /// nearest point for the Riemannian kind.
  Vec2 scale_to_dual_ball(CellIndex c, Vec2 b) const {
    check(c, b);
    const double s = phi_dual_unchecked(weight_.index(c.i, c.j), b);
    return s > 1.0 ? b / s : b;
  }

  /// max over n_dirs equally spaced unit directions p of ξ·p / φ(x,p).
  double support_sample_dual(CellIndex c, Vec2 xi, int n_dirs) const {
    check(c, xi);
    if (n_dirs < 4) throw InputError("support_sample_dual needs at least 4 directions");
    const std::size_t k = weight_.index(c.i, c.j);
    double best = 0.0;
    for (int d = 0; d < n_dirs; ++d) {
      const double t = 2.0 * std::numbers::pi * d / n_dirs;
      const Vec2 p{std::cos(t), std::sin(t)};
      best = std::max(best, dot(xi, p) / phi_unchecked(k, p));
    }
    return best;
  }

  // Flat-index variants used in inner loops; callers guarantee k < size and finite input.

  double phi_unchecked(std::size_t k, Vec2 xi) const {
    const double a = weight_[k];
    switch (kind_) {
      case NormKind::WeightedEuclidean: return a * std::hypot(xi.x, xi.y);
      case NormKind::AnisotropicRiemannian: return a * std::sqrt(std::max(0.0, sigma0_[k].quad(xi)));
      case NormKind::WeightedL1: return a * (std::abs(xi.x) + std::abs(xi.y));
      case NormKind::WeightedLinf: return a * std::max(std::abs(xi.x), std::abs(xi.y));
    }
    return 0.0;
  }

  double phi_dual_unchecked(std::size_t k, Vec2 xi) const {
    const double a = weight_[k];
    switch (kind_) {
      case NormKind::WeightedEuclidean: return std::hypot(xi.x, xi.y) / a;
      case NormKind::AnisotropicRiemannian: return std::sqrt(std::max(0.0, sigma_inv_[k].quad(xi))) / a;
      case NormKind::WeightedL1: return std::max(std::abs(xi.x), std::abs(xi.y)) / a;
      case NormKind::WeightedLinf: return (std::abs(xi.x) + std::abs(xi.y)) / a;
    }
    return 0.0;
  }

  Vec2 project_unchecked(std::size_t k, Vec2 b) const {
    const double a = weight_[k];
    switch (kind_) {
      case NormKind::WeightedEuclidean: {
        const double r = std::hypot(b.x, b.y);
        return r > a ? b * (a / r) : b;
      }
      case NormKind::AnisotropicRiemannian: return project_ellipse(k, b);
      case NormKind::WeightedL1:
        return {std::clamp(b.x, -a, a), std::clamp(b.y, -a, a)};
      case NormKind::WeightedLinf: return project_l1_ball(b, a);
    }
    return b;
  }

 private:
  NormSpec(NormKind kind, ScalarField a, Field<Sym2> sigma0, Validation v)
      : kind_(kind), weight_(std::move(a)), sigma0_(std::move(sigma0)) {
    if (weight_.size() == 0) throw ConfigError("norm weight field is empty");
    if (kind_ == NormKind::AnisotropicRiemannian) {
      if (!sigma0_.same_shape(weight_)) throw ConfigError("sigma0 field shape differs from weight field");
    } else {
      sigma0_ = Field<Sym2>(weight_.nx(), weight_.ny(), Sym2{});
    }
    a_min_ = *std::min_element(weight_.values().begin(), weight_.values().end());
    a_max_ = *std::max_element(weight_.values().begin(), weight_.values().end());
    if (v == Validation::checked) {
      for (double a : weight_.values())
        if (!std::isfinite(a) || a <= 0.0) throw ConfigError("norm weight must be finite and > 0");
    }
    sigma_inv_ = Field<Sym2>(weight_.nx(), weight_.ny(), Sym2{});
    lam_min_ = 1.0;
    lam_max_ = 1.0;
    if (kind_ == NormKind::AnisotropicRiemannian) {
      lam_min_ = HUGE_VAL;
      lam_max_ = 0.0;
      for (std::size_t k = 0; k < sigma0_.size(); ++k) {
        const auto [lo, hi] = sigma0_[k].eigenvalues();
        if (v == Validation::checked && !(lo >= kEigenFloor && std::isfinite(hi)))
          throw ConfigError("sigma0 is singular or indefinite at cell " + std::to_string(k));
        lam_min_ = std::min(lam_min_, lo);
        lam_max_ = std::max(lam_max_, hi);
        sigma_inv_[k] = sigma0_[k].inverse();
      }
    }
    compute_bounds();
  }

  void compute_bounds() {
    switch (kind_) {
      case NormKind::WeightedEuclidean:
        alpha_ = a_max_;
        beta_ = a_min_;
        break;
      case NormKind::AnisotropicRiemannian: {
        alpha_ = 0.0;
        beta_ = HUGE_VAL;
        for (std::size_t k = 0; k < weight_.size(); ++k) {
          const auto [lo, hi] = sigma0_[k].eigenvalues();
          alpha_ = std::max(alpha_, weight_[k] * std::sqrt(std::max(hi, 0.0)));
          beta_ = std::min(beta_, weight_[k] * std::sqrt(std::max(lo, 0.0)));
        }
        break;
      }
      case NormKind::WeightedL1:
        alpha_ = std::numbers::sqrt2 * a_max_;
        beta_ = a_min_;
        break;
      case NormKind::WeightedLinf:
        alpha_ = a_max_;
        beta_ = a_min_ / std::numbers::sqrt2;
        break;
    }
  }

  void check(CellIndex c, Vec2 xi) const {
    if (!weight_.contains(c.i, c.j))
      throw DomainError("cell (" + std::to_string(c.i) + "," + std::to_string(c.j) + ") outside norm field");
    if (!is_finite(xi)) throw InputError("non-finite vector argument");
  }

  // Nearest point of the ellipse {q : qᵀ M q ≤ a²}, M = σ₀⁻¹. In the eigenbasis
  // of M, q_i = c_i / (1 + μ m_i) with μ the root of a convex decreasing
  // function; Newton from μ = 0 increases monotonically to it.
  Vec2 project_ellipse(std::size_t k, Vec2 b) const {
    const double a = weight_[k];
    const Sym2& M = sigma_inv_[k];
    if (M.quad(b) <= a * a) return b;
    const auto [m1, m2] = M.eigenvalues();
    Vec2 e1;
    if (std::abs(M.xy) > 0.0) {
      e1 = {M.xy, m1 - M.xx};
      e1 = e1 / norm2(e1);
    } else {
      e1 = M.xx <= M.yy ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    }
    const Vec2 e2{-e1.y, e1.x};
    const double c1 = dot(b, e1), c2 = dot(b, e2);
    double mu = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double d1 = 1.0 + mu * m1, d2 = 1.0 + mu * m2;
      const double g = m1 * c1 * c1 / (d1 * d1) + m2 * c2 * c2 / (d2 * d2) - a * a;
      const double dg = -2.0 * (m1 * m1 * c1 * c1 / (d1 * d1 * d1) + m2 * m2 * c2 * c2 / (d2 * d2 * d2));
      if (g <= a * a * 1e-15 || dg == 0.0) break;
      mu -= g / dg;
    }
    Vec2 q = (c1 / (1.0 + mu * m1)) * e1 + (c2 / (1.0 + mu * m2)) * e2;
    const double s = phi_dual_unchecked(k, q);
    return s > 1.0 ? q / s : q;
  }

  // Projection onto the ℓ¹ ball of radius r in R² (soft threshold).
  static Vec2 project_l1_ball(Vec2 b, double r) {
    const double ax = std::abs(b.x), ay = std::abs(b.y);
    if (ax + ay <= r) return b;
    const double hi = std::max(ax, ay), lo = std::min(ax, ay);
    const double theta = (hi - lo < r) ? 0.5 * (ax + ay - r) : hi - r;
    return {std::copysign(std::max(ax - theta, 0.0), b.x), std::copysign(std::max(ay - theta, 0.0), b.y)};
  }

  NormKind kind_ = NormKind::WeightedEuclidean;
  ScalarField weight_;
  Field<Sym2> sigma0_;
  Field<Sym2> sigma_inv_;
  double a_min_ = 1.0, a_max_ = 1.0;
  double lam_min_ = 1.0, lam_max_ = 1.0;
  double alpha_ = 1.0, beta_ = 1.0;
};

}  // namespace plg
