#pragma once

/// \file
/// Basic value types shared by every module: 2-vectors, cell fields over a
/// rectangular extent, and the exception hierarchy.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace plg {

// Errors ---------------------------------------------------------------------

/// Index or shape outside the valid range.
struct DomainError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Malformed or non-finite input data.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent configuration (norm parameters, step sizes, ...).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation was violated.
struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Operation called in a mode where it is not defined.
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Enumeration budget exceeded.
struct BudgetError : std::length_error {
  using std::length_error::length_error;
};

// Vec2 -----------------------------------------------------------------------

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 a) { return std::hypot(a.x, a.y); }
inline bool is_finite(Vec2 a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Integer cell coordinates; i runs along x, j along y.
struct CellIndex {
  int i = 0;
  int j = 0;
  friend constexpr bool operator==(CellIndex, CellIndex) = default;
};

// Fields ---------------------------------------------------------------------

/// Row-major (j outer, i inner) per-cell storage over an nx-by-ny extent.
template <class T>
class Field {
 public:
  Field() = default;
  Field(int nx, int ny, T fill = T{}) : nx_(nx), ny_(ny) {
    if (nx <= 0 || ny <= 0) throw DomainError("field extent must be positive");
    data_.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), fill);
  }
  Field(int nx, int ny, std::vector<T> values) : nx_(nx), ny_(ny), data_(std::move(values)) {
    if (nx <= 0 || ny <= 0) throw DomainError("field extent must be positive");
    if (data_.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
      throw InputError("field value count does not match extent");
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }

  bool contains(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }

  T& operator()(int i, int j) { return data_[index(i, j)]; }
  const T& operator()(int i, int j) const { return data_[index(i, j)]; }
  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }

  /// Bounds-checked access.
  const T& at(int i, int j) const {
    if (!contains(i, j)) throw DomainError("cell (" + std::to_string(i) + "," + std::to_string(j) + ") outside field extent");
    return data_[index(i, j)];
  }

  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  template <class U>
  bool same_shape(const Field<U>& o) const {
    return nx_ == o.nx() && ny_ == o.ny();
  }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  std::vector<T> data_;
};

using ScalarField = Field<double>;
using VectorField = Field<Vec2>;

}  // namespace plg
