#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "simap/matrix.hpp"

namespace simap {

using AmbientPoint = std::vector<double>;

inline constexpr double kDefaultTol = 1e-9;

/// Coordinates of a point relative to the vertices of an n-simplex:
/// n+1 weights that sum to 1 and are nonnegative for points inside the hull.
struct BarycentricVector {
  std::vector<double> coords;

  std::size_t size() const { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }

  double sum() const {
    return std::accumulate(coords.begin(), coords.end(), 0.0);
  }
};

/// The fixed n-simplex whose hull contains the unit hypercube [0,1]^n:
/// vertex 0 is the origin and vertex i is n*e_i. Carries the vertex matrix S
/// ((n+1) x n, rows are vertices) and the conversion matrix M
/// ((n+1) x (n+1)) satisfying (1 | x) * M = b(x). M is written down entry by
/// entry (1 and +-1/n pattern), not obtained by inverting (1 | S).
class EnclosingSimplex {
 public:
  explicit EnclosingSimplex(std::size_t dimension) : n_(dimension) {
    if (dimension < 1) {
      throw std::invalid_argument("EnclosingSimplex: dimension must be >= 1");
    }
    const double n = static_cast<double>(n_);
    vertex_matrix_ = Matrix(n_ + 1, n_);
    for (std::size_t i = 1; i <= n_; ++i) {
      vertex_matrix_.at(i, i - 1) = n;
    }
    coord_matrix_ = Matrix(n_ + 1, n_ + 1);
    coord_matrix_.at(0, 0) = 1.0;
    for (std::size_t i = 1; i <= n_; ++i) {
      coord_matrix_.at(i, 0) = -1.0 / n;
      coord_matrix_.at(i, i) = 1.0 / n;
    }
  }

  std::size_t dimension() const { return n_; }

  /// S: row i is the i-th simplex vertex in ambient coordinates.
  const Matrix& vertex_matrix() const { return vertex_matrix_; }

  /// M: (1, x_1, ..., x_n) * M gives the barycentric coordinates of x.
  const Matrix& coord_matrix() const { return coord_matrix_; }

  AmbientPoint vertex(std::size_t i) const {
    AmbientPoint v(n_, 0.0);
    for (std::size_t c = 0; c < n_; ++c) v[c] = vertex_matrix_.at(i, c);
    return v;
  }

 private:
  std::size_t n_;
  Matrix vertex_matrix_;
  Matrix coord_matrix_;
};

inline EnclosingSimplex build_simplex(std::size_t n) {
  return EnclosingSimplex(n);
}

inline BarycentricVector barycentric_from_ambient(const EnclosingSimplex& simplex,
                                                  const AmbientPoint& x) {
  if (x.size() != simplex.dimension()) {
    throw std::invalid_argument("barycentric_from_ambient: point has wrong dimension");
  }
  std::vector<double> one_x(x.size() + 1);
  one_x[0] = 1.0;
  std::copy(x.begin(), x.end(), one_x.begin() + 1);
  return BarycentricVector{simplex.coord_matrix().left_multiply(one_x)};
}

inline AmbientPoint ambient_from_barycentric(const EnclosingSimplex& simplex,
                                             const BarycentricVector& b,
                                             double tol = kDefaultTol) {
  if (b.size() != simplex.dimension() + 1) {
    throw std::invalid_argument("ambient_from_barycentric: wrong coordinate count");
  }
  if (std::abs(b.sum() - 1.0) > tol) {
    throw std::invalid_argument("ambient_from_barycentric: coordinates do not sum to 1");
  }
  return simplex.vertex_matrix().left_multiply(b.coords);
}

/// Membership test for the simplex hull: every barycentric coordinate >= -tol.
inline bool contains(const EnclosingSimplex& simplex, const AmbientPoint& x,
                     double tol = kDefaultTol) {
  const BarycentricVector b = barycentric_from_ambient(simplex, x);
  for (double c : b.coords) {
    if (c < -tol) return false;
  }
  return true;
}

}  // namespace simap
