#pragma once

// Banded complex matrices, their factorization, and the finite-difference
// assembly of sandwich-ordered kinetic operators
//   (1/2m) A D^dagger M D A,   A, M diagonal, D a difference form of -i d/dx.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "canonflow/spectral.hpp"

namespace canonflow {

class BandedMatrix {
 public:
  BandedMatrix(std::size_t n, std::size_t bandwidth);

  std::size_t size() const noexcept { return n_; }
  std::size_t bandwidth() const noexcept { return w_; }

  cplx at(std::size_t i, std::size_t j) const;
  void add(std::size_t i, std::size_t j, cplx v);

  std::vector<cplx> apply(std::span<const cplx> x) const;

  // max |H_ij - conj(H_ji)|
  double hermiticity_residual() const;
  double max_abs() const;
  double max_abs_difference(const BandedMatrix& other) const;

  // I + s * this
  BandedMatrix identity_plus(cplx s) const;

 private:
  std::size_t index(std::size_t i, std::size_t j) const noexcept {
    return i * (2 * w_ + 1) + (j + w_ - i);
  }
  std::size_t n_;
  std::size_t w_;
  std::vector<cplx> data_;
};

/// LU factorization (partial pivoting, LAPACK zgbtrf) reused across solves.
class BandedLU {
 public:
  explicit BandedLU(const BandedMatrix& a);
  std::vector<cplx> solve(std::span<const cplx> rhs) const;

 private:
  std::size_t n_;
  std::size_t w_;
  std::vector<cplx> factors_;
  std::vector<int> pivots_;
};

/// Lowest `count` eigenvalues of a Hermitian banded matrix (LAPACK zhbevx).
std::vector<double> lowest_eigenvalues(const BandedMatrix& h, std::size_t count);

/// Supported accuracy orders for the difference stencils: 2, 4, 6 (staggered)
/// and 2, 4, 6, 8 (central).
inline constexpr int kDefaultStencilOrder = 6;

/// (1/2m) A K^T M K A with K the staggered difference from nodes to the n+1
/// cell midpoints x0 + (k + 1/2) dx, k = -1 .. n-1 (zero Dirichlet padding).
/// `outer` holds A at the n nodes, `inner` holds M at the n+1 midpoints.
/// The staggered form has no spurious zero mode at the Nyquist wavenumber.
BandedMatrix kinetic_sandwich(double dx, std::span<const double> outer,
                              std::span<const double> inner, double mass,
                              int order = kDefaultStencilOrder);

/// Hermitian discretization of {g(x), p} = g p + p g with the central
/// difference of -i d/dx.
BandedMatrix anticommutator_with_momentum(double dx, std::span<const double> g,
                                          int order = kDefaultStencilOrder);

}  // namespace canonflow
