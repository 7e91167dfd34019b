#include "canonflow/banded.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>

#include "canonflow/error.hpp"

namespace canonflow {
namespace {

constexpr const char* kModule = "banded";

std::vector<double> staggered_coefficients(int order) {
  switch (order) {
    case 2: return {1.0};
    case 4: return {9.0 / 8.0, -1.0 / 24.0};
    case 6: return {75.0 / 64.0, -25.0 / 384.0, 3.0 / 640.0};
    default:
      throw Error(ErrorKind::InvalidArgument, kModule, "staggered stencil order must be 2, 4 or 6");
  }
}

std::vector<double> central_coefficients(int order) {
  switch (order) {
    case 2: return {0.5};
    case 4: return {2.0 / 3.0, -1.0 / 12.0};
    case 6: return {0.75, -0.15, 1.0 / 60.0};
    case 8: return {0.8, -0.2, 4.0 / 105.0, -1.0 / 280.0};
    default:
      throw Error(ErrorKind::InvalidArgument, kModule, "central stencil order must be 2, 4, 6 or 8");
  }
}

}  // namespace

BandedMatrix::BandedMatrix(std::size_t n, std::size_t bandwidth)
    : n_(n), w_(bandwidth), data_(n * (2 * bandwidth + 1), cplx(0.0)) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, kModule, "empty banded matrix");
}

cplx BandedMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) return 0.0;
  if ((i > j ? i - j : j - i) > w_) return 0.0;
  return data_[index(i, j)];
}

void BandedMatrix::add(std::size_t i, std::size_t j, cplx v) {
  if (i >= n_ || j >= n_ || (i > j ? i - j : j - i) > w_) {
    throw Error(ErrorKind::InvalidArgument, kModule, "entry outside the band");
  }
  data_[index(i, j)] += v;
}

std::vector<cplx> BandedMatrix::apply(std::span<const cplx> x) const {
  std::vector<cplx> y(n_, cplx(0.0));
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t lo = i > w_ ? i - w_ : 0;
    const std::size_t hi = std::min(n_ - 1, i + w_);
    cplx s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += data_[index(i, j)] * x[j];
    y[i] = s;
  }
  return y;
}

double BandedMatrix::hermiticity_residual() const {
  double r = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t hi = std::min(n_ - 1, i + w_);
    for (std::size_t j = i; j <= hi; ++j) {
      r = std::max(r, std::abs(at(i, j) - std::conj(at(j, i))));
    }
  }
  return r;
}

double BandedMatrix::max_abs() const {
  double r = 0.0;
  for (const auto& z : data_) r = std::max(r, std::abs(z));
  return r;
}

double BandedMatrix::max_abs_difference(const BandedMatrix& other) const {
  if (other.n_ != n_) throw Error(ErrorKind::InvalidArgument, kModule, "size mismatch");
  const std::size_t w = std::max(w_, other.w_);
  double r = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t lo = i > w ? i - w : 0;
    const std::size_t hi = std::min(n_ - 1, i + w);
    for (std::size_t j = lo; j <= hi; ++j) r = std::max(r, std::abs(at(i, j) - other.at(i, j)));
  }
  return r;
}

BandedMatrix BandedMatrix::identity_plus(cplx s) const {
  BandedMatrix out(n_, w_);
  for (std::size_t k = 0; k < data_.size(); ++k) out.data_[k] = s * data_[k];
  for (std::size_t i = 0; i < n_; ++i) out.data_[index(i, i)] += 1.0;
  return out;
}

BandedLU::BandedLU(const BandedMatrix& a) : n_(a.size()), w_(a.bandwidth()) {
  const std::size_t ldab = 3 * w_ + 1;
  factors_.assign(ldab * n_, cplx(0.0));
  pivots_.assign(n_, 0);
  for (std::size_t j = 0; j < n_; ++j) {
    const std::size_t lo = j > w_ ? j - w_ : 0;
    const std::size_t hi = std::min(n_ - 1, j + w_);
    for (std::size_t i = lo; i <= hi; ++i) {
      factors_[(2 * w_ + i - j) + j * ldab] = a.at(i, j);
    }
  }
  const int n = static_cast<int>(n_);
  const int w = static_cast<int>(w_);
  const lapack_int info = LAPACKE_zgbtrf(
      LAPACK_COL_MAJOR, n, n, w, w,
      reinterpret_cast<lapack_complex_double*>(factors_.data()), static_cast<int>(ldab),
      pivots_.data());
  if (info != 0) {
    throw Error(ErrorKind::LinearSolveFailure, kModule,
                "banded LU failed (zgbtrf info = " + std::to_string(info) + ")");
  }
}

std::vector<cplx> BandedLU::solve(std::span<const cplx> rhs) const {
  std::vector<cplx> x(rhs.begin(), rhs.end());
  const int n = static_cast<int>(n_);
  const int w = static_cast<int>(w_);
  const lapack_int info = LAPACKE_zgbtrs(
      LAPACK_COL_MAJOR, 'N', n, w, w, 1,
      reinterpret_cast<const lapack_complex_double*>(factors_.data()), 3 * w + 1,
      pivots_.data(), reinterpret_cast<lapack_complex_double*>(x.data()), n);
  if (info != 0) {
    throw Error(ErrorKind::LinearSolveFailure, kModule,
                "banded solve failed (zgbtrs info = " + std::to_string(info) + ")");
  }
  return x;
}

std::vector<double> lowest_eigenvalues(const BandedMatrix& h, std::size_t count) {
  const std::size_t n = h.size();
  const std::size_t kd = h.bandwidth();
  count = std::min(count, n);
  const std::size_t ldab = kd + 1;
  std::vector<cplx> ab(ldab * n, cplx(0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t lo = j > kd ? j - kd : 0;
    for (std::size_t i = lo; i <= j; ++i) ab[(kd + i - j) + j * ldab] = h.at(i, j);
  }
  std::vector<double> w(n);
  std::vector<int> ifail(n);
  cplx q_dummy;
  cplx z_dummy;
  lapack_int found = 0;
  const lapack_int info = LAPACKE_zhbevx(
      LAPACK_COL_MAJOR, 'N', 'I', 'U', static_cast<int>(n), static_cast<int>(kd),
      reinterpret_cast<lapack_complex_double*>(ab.data()), static_cast<int>(ldab),
      reinterpret_cast<lapack_complex_double*>(&q_dummy), 1, 0.0, 0.0, 1,
      static_cast<int>(count), 0.0, &found, w.data(),
      reinterpret_cast<lapack_complex_double*>(&z_dummy), 1, ifail.data());
  if (info != 0) {
    throw Error(ErrorKind::LinearSolveFailure, kModule,
                "banded eigensolver failed (zhbevx info = " + std::to_string(info) + ")");
  }
  w.resize(static_cast<std::size_t>(found));
  return w;
}

BandedMatrix kinetic_sandwich(double dx, std::span<const double> outer,
                              std::span<const double> inner, double mass, int order) {
  const std::size_t n = outer.size();
  if (inner.size() != n + 1) {
    throw Error(ErrorKind::InvalidArgument, kModule, "kinetic_sandwich needs n+1 midpoint weights");
  }
  const auto a = staggered_coefficients(order);
  const std::size_t q = a.size();
  BandedMatrix h(n, 2 * q - 1);
  std::vector<std::pair<long, double>> row;
  for (std::size_t r = 0; r <= n; ++r) {
    // Midpoint between nodes k and k+1 with k = r - 1.
    const long k = static_cast<long>(r) - 1;
    row.clear();
    for (std::size_t j = 1; j <= q; ++j) {
      const long right = k + static_cast<long>(j);
      const long left = k + 1 - static_cast<long>(j);
      if (right >= 0 && right < static_cast<long>(n)) {
        row.emplace_back(right, outer[static_cast<std::size_t>(right)] * a[j - 1] / dx);
      }
      if (left >= 0 && left < static_cast<long>(n)) {
        row.emplace_back(left, -outer[static_cast<std::size_t>(left)] * a[j - 1] / dx);
      }
    }
    const double m = inner[r] / (2.0 * mass);
    for (const auto& [i, ki] : row) {
      for (const auto& [l, kl] : row) {
        h.add(static_cast<std::size_t>(i), static_cast<std::size_t>(l), m * (ki * kl));
      }
    }
  }
  return h;
}

BandedMatrix anticommutator_with_momentum(double dx, std::span<const double> g, int order) {
  const std::size_t n = g.size();
  const auto c = central_coefficients(order);
  const std::size_t q = c.size();
  BandedMatrix out(n, q);
  const cplx mi(0.0, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 1; j <= q; ++j) {
      const double kc = c[j - 1] / dx;
      // (-i K)(i, i+j) = -i kc, (-i K)(i, i-j) = +i kc
      if (i + j < n) out.add(i, i + j, mi * kc * (g[i] + g[i + j]));
      if (i >= j) out.add(i, i - j, -mi * kc * (g[i] + g[i - j]));
    }
  }
  return out;
}

}  // namespace canonflow
