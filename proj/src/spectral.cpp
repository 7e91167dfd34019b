#include "canonflow/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "canonflow/error.hpp"

namespace canonflow {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct FourierTransform::Impl {
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

FourierTransform::FourierTransform(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "gridspace", "zero-length transform");
  std::lock_guard lock(planner_mutex());
  impl_->in = fftw_alloc_complex(n);
  impl_->out = fftw_alloc_complex(n);
  const int ni = static_cast<int>(n);
  impl_->fwd = fftw_plan_dft_1d(ni, impl_->in, impl_->out, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->bwd = fftw_plan_dft_1d(ni, impl_->in, impl_->out, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FourierTransform::~FourierTransform() {
  if (!impl_) return;
  std::lock_guard lock(planner_mutex());
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
  fftw_free(impl_->in);
  fftw_free(impl_->out);
}

FourierTransform::FourierTransform(FourierTransform&&) noexcept = default;
FourierTransform& FourierTransform::operator=(FourierTransform&&) noexcept = default;

void FourierTransform::forward(std::span<const cplx> in, std::span<cplx> out) {
  std::copy(in.begin(), in.end(), reinterpret_cast<cplx*>(impl_->in));
  fftw_execute(impl_->fwd);
  std::copy_n(reinterpret_cast<const cplx*>(impl_->out), n_, out.begin());
}

void FourierTransform::backward(std::span<const cplx> in, std::span<cplx> out) {
  std::copy(in.begin(), in.end(), reinterpret_cast<cplx*>(impl_->in));
  fftw_execute(impl_->bwd);
  std::copy_n(reinterpret_cast<const cplx*>(impl_->out), n_, out.begin());
}

std::vector<double> wavenumbers(std::size_t n, double dx) {
  std::vector<double> k(n);
  const double base = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
  for (std::size_t j = 0; j < n; ++j) {
    const auto sj = static_cast<double>(j);
    k[j] = (j <= n / 2 ? sj : sj - static_cast<double>(n)) * base;
  }
  return k;
}

std::vector<cplx> spectral_derivative(std::span<const cplx> values, double dx, int order) {
  const std::size_t n = values.size();
  FourierTransform ft(n);
  std::vector<cplx> hat(n), out(n);
  ft.forward(values, hat);
  const auto k = wavenumbers(n, dx);
  const cplx ik_unit(0.0, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (order % 2 == 1 && n % 2 == 0 && j == n / 2) {
      hat[j] = 0.0;
      continue;
    }
    cplx factor = 1.0 / static_cast<double>(n);
    for (int i = 0; i < order; ++i) factor *= ik_unit * k[j];
    hat[j] *= factor;
  }
  ft.backward(hat, out);
  return out;
}

}  // namespace canonflow
