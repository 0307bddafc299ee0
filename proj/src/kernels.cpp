#include "graphsim/kernels.hpp"

#include <atomic>

#include "graphsim/error.hpp"

namespace graphsim::kernels {

namespace {
std::atomic<Backend> g_backend{Backend::Serial};
// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;
}  // namespace

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * m + i];
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] = s;
    }
  }
}

void temporal_conv(std::span<const double> x, std::span<const double> kernel,
                   std::span<const double> bias, std::span<double> y, std::size_t T,
                   std::size_t M, std::size_t C) {
  const std::size_t frame = M * C;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < M; ++r) {
      for (std::size_t ch = 0; ch < C; ++ch) {
        const std::size_t idx = r * C + ch;
        double s = bias[ch];
        if (t > 0) s += kernel[ch * 3 + 0] * x[(t - 1) * frame + idx];
        s += kernel[ch * 3 + 1] * x[t * frame + idx];
        if (t + 1 < T) s += kernel[ch * 3 + 2] * x[(t + 1) * frame + idx];
        y[t * frame + idx] = s;
      }
    }
  }
}

}  // namespace serial

namespace omp {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelWork)
  for (long i = 0; i < rows; ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelWork)
  for (long i = 0; i < rows; ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * m + i];
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelWork)
  for (long i = 0; i < rows; ++i) {
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] = s;
    }
  }
}

void temporal_conv(std::span<const double> x, std::span<const double> kernel,
                   std::span<const double> bias, std::span<double> y, std::size_t T,
                   std::size_t M, std::size_t C) {
  const std::size_t frame = M * C;
  const long total = static_cast<long>(T * M);
#pragma omp parallel for schedule(static) if (T * M * C >= kParallelWork)
  for (long tr = 0; tr < total; ++tr) {
    const std::size_t t = static_cast<std::size_t>(tr) / M;
    const std::size_t r = static_cast<std::size_t>(tr) % M;
    for (std::size_t ch = 0; ch < C; ++ch) {
      const std::size_t idx = r * C + ch;
      double s = bias[ch];
      if (t > 0) s += kernel[ch * 3 + 0] * x[(t - 1) * frame + idx];
      s += kernel[ch * 3 + 1] * x[t * frame + idx];
      if (t + 1 < T) s += kernel[ch * 3 + 2] * x[(t + 1) * frame + idx];
      y[t * frame + idx] = s;
    }
  }
}

}  // namespace omp

namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ComputeError(std::string(what) + " must be a matrix");
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  if (a.dim(1) != b.dim(0)) {
    throw ComputeError("matmul shape mismatch " + a.shape_string() + " x " + b.shape_string());
  }
  Tensor c({a.dim(0), b.dim(1)});
  if (backend() == Backend::OpenMP) {
    omp::matmul(a.values(), b.values(), c.values(), a.dim(0), a.dim(1), b.dim(1));
  } else {
    serial::matmul(a.values(), b.values(), c.values(), a.dim(0), a.dim(1), b.dim(1));
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn lhs");
  require_matrix(b, "matmul_tn rhs");
  if (a.dim(0) != b.dim(0)) {
    throw ComputeError("matmul_tn shape mismatch " + a.shape_string() + " x " +
                       b.shape_string());
  }
  Tensor c({a.dim(1), b.dim(1)});
  if (backend() == Backend::OpenMP) {
    omp::matmul_tn(a.values(), b.values(), c.values(), a.dim(1), a.dim(0), b.dim(1));
  } else {
    serial::matmul_tn(a.values(), b.values(), c.values(), a.dim(1), a.dim(0), b.dim(1));
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt lhs");
  require_matrix(b, "matmul_nt rhs");
  if (a.dim(1) != b.dim(1)) {
    throw ComputeError("matmul_nt shape mismatch " + a.shape_string() + " x " +
                       b.shape_string());
  }
  Tensor c({a.dim(0), b.dim(0)});
  if (backend() == Backend::OpenMP) {
    omp::matmul_nt(a.values(), b.values(), c.values(), a.dim(0), a.dim(1), b.dim(0));
  } else {
    serial::matmul_nt(a.values(), b.values(), c.values(), a.dim(0), a.dim(1), b.dim(0));
  }
  return c;
}

}  // namespace graphsim::kernels
