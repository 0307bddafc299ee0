#pragma once

#include <cstddef>
#include <span>

#include "graphsim/tensor.hpp"

// Dense kernels used by the network layers. Every kernel has a serial
// reference and an OpenMP variant. Both accumulate each output element in
// the same order, so they agree bit-for-bit at any thread count.
namespace graphsim::kernels {

enum class Backend { Serial, OpenMP };

void set_backend(Backend b);
Backend backend();

namespace serial {
// c[m x n] = a[m x k] * b[k x n]
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
// c[m x n] = a[k x m]^T * b[k x n]
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
// Depthwise kernel-3 convolution over time, zero padded. x and y are T x M x C,
// kernel is C x 3 (previous, current, next), bias has C entries.
void temporal_conv(std::span<const double> x, std::span<const double> kernel,
                   std::span<const double> bias, std::span<double> y, std::size_t T,
                   std::size_t M, std::size_t C);
}  // namespace serial

namespace omp {
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void temporal_conv(std::span<const double> x, std::span<const double> kernel,
                   std::span<const double> bias, std::span<double> y, std::size_t T,
                   std::size_t M, std::size_t C);
}  // namespace omp

// Dispatching tensor-level wrappers; shapes are checked.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);

}  // namespace graphsim::kernels
