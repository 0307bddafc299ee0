#include "graphsim/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "graphsim/error.hpp"

namespace graphsim {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != element_count(shape_)) {
    throw ComputeError("tensor value count does not match shape " + shape_string());
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

}  // namespace graphsim
