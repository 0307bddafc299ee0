#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "graphsim/tensor.hpp"

namespace graphsim::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool has_grad = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() {
    grad.fill(0.0);
    has_grad = false;
  }
};

double sigmoid(double x);

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

// Z = A * X * W. A: N x N (or any R x N), X: N x Qin, W: Qin x Qout.
struct GraphConvCache {
  Tensor A;
  Tensor X;
  Tensor AX;
  bool valid = false;
};

Tensor graph_conv_forward(const Tensor& A, const Tensor& X, const Tensor& W,
                          GraphConvCache* cache = nullptr);
// Accumulates into dW; returns dX.
Tensor graph_conv_backward(const GraphConvCache& cache, const Tensor& W, const Tensor& dZ,
                           Tensor& dW);

// Depthwise kernel-3 temporal convolution, zero padded. X: N x Q x T,
// kernel: Q x 3 ordered (previous, current, next), bias: Q.
Tensor temporal_conv_forward(const Tensor& X, const Tensor& kernel, const Tensor& bias);

// Same convolution on frame-major data: X is T x M x C.
Tensor temporal_conv_frames(const Tensor& X, const Tensor& kernel, const Tensor& bias);
// Accumulates dK, db; returns dX (T x M x C).
Tensor temporal_conv_frames_backward(const Tensor& X, const Tensor& kernel, const Tensor& dY,
                                     Tensor& dK, Tensor& db);

double prelu(double x, double a);
Tensor prelu_forward(const Tensor& X, double a);
// Returns dX; accumulates the slope gradient into da.
Tensor prelu_backward(const Tensor& X, double a, const Tensor& dY, double& da);

class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& name, std::size_t input, std::size_t hidden);

  struct Step {
    Tensor x, h_prev, c_prev;
    Tensor i, f, g, o;
    Tensor c, tanh_c, h;
  };
  struct Trace {
    std::vector<Step> steps;
  };

  std::size_t input_size() const { return input_; }
  std::size_t hidden_size() const { return hidden_; }

  // One cell update; gate order in W/U/b is [input, forget, candidate, output].
  Step step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev) const;
  // X: T x input. Returns T x hidden hidden states; zero initial state.
  Tensor forward(const Tensor& X, Trace* trace = nullptr) const;
  // dH: T x hidden. Accumulates parameter gradients, returns dX (T x input).
  Tensor backward(const Trace& trace, const Tensor& dH);

  void init(std::mt19937_64& rng);
  std::vector<Parameter*> parameters() { return {&W, &U, &b}; }

  Parameter W;  // 4H x input
  Parameter U;  // 4H x H
  Parameter b;  // 4H

 private:
  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
};

// score_t = w2 . tanh(W1 h_t); alpha = softmax(score); context = sum alpha_t h_t.
class Attention {
 public:
  Attention() = default;
  Attention(const std::string& name, std::size_t features, std::size_t hidden);

  struct Trace {
    Tensor H;      // T x F
    Tensor U;      // T x hidden, tanh activations
    Tensor alpha;  // T
  };

  Tensor forward(const Tensor& H, Trace* trace = nullptr) const;  // returns F
  Tensor backward(const Trace& trace, const Tensor& dcontext);    // returns dH

  void init(std::mt19937_64& rng);
  std::vector<Parameter*> parameters() { return {&W1, &w2}; }

  Parameter W1;  // hidden x F
  Parameter w2;  // hidden
};

std::vector<double> softmax(const std::vector<double>& scores);

struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
};

inline constexpr double kProbabilityClamp = 1e-7;

// Weighted binary cross-entropy of one example; p is clamped to
// [1e-7, 1 - 1e-7] before the logarithm.
double bce_loss(double p, int y, ClassWeights w = {});
double bce_loss_batch(const std::vector<double>& p, const std::vector<int>& y, ClassWeights w = {});
// d loss / d logit for p = sigmoid(logit); zero where the clamp is active.
double bce_grad_logit(double p, int y, ClassWeights w = {});

class Adam {
 public:
  explicit Adam(double lr = 2e-6, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Applies one update to every parameter; throws if no gradient is populated.
  void step(const std::vector<Parameter*>& params);

  double learning_rate() const { return lr_; }
  std::int64_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace graphsim::nn
