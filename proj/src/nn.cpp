#include "graphsim/nn.hpp"

#include <algorithm>
#include <cmath>

#include "graphsim/error.hpp"
#include "graphsim/kernels.hpp"

namespace graphsim::nn {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  // Drawn from raw 64-bit output so the stream does not depend on the
  // standard library's distribution implementation.
  for (double& v : t.values()) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v = (2.0 * u - 1.0) * limit;
  }
}

Tensor graph_conv_forward(const Tensor& A, const Tensor& X, const Tensor& W,
                          GraphConvCache* cache) {
  if (A.rank() != 2 || X.rank() != 2 || W.rank() != 2 || A.dim(1) != X.dim(0) ||
      X.dim(1) != W.dim(0)) {
    throw ComputeError("graph_conv: shapes " + A.shape_string() + ", " + X.shape_string() +
                       ", " + W.shape_string() + " not conformable");
  }
  Tensor AX = kernels::matmul(A, X);
  Tensor Z = kernels::matmul(AX, W);
  if (cache != nullptr) {
    cache->A = A;
    cache->X = X;
    cache->AX = std::move(AX);
    cache->valid = true;
  }
  return Z;
}

Tensor graph_conv_backward(const GraphConvCache& cache, const Tensor& W, const Tensor& dZ,
                           Tensor& dW) {
  if (!cache.valid) throw ComputeError("graph_conv backward called before forward");
  const Tensor gW = kernels::matmul_tn(cache.AX, dZ);
  for (std::size_t k = 0; k < dW.size(); ++k) dW[k] += gW[k];
  const Tensor dAX = kernels::matmul_nt(dZ, W);
  return kernels::matmul_tn(cache.A, dAX);
}

namespace {

void check_temporal(const Tensor& X, const Tensor& kernel, const Tensor& bias, std::size_t channels) {
  if (kernel.rank() != 2 || kernel.dim(0) != channels || kernel.dim(1) != 3 ||
      bias.size() != channels) {
    throw ComputeError("temporal_conv: kernel " + kernel.shape_string() + " / bias " +
                       bias.shape_string() + " do not match input " + X.shape_string());
  }
}

void run_temporal(std::span<const double> x, const Tensor& kernel, const Tensor& bias,
                  std::span<double> y, std::size_t T, std::size_t M, std::size_t C) {
  if (kernels::backend() == kernels::Backend::OpenMP) {
    kernels::omp::temporal_conv(x, kernel.values(), bias.values(), y, T, M, C);
  } else {
    kernels::serial::temporal_conv(x, kernel.values(), bias.values(), y, T, M, C);
  }
}

}  // namespace

Tensor temporal_conv_forward(const Tensor& X, const Tensor& kernel, const Tensor& bias) {
  if (X.rank() != 3) throw ComputeError("temporal_conv: input must be N x Q x T");
  const std::size_t N = X.dim(0), Q = X.dim(1), T = X.dim(2);
  check_temporal(X, kernel, bias, Q);
  Tensor frames({T, N, Q});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t q = 0; q < Q; ++q)
      for (std::size_t t = 0; t < T; ++t) frames.at(t, n, q) = X.at(n, q, t);
  Tensor out_frames({T, N, Q});
  run_temporal(frames.values(), kernel, bias, out_frames.values(), T, N, Q);
  Tensor Y({N, Q, T});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t q = 0; q < Q; ++q)
      for (std::size_t t = 0; t < T; ++t) Y.at(n, q, t) = out_frames.at(t, n, q);
  return Y;
}

Tensor temporal_conv_frames(const Tensor& X, const Tensor& kernel, const Tensor& bias) {
  if (X.rank() != 3) throw ComputeError("temporal_conv: input must be T x M x C");
  check_temporal(X, kernel, bias, X.dim(2));
  Tensor Y(X.shape());
  run_temporal(X.values(), kernel, bias, Y.values(), X.dim(0), X.dim(1), X.dim(2));
  return Y;
}

Tensor temporal_conv_frames_backward(const Tensor& X, const Tensor& kernel, const Tensor& dY,
                                     Tensor& dK, Tensor& db) {
  const std::size_t T = X.dim(0), M = X.dim(1), C = X.dim(2);
  Tensor dX(X.shape());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < M; ++r) {
      for (std::size_t c = 0; c < C; ++c) {
        const double g = dY.at(t, r, c);
        db[c] += g;
        dK.at(c, 1) += g * X.at(t, r, c);
        dX.at(t, r, c) += g * kernel.at(c, 1);
        if (t > 0) {
          dK.at(c, 0) += g * X.at(t - 1, r, c);
          dX.at(t - 1, r, c) += g * kernel.at(c, 0);
        }
        if (t + 1 < T) {
          dK.at(c, 2) += g * X.at(t + 1, r, c);
          dX.at(t + 1, r, c) += g * kernel.at(c, 2);
        }
      }
    }
  }
  return dX;
}

double prelu(double x, double a) { return x >= 0.0 ? x : a * x; }

Tensor prelu_forward(const Tensor& X, double a) {
  Tensor Y(X.shape());
  for (std::size_t k = 0; k < X.size(); ++k) Y[k] = prelu(X[k], a);
  return Y;
}

Tensor prelu_backward(const Tensor& X, double a, const Tensor& dY, double& da) {
  Tensor dX(X.shape());
  for (std::size_t k = 0; k < X.size(); ++k) {
    if (X[k] >= 0.0) {
      dX[k] = dY[k];
    } else {
      dX[k] = a * dY[k];
      da += X[k] * dY[k];
    }
  }
  return dX;
}

Lstm::Lstm(const std::string& name, std::size_t input, std::size_t hidden)
    : W(name + ".W", Tensor({4 * hidden, input})),
      U(name + ".U", Tensor({4 * hidden, hidden})),
      b(name + ".b", Tensor({4 * hidden})),
      input_(input),
      hidden_(hidden) {}

void Lstm::init(std::mt19937_64& rng) {
  glorot_uniform(W.value, input_, 4 * hidden_, rng);
  glorot_uniform(U.value, hidden_, 4 * hidden_, rng);
  b.value.fill(0.0);
}

Lstm::Step Lstm::step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev) const {
  const std::size_t H = hidden_;
  if (x.size() != input_ || h_prev.size() != H || c_prev.size() != H) {
    throw ComputeError("lstm_step: expected input " + std::to_string(input_) + ", hidden " +
                       std::to_string(H));
  }
  const Tensor xin({input_, 1}, std::vector<double>(x.values().begin(), x.values().end()));
  const Tensor hin({H, 1}, std::vector<double>(h_prev.values().begin(), h_prev.values().end()));
  const Tensor zx = kernels::matmul(W.value, xin);
  const Tensor zh = kernels::matmul(U.value, hin);
  Step s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  s.i = s.f = s.g = s.o = s.c = s.tanh_c = s.h = Tensor({H});
  for (std::size_t k = 0; k < H; ++k) {
    s.i[k] = sigmoid(zx[k] + zh[k] + b.value[k]);
    s.f[k] = sigmoid(zx[H + k] + zh[H + k] + b.value[H + k]);
    s.g[k] = std::tanh(zx[2 * H + k] + zh[2 * H + k] + b.value[2 * H + k]);
    s.o[k] = sigmoid(zx[3 * H + k] + zh[3 * H + k] + b.value[3 * H + k]);
    s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.g[k];
    s.tanh_c[k] = std::tanh(s.c[k]);
    s.h[k] = s.o[k] * s.tanh_c[k];
  }
  return s;
}

Tensor Lstm::forward(const Tensor& X, Trace* trace) const {
  if (X.rank() != 2 || X.dim(1) != input_) {
    throw ComputeError("lstm: input " + X.shape_string() + " expected T x " +
                       std::to_string(input_));
  }
  const std::size_t T = X.dim(0);
  Tensor Hout({T, hidden_});
  Tensor h({hidden_});
  Tensor c({hidden_});
  if (trace != nullptr) trace->steps.clear();
  for (std::size_t t = 0; t < T; ++t) {
    Tensor x({input_});
    std::copy_n(X.data() + t * input_, input_, x.data());
    Step s = step(x, h, c);
    h = s.h;
    c = s.c;
    std::copy_n(h.data(), hidden_, Hout.data() + t * hidden_);
    if (trace != nullptr) trace->steps.push_back(std::move(s));
  }
  return Hout;
}

Tensor Lstm::backward(const Trace& trace, const Tensor& dH) {
  const std::size_t T = trace.steps.size();
  const std::size_t H = hidden_;
  if (T == 0) throw ComputeError("lstm backward called before forward");
  if (dH.rank() != 2 || dH.dim(0) != T || dH.dim(1) != H) {
    throw ComputeError("lstm backward: gradient shape " + dH.shape_string());
  }
  Tensor dX({T, input_});
  Tensor dh_next({H});
  Tensor dc_next({H});
  Tensor dz({4 * H, 1});
  for (std::size_t tt = T; tt-- > 0;) {
    const Step& s = trace.steps[tt];
    for (std::size_t k = 0; k < H; ++k) {
      const double dh = dH.at(tt, k) + dh_next[k];
      const double d_o = dh * s.tanh_c[k];
      const double dc = dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[k];
      dz[k] = dc * s.g[k] * s.i[k] * (1.0 - s.i[k]);
      dz[H + k] = dc * s.c_prev[k] * s.f[k] * (1.0 - s.f[k]);
      dz[2 * H + k] = dc * s.i[k] * (1.0 - s.g[k] * s.g[k]);
      dz[3 * H + k] = d_o * s.o[k] * (1.0 - s.o[k]);
      dc_next[k] = dc * s.f[k];
    }
    for (std::size_t r = 0; r < 4 * H; ++r) {
      const double g = dz[r];
      b.grad[r] += g;
      double* wrow = W.grad.data() + r * input_;
      for (std::size_t k = 0; k < input_; ++k) wrow[k] += g * s.x[k];
      double* urow = U.grad.data() + r * H;
      for (std::size_t k = 0; k < H; ++k) urow[k] += g * s.h_prev[k];
    }
    const Tensor dx = kernels::matmul_tn(W.value, dz);
    std::copy_n(dx.data(), input_, dX.data() + tt * input_);
    const Tensor dh_prev = kernels::matmul_tn(U.value, dz);
    std::copy_n(dh_prev.data(), H, dh_next.data());
  }
  W.has_grad = U.has_grad = b.has_grad = true;
  return dX;
}

std::vector<double> softmax(const std::vector<double>& scores) {
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  const double peak = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - peak);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Attention::Attention(const std::string& name, std::size_t features, std::size_t hidden)
    : W1(name + ".W1", Tensor({hidden, features})), w2(name + ".w2", Tensor({hidden})) {}

void Attention::init(std::mt19937_64& rng) {
  glorot_uniform(W1.value, W1.value.dim(1), W1.value.dim(0), rng);
  glorot_uniform(w2.value, w2.value.dim(0), 1, rng);
}

Tensor Attention::forward(const Tensor& H, Trace* trace) const {
  const std::size_t F = W1.value.dim(1);
  const std::size_t K = W1.value.dim(0);
  if (H.rank() != 2 || H.dim(1) != F || H.dim(0) == 0) {
    throw ComputeError("attention: input " + H.shape_string() + " expected T x " +
                       std::to_string(F));
  }
  const std::size_t T = H.dim(0);
  Tensor U = kernels::matmul_nt(H, W1.value);  // T x K
  std::vector<double> scores(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      U.at(t, k) = std::tanh(U.at(t, k));
      scores[t] += w2.value[k] * U.at(t, k);
    }
  }
  const std::vector<double> alpha = softmax(scores);
  Tensor ctx({F});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) ctx[f] += alpha[t] * H.at(t, f);
  if (trace != nullptr) {
    trace->H = H;
    trace->U = std::move(U);
    trace->alpha = Tensor({T}, alpha);
  }
  return ctx;
}

Tensor Attention::backward(const Trace& trace, const Tensor& dctx) {
  if (trace.H.size() == 0) throw ComputeError("attention backward called before forward");
  const std::size_t T = trace.H.dim(0);
  const std::size_t F = trace.H.dim(1);
  const std::size_t K = W1.value.dim(0);
  Tensor dH({T, F});
  std::vector<double> dalpha(T, 0.0);
  double weighted = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      dalpha[t] += dctx[f] * trace.H.at(t, f);
      dH.at(t, f) += trace.alpha[t] * dctx[f];
    }
    weighted += trace.alpha[t] * dalpha[t];
  }
  Tensor dpre({T, K});
  for (std::size_t t = 0; t < T; ++t) {
    const double ds = trace.alpha[t] * (dalpha[t] - weighted);
    for (std::size_t k = 0; k < K; ++k) {
      const double u = trace.U.at(t, k);
      w2.grad[k] += ds * u;
      dpre.at(t, k) = ds * w2.value[k] * (1.0 - u * u);
    }
  }
  const Tensor gW1 = kernels::matmul_tn(dpre, trace.H);  // K x F
  for (std::size_t k = 0; k < gW1.size(); ++k) W1.grad[k] += gW1[k];
  const Tensor dH_scores = kernels::matmul(dpre, W1.value);  // T x F
  for (std::size_t k = 0; k < dH.size(); ++k) dH[k] += dH_scores[k];
  W1.has_grad = w2.has_grad = true;
  return dH;
}

namespace {

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

}  // namespace

double bce_loss(double p, int y, ClassWeights w) {
  const double pc = clamp_probability(p);
  return y == 1 ? -w.positive * std::log(pc) : -w.negative * std::log(1.0 - pc);
}

double bce_loss_batch(const std::vector<double>& p, const std::vector<int>& y, ClassWeights w) {
  if (p.size() != y.size() || p.empty()) throw ComputeError("bce_loss_batch: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += bce_loss(p[i], y[i], w);
  return total / static_cast<double>(p.size());
}

double bce_grad_logit(double p, int y, ClassWeights w) {
  if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
  return y == 1 ? -w.positive * (1.0 - p) : w.negative * p;
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(lr > 0.0)) throw ConfigError("Adam learning rate must be positive");
}

void Adam::step(const std::vector<Parameter*>& params) {
  const bool any = std::any_of(params.begin(), params.end(),
                               [](const Parameter* p) { return p->has_grad; });
  if (!any) throw ComputeError("Adam step with no populated gradients");
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) throw ComputeError("Adam parameter set changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (m_[i].shape() != p.value.shape()) throw ComputeError("Adam moment shape mismatch");
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g;
      v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g * g;
      const double mhat = m_[i][k] / c1;
      const double vhat = v_[i][k] / c2;
      p.value[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace graphsim::nn
