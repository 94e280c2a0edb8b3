#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ytlc/kernels.hpp"
#include "ytlc/rng.hpp"
#include "ytlc/tensor.hpp"

// Layer forward/backward passes. Every layer caches what its backward needs
// during forward; backward consumes the upstream gradient, accumulates into
// parameter grads, and returns the input gradient. Gradients are realized
// per layer by hand; the finite-difference checker at the bottom is the
// independent referee.

namespace ytlc::nn {

enum class Mode { Train, Eval };

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(value.shape),
        trainable(train) {}
};

template <typename T>
using ParamRefs = std::vector<Parameter<T>*>;

template <typename T>
void glorot_uniform(Tensor<T>& w, long fan_in, long fan_out, Rng& rng) {
  T limit = static_cast<T>(
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
  for (auto& x : w.data) x = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
void normal_init(Tensor<T>& w, double stddev, Rng& rng) {
  for (auto& x : w.data) x = static_cast<T>(rng.normal() * stddev);
}

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// ---------------------------------------------------------------------------
// Dense: y = xW + b, x [batch, in], W [in, out].

template <typename T>
struct Dense {
  Parameter<T> W, b;
  Tensor<T> x_cache;

  Dense() = default;
  Dense(long in, long out, const std::string& name, Rng& rng)
      : W(name + ".W", Tensor<T>({in, out})),
        b(name + ".b", Tensor<T>({out})) {
    glorot_uniform(W.value, in, out, rng);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    check(x.rank() == 2 && x.dim(1) == W.value.dim(0),
          "dense: input shape mismatch");
    long batch = x.dim(0), in = W.value.dim(0), out = W.value.dim(1);
    Tensor<T> y({batch, out});
    for (long i = 0; i < batch; ++i) {
      T* yr = y.row(i);
      for (long o = 0; o < out; ++o) yr[o] = b.value(o);
      for (long k = 0; k < in; ++k)
        kern::axpy(x(i, k), W.value.row(k), yr, static_cast<std::size_t>(out));
    }
    x_cache = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    long batch = x_cache.dim(0), in = W.value.dim(0), out = W.value.dim(1);
    check(dy.rank() == 2 && dy.dim(0) == batch && dy.dim(1) == out,
          "dense: upstream gradient shape mismatch");
    Tensor<T> dx({batch, in});
    for (long i = 0; i < batch; ++i) {
      const T* dyr = dy.row(i);
      for (long k = 0; k < in; ++k) {
        dx(i, k) = kern::dot(dyr, W.value.row(k), static_cast<std::size_t>(out));
        kern::axpy(x_cache(i, k), dyr, W.grad.row(k),
                   static_cast<std::size_t>(out));
      }
      kern::axpy(T(1), dyr, b.grad.ptr(), static_cast<std::size_t>(out));
    }
    return dx;
  }

  void params(ParamRefs<T>& out) {
    out.push_back(&W);
    out.push_back(&b);
  }
};

// ---------------------------------------------------------------------------
// Conv1d: valid padding, stride 1. x [B, L, Cin], kernels [W, Cin, Cout].

template <typename T>
struct Conv1d {
  Parameter<T> K, b;
  Tensor<T> x_cache;

  Conv1d() = default;
  Conv1d(long width, long in_ch, long out_ch, const std::string& name,
         Rng& rng)
      : K(name + ".K", Tensor<T>({width, in_ch, out_ch})),
        b(name + ".b", Tensor<T>({out_ch})) {
    glorot_uniform(K.value, width * in_ch, out_ch, rng);
  }

  long width() const { return K.value.dim(0); }

  Tensor<T> forward(const Tensor<T>& x) {
    long w = K.value.dim(0), cin = K.value.dim(1), cout = K.value.dim(2);
    check(x.rank() == 3 && x.dim(2) == cin, "conv1d: input shape mismatch");
    check(x.dim(1) >= w, "conv1d: sequence shorter than kernel width");
    long batch = x.dim(0), lout = x.dim(1) - w + 1;
    Tensor<T> y({batch, lout, cout});
    for (long bi = 0; bi < batch; ++bi) {
      for (long t = 0; t < lout; ++t) {
        T* yr = y.row(bi, t);
        for (long o = 0; o < cout; ++o) yr[o] = b.value(o);
        for (long k = 0; k < w; ++k)
          for (long c = 0; c < cin; ++c)
            kern::axpy(x(bi, t + k, c), K.value.row(k, c), yr,
                       static_cast<std::size_t>(cout));
      }
    }
    x_cache = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    long w = K.value.dim(0), cin = K.value.dim(1), cout = K.value.dim(2);
    long batch = x_cache.dim(0), lout = dy.dim(1);
    Tensor<T> dx(x_cache.shape);
    for (long bi = 0; bi < batch; ++bi) {
      for (long t = 0; t < lout; ++t) {
        const T* dyr = dy.row(bi, t);
        kern::axpy(T(1), dyr, b.grad.ptr(), static_cast<std::size_t>(cout));
        for (long k = 0; k < w; ++k) {
          for (long c = 0; c < cin; ++c) {
            kern::axpy(x_cache(bi, t + k, c), dyr, K.grad.row(k, c),
                       static_cast<std::size_t>(cout));
            dx(bi, t + k, c) += kern::dot(K.value.row(k, c), dyr,
                                          static_cast<std::size_t>(cout));
          }
        }
      }
    }
    return dx;
  }

  void params(ParamRefs<T>& out) {
    out.push_back(&K);
    out.push_back(&b);
  }
};

// ---------------------------------------------------------------------------
// BatchNorm1d over (batch, len) per channel. x [B, L, C].

template <typename T>
struct BatchNorm1d {
  Parameter<T> gamma, beta;
  // Running statistics ride along as non-trainable parameters so checkpoints
  // and best-epoch snapshots carry them automatically.
  Parameter<T> running_mean_p, running_var_p;
  T eps = static_cast<T>(1e-3);
  T momentum = static_cast<T>(0.99);
  bool ever_trained = false;

  Tensor<T> xhat_cache;
  std::vector<T> invstd_cache;

  BatchNorm1d() = default;
  BatchNorm1d(long channels, const std::string& name)
      : gamma(name + ".gamma", Tensor<T>({channels})),
        beta(name + ".beta", Tensor<T>({channels})),
        running_mean_p(name + ".running_mean", Tensor<T>({channels}), false),
        running_var_p(name + ".running_var", Tensor<T>({channels}), false) {
    gamma.value.fill(T(1));
    running_var_p.value.fill(T(1));
  }

  Tensor<T>& running_mean() { return running_mean_p.value; }
  Tensor<T>& running_var() { return running_var_p.value; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    check(x.rank() == 3 && x.dim(2) == gamma.value.dim(0),
          "batchnorm1d: input shape mismatch");
    long batch = x.dim(0), len = x.dim(1), ch = x.dim(2);
    Tensor<T> y(x.shape);
    if (mode == Mode::Train) {
      check(batch * len >= 2, "batchnorm1d: train mode needs batch*len >= 2");
      long n = batch * len;
      xhat_cache = Tensor<T>(x.shape);
      invstd_cache.assign(static_cast<std::size_t>(ch), T(0));
      for (long c = 0; c < ch; ++c) {
        T mean = 0;
        for (long b = 0; b < batch; ++b)
          for (long t = 0; t < len; ++t) mean += x(b, t, c);
        mean /= static_cast<T>(n);
        T var = 0;
        for (long b = 0; b < batch; ++b)
          for (long t = 0; t < len; ++t) {
            T d = x(b, t, c) - mean;
            var += d * d;
          }
        var /= static_cast<T>(n);
        T invstd = T(1) / std::sqrt(var + eps);
        invstd_cache[static_cast<std::size_t>(c)] = invstd;
        for (long b = 0; b < batch; ++b)
          for (long t = 0; t < len; ++t) {
            T xh = (x(b, t, c) - mean) * invstd;
            xhat_cache(b, t, c) = xh;
            y(b, t, c) = gamma.value(c) * xh + beta.value(c);
          }
        running_mean_p.value(c) =
            momentum * running_mean_p.value(c) + (T(1) - momentum) * mean;
        running_var_p.value(c) =
            momentum * running_var_p.value(c) + (T(1) - momentum) * var;
      }
      ever_trained = true;
    } else {
      for (long c = 0; c < ch; ++c) {
        T invstd = T(1) / std::sqrt(running_var_p.value(c) + eps);
        for (long b = 0; b < batch; ++b)
          for (long t = 0; t < len; ++t)
            y(b, t, c) = gamma.value(c) *
                             (x(b, t, c) - running_mean_p.value(c)) * invstd +
                         beta.value(c);
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    long batch = dy.dim(0), len = dy.dim(1), ch = dy.dim(2);
    long n = batch * len;
    Tensor<T> dx(dy.shape);
    for (long c = 0; c < ch; ++c) {
      T sum_dy = 0, sum_dy_xhat = 0;
      for (long b = 0; b < batch; ++b)
        for (long t = 0; t < len; ++t) {
          sum_dy += dy(b, t, c);
          sum_dy_xhat += dy(b, t, c) * xhat_cache(b, t, c);
        }
      gamma.grad(c) += sum_dy_xhat;
      beta.grad(c) += sum_dy;
      T scale = gamma.value(c) * invstd_cache[static_cast<std::size_t>(c)] /
                static_cast<T>(n);
      for (long b = 0; b < batch; ++b)
        for (long t = 0; t < len; ++t)
          dx(b, t, c) = scale * (static_cast<T>(n) * dy(b, t, c) - sum_dy -
                                 xhat_cache(b, t, c) * sum_dy_xhat);
    }
    return dx;
  }

  void params(ParamRefs<T>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
    out.push_back(&running_mean_p);
    out.push_back(&running_var_p);
  }
};

// ---------------------------------------------------------------------------
// MaxPool1d: non-overlapping windows, stride = size, remainder dropped.
// Backward routes to the argmax, first index on ties.

template <typename T>
struct MaxPool1d {
  long size = 3;
  std::vector<long> argmax_cache;
  std::vector<long> in_shape;

  explicit MaxPool1d(long s = 3) : size(s) {}

  Tensor<T> forward(const Tensor<T>& x) {
    check(x.rank() == 3, "maxpool1d: expects [batch, len, ch]");
    check(x.dim(1) >= size, "maxpool1d: sequence shorter than pool size");
    long batch = x.dim(0), lout = x.dim(1) / size, ch = x.dim(2);
    Tensor<T> y({batch, lout, ch});
    argmax_cache.assign(static_cast<std::size_t>(batch * lout * ch), 0);
    in_shape = x.shape;
    std::size_t ai = 0;
    for (long b = 0; b < batch; ++b)
      for (long t = 0; t < lout; ++t)
        for (long c = 0; c < ch; ++c, ++ai) {
          long best = t * size;
          T bv = x(b, best, c);
          for (long k = 1; k < size; ++k) {
            T v = x(b, t * size + k, c);
            if (v > bv) {
              bv = v;
              best = t * size + k;
            }
          }
          y(b, t, c) = bv;
          argmax_cache[ai] = best;
        }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(in_shape);
    long batch = dy.dim(0), lout = dy.dim(1), ch = dy.dim(2);
    std::size_t ai = 0;
    for (long b = 0; b < batch; ++b)
      for (long t = 0; t < lout; ++t)
        for (long c = 0; c < ch; ++c, ++ai)
          dx(b, argmax_cache[ai], c) += dy(b, t, c);
    return dx;
  }
};

template <typename T>
struct GlobalMaxPool1d {
  std::vector<long> argmax_cache;
  std::vector<long> in_shape;

  Tensor<T> forward(const Tensor<T>& x) {
    check(x.rank() == 3 && x.dim(1) >= 1, "global_maxpool1d: empty sequence");
    long batch = x.dim(0), len = x.dim(1), ch = x.dim(2);
    Tensor<T> y({batch, ch});
    argmax_cache.assign(static_cast<std::size_t>(batch * ch), 0);
    in_shape = x.shape;
    std::size_t ai = 0;
    for (long b = 0; b < batch; ++b)
      for (long c = 0; c < ch; ++c, ++ai) {
        long best = 0;
        T bv = x(b, 0, c);
        for (long t = 1; t < len; ++t)
          if (x(b, t, c) > bv) {
            bv = x(b, t, c);
            best = t;
          }
        y(b, c) = bv;
        argmax_cache[ai] = best;
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(in_shape);
    long batch = dy.dim(0), ch = dy.dim(1);
    std::size_t ai = 0;
    for (long b = 0; b < batch; ++b)
      for (long c = 0; c < ch; ++c, ++ai) dx(b, argmax_cache[ai], c) += dy(b, c);
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Inverted dropout: survivors scaled by 1/(1-rate) in train mode, identity
// in eval mode.

template <typename T>
struct Dropout {
  double rate = 0.0;
  Tensor<T> mask_cache;

  explicit Dropout(double r = 0.0) : rate(r) {
    check(r >= 0.0 && r < 1.0, "dropout: rate must be in [0, 1)");
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng& rng) {
    if (mode == Mode::Eval || rate == 0.0) {
      mask_cache = Tensor<T>();
      return x;
    }
    T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    mask_cache = Tensor<T>(x.shape);
    Tensor<T> y(x.shape);
    for (long i = 0; i < x.numel(); ++i) {
      T m = rng.uniform() < rate ? T(0) : keep_scale;
      mask_cache(i) = m;
      y(i) = x(i) * m;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    if (mask_cache.numel() == 0) return dy;
    Tensor<T> dx(dy.shape);
    kern::vmul(dy.ptr(), mask_cache.ptr(), dx.ptr(),
               static_cast<std::size_t>(dy.numel()));
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Embedding row gather. Backward scatter-adds only when trainable.

template <typename T>
struct Embedding {
  Parameter<T> E;
  std::vector<int> ids_cache;
  long batch_cache = 0, len_cache = 0;

  Embedding() = default;
  Embedding(Tensor<T> matrix, const std::string& name, bool trainable)
      : E(name + ".E", std::move(matrix), trainable) {}

  Tensor<T> forward(const std::vector<int>& ids, long batch, long len) {
    check(static_cast<long>(ids.size()) == batch * len,
          "embedding: id count mismatch");
    long vocab = E.value.dim(0), dim = E.value.dim(1);
    Tensor<T> y({batch, len, dim});
    for (long i = 0; i < batch * len; ++i) {
      int id = ids[static_cast<std::size_t>(i)];
      check(id >= 0 && id < vocab, "embedding: id out of range");
      const T* src = E.value.row(id);
      T* dst = y.ptr() + i * dim;
      for (long d = 0; d < dim; ++d) dst[d] = src[d];
    }
    ids_cache = ids;
    batch_cache = batch;
    len_cache = len;
    return y;
  }

  void backward(const Tensor<T>& dy) {
    if (!E.trainable) return;
    long dim = E.value.dim(1);
    for (long i = 0; i < batch_cache * len_cache; ++i) {
      int id = ids_cache[static_cast<std::size_t>(i)];
      kern::axpy(T(1), dy.ptr() + i * dim, E.grad.row(id),
                 static_cast<std::size_t>(dim));
    }
  }

  void params(ParamRefs<T>& out) { out.push_back(&E); }
};

// ---------------------------------------------------------------------------
// Elementwise activations.

template <typename T>
struct ReLU {
  Tensor<T> x_cache;
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    kern::relu(x.ptr(), y.ptr(), static_cast<std::size_t>(x.numel()));
    x_cache = x;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape);
    for (long i = 0; i < dy.numel(); ++i)
      dx(i) = x_cache(i) > T(0) ? dy(i) : T(0);
    return dx;
  }
};

template <typename T>
T gelu_scalar(T x) {
  return static_cast<T>(0.5) * x *
         (T(1) + std::erf(x / static_cast<T>(std::numbers::sqrt2)));
}

template <typename T>
T gelu_grad_scalar(T x) {
  T cdf = static_cast<T>(0.5) *
          (T(1) + std::erf(x / static_cast<T>(std::numbers::sqrt2)));
  T pdf = std::exp(-x * x / T(2)) /
          static_cast<T>(std::sqrt(2.0 * std::numbers::pi));
  return cdf + x * pdf;
}

template <typename T>
struct Gelu {
  Tensor<T> x_cache;
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (long i = 0; i < x.numel(); ++i) y(i) = gelu_scalar(x(i));
    x_cache = x;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape);
    for (long i = 0; i < dy.numel(); ++i)
      dx(i) = dy(i) * gelu_grad_scalar(x_cache(i));
    return dx;
  }
};

template <typename T>
T sigmoid_scalar(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                   : std::exp(x) / (T(1) + std::exp(x));
}

/// Numerically stabilized softmax over the last axis, in place on rows.
template <typename T>
void softmax_rows(Tensor<T>& x) {
  long cols = x.dim(x.rank() - 1);
  long rows = x.numel() / cols;
  for (long r = 0; r < rows; ++r) {
    T* p = x.ptr() + r * cols;
    T m = kern::reduce_max(p, static_cast<std::size_t>(cols));
    T sum = 0;
    for (long c = 0; c < cols; ++c) {
      p[c] = std::exp(p[c] - m);
      sum += p[c];
    }
    for (long c = 0; c < cols; ++c) p[c] /= sum;
  }
}

// ---------------------------------------------------------------------------
// LayerNorm over the last axis.

template <typename T>
struct LayerNorm {
  Parameter<T> gamma, beta;
  T eps = static_cast<T>(1e-12);
  Tensor<T> xhat_cache;
  std::vector<T> invstd_cache;

  LayerNorm() = default;
  LayerNorm(long width, const std::string& name)
      : gamma(name + ".gamma", Tensor<T>({width})),
        beta(name + ".beta", Tensor<T>({width})) {
    gamma.value.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    long w = gamma.value.dim(0);
    check(x.dim(x.rank() - 1) == w, "layer_norm: width mismatch");
    long rows = x.numel() / w;
    Tensor<T> y(x.shape);
    xhat_cache = Tensor<T>(x.shape);
    invstd_cache.assign(static_cast<std::size_t>(rows), T(0));
    for (long r = 0; r < rows; ++r) {
      const T* xr = x.ptr() + r * w;
      T mean = 0;
      for (long i = 0; i < w; ++i) mean += xr[i];
      mean /= static_cast<T>(w);
      T var = 0;
      for (long i = 0; i < w; ++i) {
        T d = xr[i] - mean;
        var += d * d;
      }
      var /= static_cast<T>(w);
      T invstd = T(1) / std::sqrt(var + eps);
      invstd_cache[static_cast<std::size_t>(r)] = invstd;
      T* xh = xhat_cache.ptr() + r * w;
      T* yr = y.ptr() + r * w;
      for (long i = 0; i < w; ++i) {
        xh[i] = (xr[i] - mean) * invstd;
        yr[i] = gamma.value(i) * xh[i] + beta.value(i);
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    long w = gamma.value.dim(0);
    long rows = dy.numel() / w;
    Tensor<T> dx(dy.shape);
    for (long r = 0; r < rows; ++r) {
      const T* dyr = dy.ptr() + r * w;
      const T* xh = xhat_cache.ptr() + r * w;
      T* dxr = dx.ptr() + r * w;
      T sum_g = 0, sum_gx = 0;
      for (long i = 0; i < w; ++i) {
        T g = dyr[i] * gamma.value(i);
        sum_g += g;
        sum_gx += g * xh[i];
        gamma.grad(i) += dyr[i] * xh[i];
        beta.grad(i) += dyr[i];
      }
      T invstd = invstd_cache[static_cast<std::size_t>(r)];
      for (long i = 0; i < w; ++i) {
        T g = dyr[i] * gamma.value(i);
        dxr[i] = invstd * (g - (sum_g + xh[i] * sum_gx) / static_cast<T>(w));
      }
    }
    return dx;
  }

  void params(ParamRefs<T>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }
};

// ---------------------------------------------------------------------------
// Bidirectional LSTM. Gate order i, f, g, o; zero initial states; forget
// bias initialized to 1. return_sequences=false yields
// concat(h_fwd at last step, h_bwd at first position).

template <typename T>
struct BiLstm {
  long input_dim = 0, units = 0;
  bool return_sequences = true;
  // [0]=forward direction, [1]=backward direction
  Parameter<T> Wx[2], Wh[2], b[2];

  Tensor<T> x_cache;
  // Per direction, indexed by processing step k: gates [B, L, 4U] and
  // states h, c [B, L, U].
  Tensor<T> gates_[2], h_[2], c_[2];

  BiLstm() = default;
  BiLstm(long in, long u, bool ret_seq, const std::string& name, Rng& rng)
      : input_dim(in), units(u), return_sequences(ret_seq) {
    const char* dn[2] = {"fwd", "bwd"};
    for (int d = 0; d < 2; ++d) {
      Wx[d] = Parameter<T>(name + "." + dn[d] + ".Wx", Tensor<T>({in, 4 * u}));
      Wh[d] = Parameter<T>(name + "." + dn[d] + ".Wh", Tensor<T>({u, 4 * u}));
      b[d] = Parameter<T>(name + "." + dn[d] + ".b", Tensor<T>({4 * u}));
      glorot_uniform(Wx[d].value, in, 4 * u, rng);
      glorot_uniform(Wh[d].value, u, 4 * u, rng);
      for (long j = u; j < 2 * u; ++j) b[d].value(j) = T(1);  // forget gate
    }
  }

  Tensor<T> forward(const Tensor<T>& x) {
    check(x.rank() == 3 && x.dim(2) == input_dim && x.dim(1) >= 1,
          "bilstm: input shape mismatch");
    long batch = x.dim(0), len = x.dim(1), u = units;
    x_cache = x;
    for (int d = 0; d < 2; ++d) {
      gates_[d] = Tensor<T>({batch, len, 4 * u});
      h_[d] = Tensor<T>({batch, len, u});
      c_[d] = Tensor<T>({batch, len, u});
    }
    std::vector<T> z(static_cast<std::size_t>(4 * u));
    for (int d = 0; d < 2; ++d) {
      for (long bi = 0; bi < batch; ++bi) {
        for (long k = 0; k < len; ++k) {
          long pos = d == 0 ? k : len - 1 - k;
          for (long j = 0; j < 4 * u; ++j) z[static_cast<std::size_t>(j)] = b[d].value(j);
          for (long i = 0; i < input_dim; ++i)
            kern::axpy(x(bi, pos, i), Wx[d].value.row(i), z.data(),
                       static_cast<std::size_t>(4 * u));
          if (k > 0) {
            const T* hprev = h_[d].row(bi, k - 1);
            for (long i = 0; i < u; ++i)
              kern::axpy(hprev[i], Wh[d].value.row(i), z.data(),
                         static_cast<std::size_t>(4 * u));
          }
          T* gr = gates_[d].row(bi, k);
          T* hr = h_[d].row(bi, k);
          T* cr = c_[d].row(bi, k);
          const T* cprev = k > 0 ? c_[d].row(bi, k - 1) : nullptr;
          for (long i = 0; i < u; ++i) {
            T ig = sigmoid_scalar(z[static_cast<std::size_t>(i)]);
            T fg = sigmoid_scalar(z[static_cast<std::size_t>(u + i)]);
            T gg = std::tanh(z[static_cast<std::size_t>(2 * u + i)]);
            T og = sigmoid_scalar(z[static_cast<std::size_t>(3 * u + i)]);
            T c_new = fg * (cprev ? cprev[i] : T(0)) + ig * gg;
            gr[i] = ig;
            gr[u + i] = fg;
            gr[2 * u + i] = gg;
            gr[3 * u + i] = og;
            cr[i] = c_new;
            hr[i] = og * std::tanh(c_new);
          }
        }
      }
    }
    if (return_sequences) {
      Tensor<T> y({batch, len, 2 * u});
      for (long bi = 0; bi < batch; ++bi)
        for (long t = 0; t < len; ++t) {
          T* yr = y.row(bi, t);
          const T* hf = h_[0].row(bi, t);           // fwd step t is position t
          const T* hb = h_[1].row(bi, len - 1 - t);  // bwd step len-1-t is position t
          for (long i = 0; i < u; ++i) yr[i] = hf[i];
          for (long i = 0; i < u; ++i) yr[u + i] = hb[i];
        }
      return y;
    }
    Tensor<T> y({batch, 2 * u});
    for (long bi = 0; bi < batch; ++bi) {
      T* yr = y.row(bi);
      const T* hf = h_[0].row(bi, len - 1);  // forward final state
      const T* hb = h_[1].row(bi, len - 1);  // backward final state (position 0)
      for (long i = 0; i < u; ++i) yr[i] = hf[i];
      for (long i = 0; i < u; ++i) yr[u + i] = hb[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    long batch = x_cache.dim(0), len = x_cache.dim(1), u = units;
    Tensor<T> dx(x_cache.shape);
    std::vector<T> dz(static_cast<std::size_t>(4 * u));
    for (int d = 0; d < 2; ++d) {
      for (long bi = 0; bi < batch; ++bi) {
        std::vector<T> dh(static_cast<std::size_t>(u), T(0));
        std::vector<T> dc(static_cast<std::size_t>(u), T(0));
        for (long k = len - 1; k >= 0; --k) {
          long pos = d == 0 ? k : len - 1 - k;
          // Output contribution at this step.
          if (return_sequences) {
            const T* dyr = dy.row(bi, pos);
            for (long i = 0; i < u; ++i)
              dh[static_cast<std::size_t>(i)] += dyr[d == 0 ? i : u + i];
          } else if (k == len - 1) {
            const T* dyr = dy.row(bi);
            for (long i = 0; i < u; ++i)
              dh[static_cast<std::size_t>(i)] += dyr[d == 0 ? i : u + i];
          }
          const T* gr = gates_[d].row(bi, k);
          const T* cr = c_[d].row(bi, k);
          const T* cprev = k > 0 ? c_[d].row(bi, k - 1) : nullptr;
          for (long i = 0; i < u; ++i) {
            T ig = gr[i], fg = gr[u + i], gg = gr[2 * u + i], og = gr[3 * u + i];
            T tc = std::tanh(cr[i]);
            T dhi = dh[static_cast<std::size_t>(i)];
            T dci = dc[static_cast<std::size_t>(i)] + dhi * og * (T(1) - tc * tc);
            dz[static_cast<std::size_t>(3 * u + i)] =
                dhi * tc * og * (T(1) - og);
            dz[static_cast<std::size_t>(i)] = dci * gg * ig * (T(1) - ig);
            dz[static_cast<std::size_t>(u + i)] =
                dci * (cprev ? cprev[i] : T(0)) * fg * (T(1) - fg);
            dz[static_cast<std::size_t>(2 * u + i)] =
                dci * ig * (T(1) - gg * gg);
            dc[static_cast<std::size_t>(i)] = dci * fg;
          }
          // Parameter grads and downstream input/hidden grads.
          for (long i = 0; i < input_dim; ++i) {
            kern::axpy(x_cache(bi, pos, i), dz.data(), Wx[d].grad.row(i),
                       static_cast<std::size_t>(4 * u));
            dx(bi, pos, i) += kern::dot(Wx[d].value.row(i), dz.data(),
                                        static_cast<std::size_t>(4 * u));
          }
          kern::axpy(T(1), dz.data(), b[d].grad.ptr(),
                     static_cast<std::size_t>(4 * u));
          if (k > 0) {
            const T* hprev = h_[d].row(bi, k - 1);
            for (long i = 0; i < u; ++i) {
              kern::axpy(hprev[i], dz.data(), Wh[d].grad.row(i),
                         static_cast<std::size_t>(4 * u));
              dh[static_cast<std::size_t>(i)] =
                  kern::dot(Wh[d].value.row(i), dz.data(),
                            static_cast<std::size_t>(4 * u));
            }
          }
        }
      }
    }
    return dx;
  }

  void params(ParamRefs<T>& out) {
    for (int d = 0; d < 2; ++d) {
      out.push_back(&Wx[d]);
      out.push_back(&Wh[d]);
      out.push_back(&b[d]);
    }
  }
};

// ---------------------------------------------------------------------------
// Multi-head self-attention. Masked key positions receive -1e9 before the
// softmax.

template <typename T>
struct MultiHeadAttention {
  long hidden = 0, heads = 0;
  Parameter<T> Wq, Wk, Wv, Wo, bq, bk, bv, bo;

  Tensor<T> x_cache, q_cache, k_cache, v_cache, attn_cache, ctx_cache;
  std::vector<std::uint8_t> mask_cache;

  MultiHeadAttention() = default;
  MultiHeadAttention(long h, long a, const std::string& name, Rng& rng)
      : hidden(h), heads(a) {
    check(h % a == 0, "attention: hidden not divisible by heads");
    auto make_w = [&](const char* suffix) {
      Parameter<T> p(name + "." + suffix, Tensor<T>({h, h}));
      glorot_uniform(p.value, h, h, rng);
      return p;
    };
    Wq = make_w("Wq");
    Wk = make_w("Wk");
    Wv = make_w("Wv");
    Wo = make_w("Wo");
    bq = Parameter<T>(name + ".bq", Tensor<T>({h}));
    bk = Parameter<T>(name + ".bk", Tensor<T>({h}));
    bv = Parameter<T>(name + ".bv", Tensor<T>({h}));
    bo = Parameter<T>(name + ".bo", Tensor<T>({h}));
  }

  // Linear projection y = xW + b for [B, L, H] input.
  static Tensor<T> project(const Tensor<T>& x, const Parameter<T>& W,
                           const Parameter<T>& b) {
    long batch = x.dim(0), len = x.dim(1), h = W.value.dim(1);
    Tensor<T> y({batch, len, h});
    for (long bi = 0; bi < batch; ++bi)
      for (long t = 0; t < len; ++t) {
        T* yr = y.row(bi, t);
        for (long o = 0; o < h; ++o) yr[o] = b.value(o);
        const T* xr = x.row(bi, t);
        for (long k = 0; k < W.value.dim(0); ++k)
          kern::axpy(xr[k], W.value.row(k), yr, static_cast<std::size_t>(h));
      }
    return y;
  }

  // Accumulates dW, db for a projection and returns dx.
  static Tensor<T> project_backward(const Tensor<T>& x, Parameter<T>& W,
                                    Parameter<T>& b, const Tensor<T>& dy) {
    long batch = x.dim(0), len = x.dim(1), in = W.value.dim(0),
         h = W.value.dim(1);
    Tensor<T> dx(x.shape);
    for (long bi = 0; bi < batch; ++bi)
      for (long t = 0; t < len; ++t) {
        const T* dyr = dy.row(bi, t);
        const T* xr = x.row(bi, t);
        T* dxr = dx.row(bi, t);
        for (long k = 0; k < in; ++k) {
          kern::axpy(xr[k], dyr, W.grad.row(k), static_cast<std::size_t>(h));
          dxr[k] = kern::dot(W.value.row(k), dyr, static_cast<std::size_t>(h));
        }
        kern::axpy(T(1), dyr, b.grad.ptr(), static_cast<std::size_t>(h));
      }
    return dx;
  }

  Tensor<T> forward(const Tensor<T>& x,
                    const std::vector<std::uint8_t>& mask) {
    check(x.rank() == 3 && x.dim(2) == hidden, "attention: shape mismatch");
    long batch = x.dim(0), len = x.dim(1);
    check(static_cast<long>(mask.size()) == batch * len,
          "attention: mask size mismatch");
    long d = hidden / heads;
    T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));

    x_cache = x;
    mask_cache = mask;
    q_cache = project(x, Wq, bq);
    k_cache = project(x, Wk, bk);
    v_cache = project(x, Wv, bv);
    attn_cache = Tensor<T>({batch * heads, len, len});
    ctx_cache = Tensor<T>({batch, len, hidden});

    for (long bi = 0; bi < batch; ++bi) {
      const std::uint8_t* m = mask.data() + bi * len;
      for (long a = 0; a < heads; ++a) {
        long off = a * d;
        for (long i = 0; i < len; ++i) {
          T* prow = &attn_cache(bi * heads + a, i, 0);  // via flattened view
          const T* qi = q_cache.row(bi, i) + off;
          for (long j = 0; j < len; ++j) {
            T s = kern::dot(qi, k_cache.row(bi, j) + off,
                            static_cast<std::size_t>(d)) *
                  scale;
            if (!m[j]) s += static_cast<T>(-1e9);
            prow[j] = s;
          }
          // softmax row
          T mx = kern::reduce_max(prow, static_cast<std::size_t>(len));
          T sum = 0;
          for (long j = 0; j < len; ++j) {
            prow[j] = std::exp(prow[j] - mx);
            sum += prow[j];
          }
          for (long j = 0; j < len; ++j) prow[j] /= sum;
          T* ctx = ctx_cache.row(bi, i) + off;
          for (long j = 0; j < len; ++j)
            kern::axpy(prow[j], v_cache.row(bi, j) + off, ctx,
                       static_cast<std::size_t>(d));
        }
      }
    }
    return project(ctx_cache, Wo, bo);
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    long batch = x_cache.dim(0), len = x_cache.dim(1);
    long d = hidden / heads;
    T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));

    Tensor<T> dctx = project_backward(ctx_cache, Wo, bo, dy);
    Tensor<T> dq(q_cache.shape), dk(k_cache.shape), dv(v_cache.shape);
    std::vector<T> dp(static_cast<std::size_t>(len));
    for (long bi = 0; bi < batch; ++bi) {
      for (long a = 0; a < heads; ++a) {
        long off = a * d;
        for (long i = 0; i < len; ++i) {
          const T* prow = &attn_cache(bi * heads + a, i, 0);
          const T* dctx_i = dctx.row(bi, i) + off;
          // dP and dV
          for (long j = 0; j < len; ++j) {
            dp[static_cast<std::size_t>(j)] =
                kern::dot(dctx_i, v_cache.row(bi, j) + off,
                          static_cast<std::size_t>(d));
            kern::axpy(prow[j], dctx_i, dv.row(bi, j) + off,
                       static_cast<std::size_t>(d));
          }
          // softmax backward: ds = p * (dp - sum(dp*p))
          T dot_pp = 0;
          for (long j = 0; j < len; ++j)
            dot_pp += dp[static_cast<std::size_t>(j)] * prow[j];
          T* dq_i = dq.row(bi, i) + off;
          for (long j = 0; j < len; ++j) {
            T ds = prow[j] * (dp[static_cast<std::size_t>(j)] - dot_pp) * scale;
            kern::axpy(ds, k_cache.row(bi, j) + off, dq_i,
                       static_cast<std::size_t>(d));
            kern::axpy(ds, q_cache.row(bi, i) + off, dk.row(bi, j) + off,
                       static_cast<std::size_t>(d));
          }
        }
      }
    }
    Tensor<T> dx = project_backward(x_cache, Wq, bq, dq);
    Tensor<T> dx_k = project_backward(x_cache, Wk, bk, dk);
    Tensor<T> dx_v = project_backward(x_cache, Wv, bv, dv);
    kern::axpy(T(1), dx_k.ptr(), dx.ptr(), static_cast<std::size_t>(dx.numel()));
    kern::axpy(T(1), dx_v.ptr(), dx.ptr(), static_cast<std::size_t>(dx.numel()));
    return dx;
  }

  void params(ParamRefs<T>& out) {
    out.push_back(&Wq);
    out.push_back(&bq);
    out.push_back(&Wk);
    out.push_back(&bk);
    out.push_back(&Wv);
    out.push_back(&bv);
    out.push_back(&Wo);
    out.push_back(&bo);
  }
};

// ---------------------------------------------------------------------------
// Weighted cross-entropy on softmax outputs. Normalized by the sum of the
// selected class weights so the loss scale stays comparable across class
// mixes. The returned gradient is w.r.t. the pre-softmax logits.

template <typename T>
struct LossResult {
  T loss = 0;
  Tensor<T> dlogits;
};

template <typename T>
LossResult<T> weighted_cross_entropy(const Tensor<T>& probs,
                                     const std::vector<int>& targets,
                                     const std::array<double, 6>& weights) {
  long batch = probs.dim(0), classes = probs.dim(1);
  check(static_cast<long>(targets.size()) == batch,
        "loss: target count mismatch");
  T sum_w = 0;
  for (long i = 0; i < batch; ++i)
    sum_w += static_cast<T>(weights[static_cast<std::size_t>(targets[static_cast<std::size_t>(i)])]);
  LossResult<T> res;
  res.dlogits = Tensor<T>(probs.shape);
  if (sum_w <= T(0)) return res;
  T loss = 0;
  for (long i = 0; i < batch; ++i) {
    int y = targets[static_cast<std::size_t>(i)];
    T w = static_cast<T>(weights[static_cast<std::size_t>(y)]);
    T p = probs(i, y);
    if (p < static_cast<T>(1e-12)) p = static_cast<T>(1e-12);
    loss += w * (-std::log(p));
    for (long c = 0; c < classes; ++c) {
      T indicator = (c == y) ? T(1) : T(0);
      res.dlogits(i, c) = w * (probs(i, c) - indicator) / sum_w;
    }
  }
  res.loss = loss / sum_w;
  return res;
}

// ---------------------------------------------------------------------------
// Central finite-difference gradient check. The closure evaluates the scalar
// loss (forward only, no grad mutation); analytic gradients must already be
// in the parameters' grad tensors. Returns the max relative error.

template <typename T>
double grad_check(const std::function<double()>& f, const ParamRefs<T>& params,
                  double step = 1e-5) {
  double max_err = 0;
  for (auto* p : params) {
    if (!p->trainable) continue;
    for (long i = 0; i < p->value.numel(); ++i) {
      T saved = p->value(i);
      p->value(i) = saved + static_cast<T>(step);
      double fp = f();
      p->value(i) = saved - static_cast<T>(step);
      double fm = f();
      p->value(i) = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("grad_check: non-finite loss");
      double numeric = (fp - fm) / (2 * step);
      double analytic = static_cast<double>(p->grad(i));
      double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
      max_err = std::max(max_err, std::abs(analytic - numeric) / denom);
    }
  }
  return max_err;
}

template <typename T>
void zero_grads(const ParamRefs<T>& params) {
  for (auto* p : params) p->grad.zero();
}

}  // namespace ytlc::nn
