#pragma once

// Differentiable building blocks.  Each op validates shapes, computes the
// forward pass eagerly, and records a fused backward closure.  Loop orders are
// fixed, so results and gradients are bit-reproducible run to run.
//
// Layout conventions (row-major):
//   sequences      [T x C]           time-major
//   conv kernels   [K x Cin x Cout]
//   dense weights  [n x m]
//   LSTM W/U       [d x 4h] / [h x 4h], gate column blocks ordered i,f,g,o

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "sinet/tensor.hpp"

namespace sinet {

enum class Activation { Linear, Relu };

// 1-D convolution (cross-correlation) with zero "same" padding of (K-1)/2 on
// both ends: output keeps the input length for odd K.
inline Tensor conv1d_same(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  if (input.rank() != 2)
    throw DimensionError("conv1d_same: input must be [T x Cin], got " + shape_str(input.shape()));
  if (kernels.rank() != 3)
    throw DimensionError("conv1d_same: kernels must be [K x Cin x Cout], got " +
                         shape_str(kernels.shape()));
  if (bias.rank() != 1)
    throw DimensionError("conv1d_same: bias must be [Cout], got " + shape_str(bias.shape()));
  const Dim T = input.dim(0), Cin = input.dim(1);
  const Dim K = kernels.dim(0), Cout = kernels.dim(2);
  if (T < 1) throw DimensionError("conv1d_same: empty input sequence");
  if (K % 2 == 0)
    throw DimensionError("conv1d_same: kernel width must be odd for same padding, got " +
                         std::to_string(K));
  if (kernels.dim(1) != Cin)
    throw DimensionError("conv1d_same: kernels expect " + std::to_string(kernels.dim(1)) +
                         " input channels, input has " + std::to_string(Cin));
  if (bias.dim(0) != Cout)
    throw DimensionError("conv1d_same: bias has " + std::to_string(bias.dim(0)) +
                         " channels, kernels produce " + std::to_string(Cout));

  const Dim P = (K - 1) / 2;
  const std::vector<double>& x = input.data();
  const std::vector<double>& w = kernels.data();
  const std::vector<double>& b = bias.data();
  std::vector<double> out(static_cast<std::size_t>(T * Cout));
  for (Dim t = 0; t < T; ++t) {
    double* orow = out.data() + t * Cout;
    for (Dim co = 0; co < Cout; ++co) orow[co] = b[co];
    for (Dim k = 0; k < K; ++k) {
      const Dim src = t + k - P;
      if (src < 0 || src >= T) continue;
      const double* xrow = x.data() + src * Cin;
      const double* wk = w.data() + k * Cin * Cout;
      for (Dim ci = 0; ci < Cin; ++ci) {
        const double xv = xrow[ci];
        if (xv == 0.0) continue;  // one-hot rows are mostly zero
        const double* wrow = wk + ci * Cout;
        for (Dim co = 0; co < Cout; ++co) orow[co] += xv * wrow[co];
      }
    }
  }

  detail::NodePtr xn = input.node_ptr(), wn = kernels.node_ptr(), bn = bias.node_ptr();
  auto backward_fn = [xn, wn, bn, T, Cin, K, Cout, P](detail::Node& self) {
    const std::vector<double>& g = self.grad;
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (Dim t = 0; t < T; ++t)
        for (Dim co = 0; co < Cout; ++co) bn->grad[co] += g[t * Cout + co];
    }
    if (wn->requires_grad) {
      wn->ensure_grad();
      for (Dim t = 0; t < T; ++t) {
        const double* grow = g.data() + t * Cout;
        for (Dim k = 0; k < K; ++k) {
          const Dim src = t + k - P;
          if (src < 0 || src >= T) continue;
          const double* xrow = xn->data.data() + src * Cin;
          double* wg = wn->grad.data() + k * Cin * Cout;
          for (Dim ci = 0; ci < Cin; ++ci) {
            const double xv = xrow[ci];
            if (xv == 0.0) continue;
            double* wgrow = wg + ci * Cout;
            for (Dim co = 0; co < Cout; ++co) wgrow[co] += xv * grow[co];
          }
        }
      }
    }
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (Dim t = 0; t < T; ++t) {
        const double* grow = g.data() + t * Cout;
        for (Dim k = 0; k < K; ++k) {
          const Dim src = t + k - P;
          if (src < 0 || src >= T) continue;
          const double* wk = wn->data.data() + k * Cin * Cout;
          double* xgrow = xn->grad.data() + src * Cin;
          for (Dim ci = 0; ci < Cin; ++ci) {
            const double* wrow = wk + ci * Cout;
            double acc = 0.0;
            for (Dim co = 0; co < Cout; ++co) acc += wrow[co] * grow[co];
            xgrow[ci] += acc;
          }
        }
      }
    }
  };
  return detail::make_op("conv1d_same", Shape{T, Cout}, std::move(out), {input, kernels, bias},
                         std::move(backward_fn));
}

inline Tensor relu(const Tensor& input) {
  if (!input.defined()) throw UsageError("relu: undefined tensor");
  const std::vector<double>& x = input.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  detail::NodePtr xn = input.node_ptr();
  auto backward_fn = [xn](detail::Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (xn->data[i] > 0.0) xn->grad[i] += self.grad[i];
  };
  return detail::make_op("relu", input.shape(), std::move(out), {input}, std::move(backward_fn));
}

// Non-overlapping 1-D max pooling along time.  Trailing remainder rows that do
// not fill a window are dropped.  Gradient flows to the first maximum of each
// window (ties resolved to the earliest index).
inline Tensor maxpool1d(const Tensor& input, Dim pool) {
  if (input.rank() != 2)
    throw DimensionError("maxpool1d: input must be [T x C], got " + shape_str(input.shape()));
  if (pool < 1) throw DimensionError("maxpool1d: pool size must be >= 1, got " + std::to_string(pool));
  const Dim T = input.dim(0), C = input.dim(1);
  if (T < pool)
    throw DimensionError("maxpool1d: input length " + std::to_string(T) +
                         " shorter than pool size " + std::to_string(pool) +
                         " produces an empty output");
  const Dim W = T / pool;
  const std::vector<double>& x = input.data();
  std::vector<double> out(static_cast<std::size_t>(W * C));
  std::vector<Dim> argmax(static_cast<std::size_t>(W * C));
  for (Dim w = 0; w < W; ++w) {
    for (Dim c = 0; c < C; ++c) {
      Dim best_t = w * pool;
      double best = x[best_t * C + c];
      for (Dim j = 1; j < pool; ++j) {
        const Dim t = w * pool + j;
        const double v = x[t * C + c];
        if (v > best) {
          best = v;
          best_t = t;
        }
      }
      out[w * C + c] = best;
      argmax[w * C + c] = best_t;
    }
  }
  detail::NodePtr xn = input.node_ptr();
  auto backward_fn = [xn, argmax = std::move(argmax), C](detail::Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const Dim c = static_cast<Dim>(i) % C;
      xn->grad[argmax[i] * C + c] += self.grad[i];
    }
  };
  return detail::make_op("maxpool1d", Shape{W, C}, std::move(out), {input},
                         std::move(backward_fn));
}

// Fully connected layer on a vector: activation(x . W + b).
inline Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias,
                    Activation activation = Activation::Linear) {
  if (input.rank() != 1)
    throw DimensionError("dense: input must be a vector, got " + shape_str(input.shape()));
  if (weight.rank() != 2)
    throw DimensionError("dense: weight must be [n x m], got " + shape_str(weight.shape()));
  if (bias.rank() != 1)
    throw DimensionError("dense: bias must be [m], got " + shape_str(bias.shape()));
  const Dim n = input.dim(0), m = weight.dim(1);
  if (weight.dim(0) != n)
    throw DimensionError("dense: weight expects " + std::to_string(weight.dim(0)) +
                         " inputs, got vector of " + std::to_string(n));
  if (bias.dim(0) != m)
    throw DimensionError("dense: bias has " + std::to_string(bias.dim(0)) + " units, weight has " +
                         std::to_string(m));

  const std::vector<double>& x = input.data();
  const std::vector<double>& w = weight.data();
  std::vector<double> out = bias.data();
  for (Dim i = 0; i < n; ++i) {
    const double xv = x[i];
    if (xv == 0.0) continue;
    const double* wrow = w.data() + i * m;
    for (Dim j = 0; j < m; ++j) out[j] += xv * wrow[j];
  }
  if (activation == Activation::Relu)
    for (double& v : out) v = v > 0.0 ? v : 0.0;

  detail::NodePtr xn = input.node_ptr(), wn = weight.node_ptr(), bn = bias.node_ptr();
  auto backward_fn = [xn, wn, bn, n, m, activation](detail::Node& self) {
    // For relu, out > 0 iff pre-activation > 0, so the output doubles as mask.
    std::vector<double> dpre(static_cast<std::size_t>(m));
    for (Dim j = 0; j < m; ++j) {
      const bool on = activation == Activation::Linear || self.data[j] > 0.0;
      dpre[j] = on ? self.grad[j] : 0.0;
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (Dim j = 0; j < m; ++j) bn->grad[j] += dpre[j];
    }
    if (wn->requires_grad) {
      wn->ensure_grad();
      for (Dim i = 0; i < n; ++i) {
        const double xv = xn->data[i];
        if (xv == 0.0) continue;
        double* wgrow = wn->grad.data() + i * m;
        for (Dim j = 0; j < m; ++j) wgrow[j] += xv * dpre[j];
      }
    }
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (Dim i = 0; i < n; ++i) {
        const double* wrow = wn->data.data() + i * m;
        double acc = 0.0;
        for (Dim j = 0; j < m; ++j) acc += wrow[j] * dpre[j];
        xn->grad[i] += acc;
      }
    }
  };
  return detail::make_op("dense", Shape{m}, std::move(out), {input, weight, bias},
                         std::move(backward_fn));
}

// LSTM layer parameters.  W: [input_dim x 4h], U: [hidden_dim x 4h], b: [4h].
// Gate columns are blocked in the order input, forget, cell(candidate), output.
struct LstmParams {
  Dim input_dim = 0;
  Dim hidden_dim = 0;
  Tensor W, U, b;

  void validate() const {
    if (input_dim < 1 || hidden_dim < 1)
      throw DimensionError("LstmParams: input_dim and hidden_dim must be positive");
    const Dim d = input_dim, h = hidden_dim;
    if (!W.defined() || W.rank() != 2 || W.dim(0) != d || W.dim(1) != 4 * h)
      throw DimensionError("LstmParams: W must be [" + std::to_string(d) + "x" +
                           std::to_string(4 * h) + "], got " +
                           (W.defined() ? shape_str(W.shape()) : std::string("undefined")));
    if (!U.defined() || U.rank() != 2 || U.dim(0) != h || U.dim(1) != 4 * h)
      throw DimensionError("LstmParams: U must be [" + std::to_string(h) + "x" +
                           std::to_string(4 * h) + "], got " +
                           (U.defined() ? shape_str(U.shape()) : std::string("undefined")));
    if (!b.defined() || b.rank() != 1 || b.dim(0) != 4 * h)
      throw DimensionError("LstmParams: b must be [" + std::to_string(4 * h) + "], got " +
                           (b.defined() ? shape_str(b.shape()) : std::string("undefined")));
  }
};

namespace detail {
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace detail

// Canonical LSTM over a [T x d] sequence, zero initial state:
//   z_t = x_t.W + h_{t-1}.U + b        (gate blocks i,f,g,o)
//   i,f,o = sigmoid(.)   g = tanh(.)
//   c_t = f*c_{t-1} + i*g              h_t = o*tanh(c_t)
// Returns [T x h] when return_sequence, else the final h_T as [h].
inline Tensor lstm_layer_forward(const Tensor& seq, const LstmParams& params,
                                 bool return_sequence) {
  params.validate();
  if (seq.rank() != 2)
    throw DimensionError("lstm_layer_forward: input must be [T x d], got " +
                         shape_str(seq.shape()));
  const Dim T = seq.dim(0), d = seq.dim(1);
  if (d != params.input_dim)
    throw DimensionError("lstm_layer_forward: input dim " + std::to_string(d) +
                         " does not match layer input_dim " + std::to_string(params.input_dim));
  if (T < 1) throw DataError("lstm_layer_forward: empty sequence");
  const Dim h = params.hidden_dim;
  const Dim h4 = 4 * h;

  const std::vector<double>& x = seq.data();
  const std::vector<double>& W = params.W.data();
  const std::vector<double>& U = params.U.data();
  const std::vector<double>& b = params.b.data();

  const std::size_t th = static_cast<std::size_t>(T * h);
  std::vector<double> I(th), F(th), G(th), O(th), C(th), TC(th), H(th);
  std::vector<double> z(static_cast<std::size_t>(h4));
  for (Dim t = 0; t < T; ++t) {
    std::copy(b.begin(), b.end(), z.begin());
    const double* xrow = x.data() + t * d;
    for (Dim r = 0; r < d; ++r) {
      const double xv = xrow[r];
      if (xv == 0.0) continue;
      const double* wrow = W.data() + r * h4;
      for (Dim col = 0; col < h4; ++col) z[col] += xv * wrow[col];
    }
    if (t > 0) {
      const double* hprev = H.data() + (t - 1) * h;
      for (Dim r = 0; r < h; ++r) {
        const double hv = hprev[r];
        if (hv == 0.0) continue;
        const double* urow = U.data() + r * h4;
        for (Dim col = 0; col < h4; ++col) z[col] += hv * urow[col];
      }
    }
    const double* cprev = t > 0 ? C.data() + (t - 1) * h : nullptr;
    for (Dim j = 0; j < h; ++j) {
      const double iv = detail::sigmoid(z[j]);
      const double fv = detail::sigmoid(z[h + j]);
      const double gv = std::tanh(z[2 * h + j]);
      const double ov = detail::sigmoid(z[3 * h + j]);
      const double cv = fv * (cprev ? cprev[j] : 0.0) + iv * gv;
      const double tcv = std::tanh(cv);
      const std::size_t idx = static_cast<std::size_t>(t * h + j);
      I[idx] = iv;
      F[idx] = fv;
      G[idx] = gv;
      O[idx] = ov;
      C[idx] = cv;
      TC[idx] = tcv;
      H[idx] = ov * tcv;
    }
  }

  std::vector<double> out;
  Shape out_shape;
  if (return_sequence) {
    out = H;
    out_shape = {T, h};
  } else {
    out.assign(H.end() - h, H.end());
    out_shape = {h};
  }

  detail::NodePtr xn = seq.node_ptr(), wn = params.W.node_ptr(), un = params.U.node_ptr(),
                  bn = params.b.node_ptr();
  auto backward_fn = [xn, wn, un, bn, T, d, h, h4, return_sequence, I = std::move(I),
                      F = std::move(F), G = std::move(G), O = std::move(O), C = std::move(C),
                      TC = std::move(TC), H = std::move(H)](detail::Node& self) {
    const std::vector<double>& g = self.grad;
    const bool need_w = wn->requires_grad, need_u = un->requires_grad, need_b = bn->requires_grad,
               need_x = xn->requires_grad;
    if (need_w) wn->ensure_grad();
    if (need_u) un->ensure_grad();
    if (need_b) bn->ensure_grad();
    if (need_x) xn->ensure_grad();

    std::vector<double> dh_next(static_cast<std::size_t>(h), 0.0);
    std::vector<double> dc_next(static_cast<std::size_t>(h), 0.0);
    std::vector<double> dz(static_cast<std::size_t>(h4));
    std::vector<double> dh_buf(static_cast<std::size_t>(h));
    for (Dim t = T - 1; t >= 0; --t) {
      for (Dim j = 0; j < h; ++j) {
        double dh = dh_next[j];
        if (return_sequence)
          dh += g[t * h + j];
        else if (t == T - 1)
          dh += g[j];
        const std::size_t idx = static_cast<std::size_t>(t * h + j);
        const double iv = I[idx], fv = F[idx], gv = G[idx], ov = O[idx], tcv = TC[idx];
        const double cprev = t > 0 ? C[idx - h] : 0.0;
        const double dov = dh * tcv;
        const double dc = dc_next[j] + dh * ov * (1.0 - tcv * tcv);
        const double div = dc * gv;
        const double dgv = dc * iv;
        const double dfv = dc * cprev;
        dc_next[j] = dc * fv;
        dz[j] = div * iv * (1.0 - iv);
        dz[h + j] = dfv * fv * (1.0 - fv);
        dz[2 * h + j] = dgv * (1.0 - gv * gv);
        dz[3 * h + j] = dov * ov * (1.0 - ov);
      }
      if (need_b)
        for (Dim col = 0; col < h4; ++col) bn->grad[col] += dz[col];
      if (need_w) {
        const double* xrow = xn->data.data() + t * d;
        for (Dim r = 0; r < d; ++r) {
          const double xv = xrow[r];
          if (xv == 0.0) continue;
          double* wg = wn->grad.data() + r * h4;
          for (Dim col = 0; col < h4; ++col) wg[col] += xv * dz[col];
        }
      }
      if (need_u && t > 0) {
        const double* hprev = H.data() + (t - 1) * h;
        for (Dim r = 0; r < h; ++r) {
          const double hv = hprev[r];
          if (hv == 0.0) continue;
          double* ug = un->grad.data() + r * h4;
          for (Dim col = 0; col < h4; ++col) ug[col] += hv * dz[col];
        }
      }
      if (need_x) {
        double* xg = xn->grad.data() + t * d;
        const double* wd = wn->data.data();
        for (Dim r = 0; r < d; ++r) {
          const double* wrow = wd + r * h4;
          double acc = 0.0;
          for (Dim col = 0; col < h4; ++col) acc += wrow[col] * dz[col];
          xg[r] += acc;
        }
      }
      // dh_{t-1} via the recurrent weights.
      const double* ud = un->data.data();
      for (Dim r = 0; r < h; ++r) {
        const double* urow = ud + r * h4;
        double acc = 0.0;
        for (Dim col = 0; col < h4; ++col) acc += urow[col] * dz[col];
        dh_buf[r] = acc;
      }
      std::swap(dh_next, dh_buf);
    }
  };
  return detail::make_op("lstm", std::move(out_shape), std::move(out),
                         {seq, params.W, params.U, params.b}, std::move(backward_fn));
}

// Vector concatenation.  Either operand may be empty ([0]).
inline Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1)
    throw DimensionError("concat: both operands must be vectors, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  const Dim n = a.dim(0), m = b.dim(0);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n + m));
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  detail::NodePtr an = a.node_ptr(), bn = b.node_ptr();
  auto backward_fn = [an, bn, n, m](detail::Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (Dim i = 0; i < n; ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (Dim i = 0; i < m; ++i) bn->grad[i] += self.grad[n + i];
    }
  };
  return detail::make_op("concat", Shape{n + m}, std::move(out), {a, b}, std::move(backward_fn));
}

// Mean squared error between two equal-length vectors; returns a scalar.
inline Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.rank() != 1 || target.rank() != 1)
    throw DimensionError("mse_loss: expected vectors, got " + shape_str(pred.shape()) + " and " +
                         shape_str(target.shape()));
  const Dim n = pred.dim(0);
  if (target.dim(0) != n)
    throw DimensionError("mse_loss: length mismatch, " + std::to_string(n) + " predictions vs " +
                         std::to_string(target.dim(0)) + " targets");
  if (n == 0) throw DataError("mse_loss: empty batch");
  const std::vector<double>& p = pred.data();
  const std::vector<double>& y = target.data();
  double acc = 0.0;
  for (Dim i = 0; i < n; ++i) {
    const double e = p[i] - y[i];
    acc += e * e;
  }
  acc /= static_cast<double>(n);
  detail::NodePtr pn = pred.node_ptr(), yn = target.node_ptr();
  auto backward_fn = [pn, yn, n](detail::Node& self) {
    const double g = self.grad[0];
    const double scale = 2.0 / static_cast<double>(n);
    if (pn->requires_grad) {
      pn->ensure_grad();
      for (Dim i = 0; i < n; ++i) pn->grad[i] += g * scale * (pn->data[i] - yn->data[i]);
    }
    if (yn->requires_grad) {
      yn->ensure_grad();
      for (Dim i = 0; i < n; ++i) yn->grad[i] -= g * scale * (pn->data[i] - yn->data[i]);
    }
  };
  return detail::make_op("mse_loss", Shape{1}, std::vector<double>{acc}, {pred, target},
                         std::move(backward_fn));
}

// Sum of all elements; returns a scalar.
inline Tensor sum(const Tensor& input) {
  if (!input.defined()) throw UsageError("sum: undefined tensor");
  double acc = 0.0;
  for (const double v : input.data()) acc += v;
  detail::NodePtr xn = input.node_ptr();
  auto backward_fn = [xn](detail::Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const double g = self.grad[0];
    for (double& gv : xn->grad) gv += g;
  };
  return detail::make_op("sum", Shape{1}, std::vector<double>{acc}, {input},
                         std::move(backward_fn));
}

inline Tensor scale(const Tensor& input, double factor) {
  if (!input.defined()) throw UsageError("scale: undefined tensor");
  std::vector<double> out(input.data());
  for (double& v : out) v *= factor;
  detail::NodePtr xn = input.node_ptr();
  auto backward_fn = [xn, factor](detail::Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += factor * self.grad[i];
  };
  return detail::make_op("scale", input.shape(), std::move(out), {input}, std::move(backward_fn));
}

// Elementwise product of two equal-length vectors (used by auxiliary losses
// and the gradient audit's random projections).
inline Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("mul: shape mismatch, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  const std::vector<double>& av = a.data();
  const std::vector<double>& bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  detail::NodePtr an = a.node_ptr(), bn = b.node_ptr();
  auto backward_fn = [an, bn](detail::Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        an->grad[i] += self.grad[i] * bn->data[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        bn->grad[i] += self.grad[i] * an->data[i];
    }
  };
  return detail::make_op("mul", a.shape(), std::move(out), {a, b}, std::move(backward_fn));
}

// Gather n scalar tensors into one [n] vector (mini-batch assembly).
inline Tensor stack_scalars(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) throw DataError("stack_scalars: empty batch");
  std::vector<double> out;
  out.reserve(scalars.size());
  std::vector<Tensor> parents;
  parents.reserve(scalars.size());
  for (const Tensor& s : scalars) {
    if (!s.defined() || s.size() != 1)
      throw DimensionError("stack_scalars: all entries must be scalars");
    out.push_back(s.data()[0]);
    parents.push_back(s);
  }
  std::vector<detail::NodePtr> nodes;
  nodes.reserve(scalars.size());
  for (const Tensor& s : scalars) nodes.push_back(s.node_ptr());
  auto backward_fn = [nodes = std::move(nodes)](detail::Node& self) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i]->requires_grad) continue;
      nodes[i]->ensure_grad();
      nodes[i]->grad[0] += self.grad[i];
    }
  };
  // Shape must be captured before the data vector is moved from: argument
  // evaluation order would otherwise be free to empty `out` first.
  const Shape shape{static_cast<Dim>(out.size())};
  return detail::make_op("stack_scalars", shape, std::move(out), std::move(parents),
                         std::move(backward_fn));
}

}  // namespace sinet
