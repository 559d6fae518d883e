#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "iaknn/errors.hpp"
#include "iaknn/nn/tape.hpp"

namespace iaknn::nn {

namespace detail {

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

inline void require_same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw StateError("operands recorded on different tapes");
}

// y = f(x) elementwise; dfdx(x, y) gives the local derivative.
template <class F, class D>
Var unary(const Var& a, F f, D dfdx) {
  Tape& tape = a.tape();
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id();
  return tape.record(std::move(y), [ia, dfdx](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ia);
    const Tensor& yv = t.value(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(xv[i], yv[i]);
  });
}

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

inline Var add(const Var& a, const Var& b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "add");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), [ia, ib](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    Tensor& gb = t.grad(ib);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "sub");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), [ia, ib](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    Tensor& gb = t.grad(ib);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
  });
}

inline Var mul(const Var& a, const Var& b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "mul");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), [ia, ib](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    const Tensor& av = t.value(ia);
    const Tensor& bv2 = t.value(ib);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
    Tensor& gb = t.grad(ib);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
  });
}

inline Var div(const Var& a, const Var& b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "div");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] /= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), [ia, ib](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    const Tensor& bv2 = t.value(ib);
    const Tensor& yv = t.value(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / bv2[i];
    Tensor& gb = t.grad(ib);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * yv[i] / bv2[i];
  });
}

inline Var scale(const Var& a, double c) {
  return detail::unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Var add_scalar(const Var& a, double c) {
  return detail::unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

/// a + c with c a constant tensor of the same shape.
inline Var add_const(const Var& a, const Tensor& c) {
  if (a.shape() != c.shape()) {
    throw DimensionError("add_const: shapes " + shape_string(a.shape()) + " and " + shape_string(c.shape()) +
                         " differ");
  }
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += c[i];
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), [ia](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

inline Var sigmoid(const Var& a) {
  return detail::unary(a, detail::sigmoid, [](double, double y) { return y * (1.0 - y); });
}

inline Var tanh(const Var& a) {
  return detail::unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

inline Var relu(const Var& a) {
  return detail::unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                       [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var softplus(const Var& a) {
  return detail::unary(a, detail::softplus, [](double x, double) { return detail::sigmoid(x); });
}

inline Var exp(const Var& a) {
  return detail::unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Var square(const Var& a) {
  return detail::unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

/// Sum of all entries as a [1] tensor.
inline Var sum(const Var& a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  const std::size_t ia = a.id();
  return a.tape().record(Tensor::scalar(s), [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

/// Same data, new shape.
inline Var reshape(const Var& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  const std::size_t ia = a.id();
  return a.tape().record(a.value().reshaped(std::move(shape)), [ia](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

/// Flattens and concatenates into a 1-D tensor.
inline Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  Tape& tape = parts.front().tape();
  std::vector<double> out;
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  for (const auto& p : parts) {
    if (&p.tape() != &tape) throw StateError("operands recorded on different tapes");
    const auto d = p.value().data();
    out.insert(out.end(), d.begin(), d.end());
    ids.push_back(p.id());
  }
  return tape.record(Tensor::vector(std::move(out)), [ids = std::move(ids)](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t id : ids) {
      Tensor& gp = t.grad(id);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
      offset += gp.size();
    }
  });
}

/// y[k] = a.flat[index[k]]; the backward pass scatter-adds.
inline Var gather(const Var& a, std::vector<std::size_t> index) {
  const Tensor& x = a.value();
  std::vector<double> out(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= x.size()) throw DimensionError("gather index out of range");
    out[k] = x[index[k]];
  }
  const std::size_t ia = a.id();
  return a.tape().record(Tensor::vector(std::move(out)), [ia, index = std::move(index)](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t k = 0; k < index.size(); ++k) ga[index[k]] += g[k];
  });
}

/// Contiguous 1-D slice [offset, offset + length).
inline Var slice(const Var& a, std::size_t offset, std::size_t length) {
  if (offset + length > a.size()) throw DimensionError("slice out of range");
  std::vector<std::size_t> idx(length);
  for (std::size_t k = 0; k < length; ++k) idx[k] = offset + k;
  return gather(a, std::move(idx));
}

/// W [m x n] times x [n] -> [m].
inline Var matvec(const Var& w, const Var& x) {
  detail::require_same_tape(w, x);
  const Tensor& W = w.value();
  const Tensor& xv = x.value();
  if (W.rank() != 2 || W.dim(1) != xv.size()) {
    throw DimensionError("matvec: matrix " + shape_string(W.shape()) + " cannot multiply vector of length " +
                         std::to_string(xv.size()));
  }
  const std::size_t m = W.dim(0), n = W.dim(1);
  Tensor y({m});
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = W.data().data() + r * n;
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += row[c] * xv[c];
    y[r] = s;
  }
  const std::size_t iw = w.id(), ix = x.id();
  return w.tape().record(std::move(y), [iw, ix, m, n](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    const Tensor& Wv = t.value(iw);
    const Tensor& xv2 = t.value(ix);
    Tensor& gw = t.grad(iw);
    for (std::size_t r = 0; r < m; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      double* grow = gw.data().data() + r * n;
      for (std::size_t c = 0; c < n; ++c) grow[c] += gr * xv2[c];
    }
    Tensor& gx = t.grad(ix);
    for (std::size_t r = 0; r < m; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      const double* row = Wv.data().data() + r * n;
      for (std::size_t c = 0; c < n; ++c) gx[c] += gr * row[c];
    }
  });
}

/// Output spatial size of a convolution, or 0 when the kernel does not fit.
inline std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  const std::size_t padded = in + 2 * pad;
  if (kernel > padded || stride == 0) return 0;
  return (padded - kernel) / stride + 1;
}

/// Cross-correlation of input [H, W, Cin] with weight [k, k, Cin, Cout] plus
/// bias [Cout], zero padding.
inline Var conv2d(const Var& input, const Var& weight, const Var& bias, std::size_t stride, std::size_t pad) {
  detail::require_same_tape(input, weight);
  detail::require_same_tape(input, bias);
  const Tensor& x = input.value();
  const Tensor& w = weight.value();
  const Tensor& b = bias.value();
  if (x.rank() != 3) throw DimensionError("conv2d: input must be HxWxC, got " + shape_string(x.shape()));
  if (w.rank() != 4 || w.dim(0) != w.dim(1)) {
    throw DimensionError("conv2d: weight must be kxkxCinxCout, got " + shape_string(w.shape()));
  }
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  const std::size_t k = w.dim(0), Cout = w.dim(3);
  if (w.dim(2) != C) {
    throw DimensionError("conv2d: weight expects " + std::to_string(w.dim(2)) + " input channels, input has " +
                         std::to_string(C));
  }
  if (b.size() != Cout) throw DimensionError("conv2d: bias length " + std::to_string(b.size()) + " != " + std::to_string(Cout));
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  const std::size_t Ho = conv_output_size(H, k, stride, pad);
  const std::size_t Wo = conv_output_size(W, k, stride, pad);
  if (Ho == 0 || Wo == 0) {
    throw ConfigError("conv2d: kernel " + std::to_string(k) + " larger than padded input " +
                      std::to_string(H + 2 * pad) + "x" + std::to_string(W + 2 * pad));
  }
  Tensor y({Ho, Wo, Cout});
  const auto px = [&](std::size_t i, std::size_t j, std::size_t c) { return (i * W + j) * C + c; };
  const auto pw = [&](std::size_t di, std::size_t dj, std::size_t ci, std::size_t co) {
    return ((di * k + dj) * C + ci) * Cout + co;
  };
  for (std::size_t oi = 0; oi < Ho; ++oi)
    for (std::size_t oj = 0; oj < Wo; ++oj) {
      double* out = y.data().data() + (oi * Wo + oj) * Cout;
      for (std::size_t co = 0; co < Cout; ++co) out[co] = b[co];
      for (std::size_t di = 0; di < k; ++di) {
        const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * stride + di) - static_cast<std::ptrdiff_t>(pad);
        if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(H)) continue;
        for (std::size_t dj = 0; dj < k; ++dj) {
          const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * stride + dj) - static_cast<std::ptrdiff_t>(pad);
          if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(W)) continue;
          for (std::size_t ci = 0; ci < C; ++ci) {
            const double xv = x[px(ii, jj, ci)];
            if (xv == 0.0) continue;
            const double* wrow = w.data().data() + pw(di, dj, ci, 0);
            for (std::size_t co = 0; co < Cout; ++co) out[co] += xv * wrow[co];
          }
        }
      }
    }
  const std::size_t ix = input.id(), iw = weight.id(), ib = bias.id();
  return input.tape().record(std::move(y), [ix, iw, ib, H, W, C, k, Cout, Ho, Wo, stride, pad](Tape& t,
                                                                                               std::size_t self) {
    const auto px = [&](std::size_t i, std::size_t j, std::size_t c) { return (i * W + j) * C + c; };
    const auto pw = [&](std::size_t di, std::size_t dj, std::size_t ci, std::size_t co) {
      return ((di * k + dj) * C + ci) * Cout + co;
    };
    const Tensor g = t.grad(self);
    const Tensor& xv = t.value(ix);
    const Tensor& wv = t.value(iw);
    Tensor& gx = t.grad(ix);
    Tensor& gw = t.grad(iw);
    Tensor& gb = t.grad(ib);
    for (std::size_t oi = 0; oi < Ho; ++oi)
      for (std::size_t oj = 0; oj < Wo; ++oj) {
        const double* go = g.data().data() + (oi * Wo + oj) * Cout;
        for (std::size_t co = 0; co < Cout; ++co) gb[co] += go[co];
        for (std::size_t di = 0; di < k; ++di) {
          const std::ptrdiff_t ii =
              static_cast<std::ptrdiff_t>(oi * stride + di) - static_cast<std::ptrdiff_t>(pad);
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t dj = 0; dj < k; ++dj) {
            const std::ptrdiff_t jj =
                static_cast<std::ptrdiff_t>(oj * stride + dj) - static_cast<std::ptrdiff_t>(pad);
            if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(W)) continue;
            for (std::size_t ci = 0; ci < C; ++ci) {
              const std::size_t xi = px(ii, jj, ci);
              const std::size_t wi = pw(di, dj, ci, 0);
              const double xval = xv[xi];
              double acc = 0.0;
              for (std::size_t co = 0; co < Cout; ++co) {
                gw[wi + co] += go[co] * xval;
                acc += go[co] * wv[wi + co];
              }
              gx[xi] += acc;
            }
          }
        }
      }
  });
}

}  // namespace iaknn::nn
