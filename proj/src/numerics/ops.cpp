// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include "radbev/numerics/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "radbev/errors.hpp"

namespace radbev::ops {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_rank(const Var& a, std::size_t rank, const char* op) {
  if (a.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(a.shape()));
  }
}

void accumulate(Tape& t, Var v, const Tensor& g) {
  if (!t.requires_grad(v)) return;
  Tensor& dst = t.grad(v);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    accumulate(t, a, g);
    accumulate(t, b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    accumulate(t, a, g);
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
  return a.tape().record(std::move(out), {a}, [a, s](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  });
}

Var relu(Var a) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var sigmoid(Var a) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = av[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = av[i];
      const double y = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      ga[i] += g[i] * y * (1.0 - y);
    }
  });
}

Var matmul(Var a, Var b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  if (bv.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ " + shape_str(av.shape()) + " x " +
                         shape_str(bv.shape()));
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (t.requires_grad(a)) {
      // dA = G B^T
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bv.data() + p * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          ga[i * k + p] += s;
        }
      }
    }
    if (t.requires_grad(b)) {
      // dB = A^T G
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          if (aip == 0.0) continue;
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

Var transpose(Var a) {
  require_rank(a, 2, "transpose");
  const Tensor& av = a.value();
  const std::size_t m = av.dim(0), n = av.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return a.tape().record(std::move(out), {a}, [a, m, n](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  });
}

Var add_row_bias(Var x, Var b) {
  require_rank(x, 2, "add_row_bias");
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  if (bv.size() != n) throw DimensionError("add_row_bias: bias length mismatch");
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + bv[j];
  return x.tape().record(std::move(out), {x, b}, [x, b, m, n](Tape& t, const Tensor& g) {
    accumulate(t, x, g);
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
    }
  });
}

Var add_col_bias(Var x, Var b) {
  require_rank(x, 2, "add_col_bias");
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  if (bv.size() != m) throw DimensionError("add_col_bias: bias length mismatch");
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + bv[i];
  return x.tape().record(std::move(out), {x, b}, [x, b, m, n](Tape& t, const Tensor& g) {
    accumulate(t, x, g);
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g[i * n + j];
        gb[i] += s;
      }
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshape(std::move(shape));
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) { accumulate(t, a, g); });
}

Var concat_cols(Var a, Var b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.dim(0), n1 = av.dim(1), n2 = bv.dim(1);
  if (bv.dim(0) != m) throw DimensionError("concat_cols: row count mismatch");
  Tensor out({m, n1 + n2});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(av.data() + i * n1, n1, out.data() + i * (n1 + n2));
    std::copy_n(bv.data() + i * n2, n2, out.data() + i * (n1 + n2) + n1);
  }
  return a.tape().record(std::move(out), {a, b}, [a, b, m, n1, n2](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n1; ++j) ga[i * n1 + j] += g[i * (n1 + n2) + j];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n2; ++j) gb[i * n2 + j] += g[i * (n1 + n2) + n1 + j];
    }
  });
}

Var sum(Var a) {
  const Tensor& av = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i];
  return a.tape().record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var dot_const(Var a, const Tensor& w) {
  const Tensor& av = a.value();
  if (av.size() != w.size()) throw DimensionError("dot_const: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * w[i];
  return a.tape().record(Tensor::scalar(s), {a}, [a, w](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * w[i];
  });
}

Var softmax(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  if (axis >= xv.rank()) throw DimensionError("softmax: axis out of range for " + shape_str(xv.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= xv.dim(i);
  for (std::size_t i = axis + 1; i < xv.rank(); ++i) inner *= xv.dim(i);
  const std::size_t n = xv.dim(axis);
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, xv[base + k * inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double e = std::exp(xv[base + k * inner] - mx);
        out[base + k * inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < n; ++k) out[base + k * inner] /= z;
    }
  }
  Tensor y = out;
  return x.tape().record(std::move(out), {x}, [x, y = std::move(y), outer, inner, n](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad(x);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double dotp = 0.0;
        for (std::size_t k = 0; k < n; ++k) dotp += g[base + k * inner] * y[base + k * inner];
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t idx = base + k * inner;
          gx[idx] += y[idx] * (g[idx] - dotp);
        }
      }
    }
  });
}

Var conv2d_lite(Var map, Var kernel) {
  require_rank(map, 3, "conv2d_lite");
  require_rank(kernel, 4, "conv2d_lite");
  const Tensor& mv = map.value();
  const Tensor& kv = kernel.value();
  const std::size_t cin = mv.dim(0), h = mv.dim(1), w = mv.dim(2);
  const std::size_t cout = kv.dim(0);
  if (kv.dim(1) != cin) {
    throw DimensionError("conv2d_lite: kernel expects " + std::to_string(kv.dim(1)) +
                         " input channels, map has " + std::to_string(cin));
  }
  if (kv.dim(2) != 3 || kv.dim(3) != 3) throw DimensionError("conv2d_lite: kernel must be 3x3");

  Tensor out({cout, h, w});
  for (std::size_t co = 0; co < cout; ++co) {
    double* o = out.data() + co * h * w;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* in = mv.data() + ci * h * w;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wt = kv[((co * cin + ci) * 3 + ky) * 3 + kx];
          if (wt == 0.0) continue;
          const int dy = ky - 1, dx = kx - 1;
          const std::size_t x_lo = dx < 0 ? 1 : 0;
          const std::size_t x_hi = dx > 0 ? w - 1 : w;
          for (std::size_t y = 0; y < h; ++y) {
            const long sy = static_cast<long>(y) + dy;
            if (sy < 0 || sy >= static_cast<long>(h)) continue;
            const double* irow = in + static_cast<std::size_t>(sy) * w + dx;
            double* orow = o + y * w;
            for (std::size_t x = x_lo; x < x_hi; ++x) orow[x] += wt * irow[x];
          }
        }
      }
    }
  }
  return map.tape().record(std::move(out), {map, kernel}, [map, kernel, cin, cout, h, w](Tape& t, const Tensor& g) {
    const Tensor& mv = t.value(map);
    const Tensor& kv = t.value(kernel);
    const bool need_map = t.requires_grad(map);
    const bool need_kernel = t.requires_grad(kernel);
    Tensor* gm = need_map ? &t.grad(map) : nullptr;
    Tensor* gk = need_kernel ? &t.grad(kernel) : nullptr;
    for (std::size_t co = 0; co < cout; ++co) {
      const double* go = g.data() + co * h * w;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* in = mv.data() + ci * h * w;
        double* gin = need_map ? gm->data() + ci * h * w : nullptr;
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const std::size_t kidx = ((co * cin + ci) * 3 + ky) * 3 + kx;
            const double wt = kv[kidx];
            const int dy = ky - 1, dx = kx - 1;
            const std::size_t x_lo = dx < 0 ? 1 : 0;
            const std::size_t x_hi = dx > 0 ? w - 1 : w;
            double acc = 0.0;
            for (std::size_t y = 0; y < h; ++y) {
              const long sy = static_cast<long>(y) + dy;
              if (sy < 0 || sy >= static_cast<long>(h)) continue;
              const std::size_t soff = static_cast<std::size_t>(sy) * w;
              const double* grow = go + y * w;
              if (need_kernel) {
                const double* irow = in + soff + dx;
                for (std::size_t x = x_lo; x < x_hi; ++x) acc += grow[x] * irow[x];
              }
              if (need_map && wt != 0.0) {
                double* girow = gin + soff + dx;
                for (std::size_t x = x_lo; x < x_hi; ++x) girow[x] += wt * grow[x];
              }
            }
            if (need_kernel) (*gk)[kidx] += acc;
          }
        }
      }
    }
  });
}

namespace {

struct Corner {
  long x, y;
  double w, dwdu, dwdv;
};

// Four bilinear corners of (u, v); weights and their partials.
std::array<Corner, 4> bilinear_corners(double u, double v) {
  const double fu = std::floor(u), fv = std::floor(v);
  const long x0 = static_cast<long>(fu), y0 = static_cast<long>(fv);
  const double ax = u - fu, ay = v - fv;
  return {{{x0, y0, (1 - ax) * (1 - ay), -(1 - ay), -(1 - ax)},
           {x0 + 1, y0, ax * (1 - ay), (1 - ay), -ax},
           {x0, y0 + 1, (1 - ax) * ay, -ay, (1 - ax)},
           {x0 + 1, y0 + 1, ax * ay, ay, ax}}};
}

}  // namespace

Var bilinear_sample(Var map, Var uv) {
  require_rank(map, 3, "bilinear_sample");
  if (uv.value().size() != 2) throw DimensionError("bilinear_sample: uv must hold 2 values");
  const Tensor& mv = map.value();
  const std::size_t c = mv.dim(0), h = mv.dim(1), w = mv.dim(2);
  const double u = uv.value()[0], v = uv.value()[1];
  Tensor out({c});
  for (const Corner& k : bilinear_corners(u, v)) {
    if (k.x < 0 || k.y < 0 || k.x >= static_cast<long>(w) || k.y >= static_cast<long>(h)) continue;
    const std::size_t off = static_cast<std::size_t>(k.y) * w + static_cast<std::size_t>(k.x);
    for (std::size_t ch = 0; ch < c; ++ch) out[ch] += k.w * mv[ch * h * w + off];
  }
  return map.tape().record(std::move(out), {map, uv}, [map, uv, c, h, w](Tape& t, const Tensor& g) {
    const Tensor& mv = t.value(map);
    const double u = t.value(uv)[0], v = t.value(uv)[1];
    double du = 0.0, dv = 0.0;
    Tensor* gm = t.requires_grad(map) ? &t.grad(map) : nullptr;
    for (const Corner& k : bilinear_corners(u, v)) {
      if (k.x < 0 || k.y < 0 || k.x >= static_cast<long>(w) || k.y >= static_cast<long>(h)) continue;
      const std::size_t off = static_cast<std::size_t>(k.y) * w + static_cast<std::size_t>(k.x);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double val = mv[ch * h * w + off];
        du += g[ch] * k.dwdu * val;
        dv += g[ch] * k.dwdv * val;
        if (gm) (*gm)[ch * h * w + off] += g[ch] * k.w;
      }
    }
    if (t.requires_grad(uv)) {
      Tensor& guv = t.grad(uv);
      guv[0] += du;
      guv[1] += dv;
    }
  });
}

Var layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  require_rank(x, 2, "layer_norm_rows");
  const Tensor& xv = x.value();
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  if (gamma.value().size() != n || beta.value().size() != n) {
    throw DimensionError("layer_norm_rows: affine size mismatch");
  }
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  Tensor out({m, n});
  Tensor xhat({m, n});
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double xh = (row[j] - mu) * inv_std[i];
      xhat[i * n + j] = xh;
      out[i * n + j] = xh * gv[j] + bv[j];
    }
  }
  return x.tape().record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, const Tensor& g) {
        const Tensor& gv = t.value(gamma);
        Tensor* gx = t.requires_grad(x) ? &t.grad(x) : nullptr;
        Tensor* gg = t.requires_grad(gamma) ? &t.grad(gamma) : nullptr;
        Tensor* gb = t.requires_grad(beta) ? &t.grad(beta) : nullptr;
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < m; ++i) {
          double mean_gxh = 0.0, mean_gxh_xh = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double gxh = g[i * n + j] * gv[j];
            mean_gxh += gxh;
            mean_gxh_xh += gxh * xhat[i * n + j];
            if (gg) (*gg)[j] += g[i * n + j] * xhat[i * n + j];
            if (gb) (*gb)[j] += g[i * n + j];
          }
          mean_gxh *= inv_n;
          mean_gxh_xh *= inv_n;
          if (gx) {
            for (std::size_t j = 0; j < n; ++j) {
              const double gxh = g[i * n + j] * gv[j];
              (*gx)[i * n + j] += inv_std[i] * (gxh - mean_gxh - xhat[i * n + j] * mean_gxh_xh);
            }
          }
        }
      });
}

Var scale_rows(Var x, const std::vector<double>& s) {
  require_rank(x, 2, "scale_rows");
  const Tensor& xv = x.value();
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  if (s.size() != m) throw DimensionError("scale_rows: factor count mismatch");
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] * s[i];
  return x.tape().record(std::move(out), {x}, [x, s, m, n](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[i * n + j] * s[i];
  });
}

Var select_rows(const std::vector<bool>& take_a, Var a, Var b) {
  require_same_shape(a, b, "select_rows");
  require_rank(a, 2, "select_rows");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.dim(0), n = av.dim(1);
  if (take_a.size() != m) throw DimensionError("select_rows: mask length mismatch");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const Tensor& src = take_a[i] ? av : bv;
    std::copy_n(src.data() + i * n, n, out.data() + i * n);
  }
  return a.tape().record(std::move(out), {a, b}, [take_a, a, b, m, n](Tape& t, const Tensor& g) {
    Tensor* ga = t.requires_grad(a) ? &t.grad(a) : nullptr;
    Tensor* gb = t.requires_grad(b) ? &t.grad(b) : nullptr;
    for (std::size_t i = 0; i < m; ++i) {
      Tensor* dst = take_a[i] ? ga : gb;
      if (!dst) continue;
      for (std::size_t j = 0; j < n; ++j) (*dst)[i * n + j] += g[i * n + j];
    }
  });
}

Var mask_rows(Var x, const std::vector<bool>& keep) {
  std::vector<double> s(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) s[i] = keep[i] ? 1.0 : 0.0;
  return scale_rows(x, s);
}

Var segment_max(Var x, const std::vector<std::int64_t>& segment, std::size_t n_segments) {
  require_rank(x, 2, "segment_max");
  const Tensor& xv = x.value();
  const std::size_t p = xv.dim(0), f = xv.dim(1);
  if (segment.size() != p) throw DimensionError("segment_max: segment id count mismatch");
  Tensor out({n_segments, f});
  std::vector<std::int64_t> argmax(n_segments * f, -1);
  for (std::size_t r = 0; r < p; ++r) {
    const std::int64_t s = segment[r];
    if (s < 0 || static_cast<std::size_t>(s) >= n_segments) {
      throw DimensionError("segment_max: segment id out of range");
    }
    for (std::size_t j = 0; j < f; ++j) {
      const std::size_t o = static_cast<std::size_t>(s) * f + j;
      if (argmax[o] < 0 || xv[r * f + j] > out[o]) {
        out[o] = xv[r * f + j];
        argmax[o] = static_cast<std::int64_t>(r);
      }
    }
  }
  return x.tape().record(std::move(out), {x}, [x, f, argmax = std::move(argmax)](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad(x);
    for (std::size_t o = 0; o < argmax.size(); ++o) {
      if (argmax[o] < 0) continue;
      gx[static_cast<std::size_t>(argmax[o]) * f + o % f] += g[o];
    }
  });
}

Var scatter_mean_cols(Var x, const std::vector<std::int64_t>& target, std::size_t n_targets) {
  require_rank(x, 2, "scatter_mean_cols");
  const Tensor& xv = x.value();
  const std::size_t c = xv.dim(0), m = xv.dim(1);
  if (target.size() != m) throw DimensionError("scatter_mean_cols: target count mismatch");
  std::vector<double> count(n_targets, 0.0);
  for (auto tg : target) {
    if (tg >= static_cast<std::int64_t>(n_targets)) throw DimensionError("scatter_mean_cols: target out of range");
    if (tg >= 0) count[static_cast<std::size_t>(tg)] += 1.0;
  }
  Tensor out({c, n_targets});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t j = 0; j < m; ++j) {
      if (target[j] < 0) continue;
      const auto tg = static_cast<std::size_t>(target[j]);
      out[ch * n_targets + tg] += xv[ch * m + j] / count[tg];
    }
  }
  return x.tape().record(std::move(out), {x}, [x, target, count, c, m, n_targets](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad(x);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t j = 0; j < m; ++j) {
        if (target[j] < 0) continue;
        const auto tg = static_cast<std::size_t>(target[j]);
        gx[ch * m + j] += g[ch * n_targets + tg] / count[tg];
      }
    }
  });
}

Var column_outer(Var occ, Var radar, std::size_t stride) {
  const Tensor& ov = occ.value();
  const Tensor& rv = radar.value();
  if (ov.rank() < 2 || rv.rank() < 2) throw DimensionError("column_outer: rank too small");
  const std::size_t h = ov.dim(ov.rank() - 2), w = ov.dim(ov.rank() - 1);
  if (ov.size() != h * w) throw DimensionError("column_outer: occupancy must be a single plane");
  const std::size_t d = rv.dim(0), wc = rv.dim(rv.rank() - 1);
  if (rv.size() != d * wc) throw DimensionError("column_outer: radar must be [D,Wc] or [D,1,Wc]");
  if (stride == 0) throw DimensionError("column_outer: zero stride");
  std::vector<std::size_t> col(w);
  for (std::size_t x = 0; x < w; ++x) col[x] = std::min(x / stride, wc - 1);
  Tensor out({d, h, w});
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out[(k * h + y) * w + x] = ov[y * w + x] * rv[k * wc + col[x]];
  return occ.tape().record(std::move(out), {occ, radar}, [occ, radar, d, h, w, wc, col](Tape& t, const Tensor& g) {
    const Tensor& ov = t.value(occ);
    const Tensor& rv = t.value(radar);
    Tensor* go = t.requires_grad(occ) ? &t.grad(occ) : nullptr;
    Tensor* gr = t.requires_grad(radar) ? &t.grad(radar) : nullptr;
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const double gv = g[(k * h + y) * w + x];
          if (go) (*go)[y * w + x] += gv * rv[k * wc + col[x]];
          if (gr) (*gr)[k * wc + col[x]] += gv * ov[y * w + x];
        }
      }
    }
  });
}

Var cross_entropy_cols(Var logits, const std::vector<int>& labels) {
  require_rank(logits, 2, "cross_entropy_cols");
  const Tensor& lv = logits.value();
  const std::size_t k = lv.dim(0), q = lv.dim(1);
  if (labels.size() != q) throw DimensionError("cross_entropy_cols: label count mismatch");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= k) {
      throw DataError("cross_entropy_cols: label " + std::to_string(l) + " outside [0," +
                      std::to_string(k) + ")");
    }
  }
  Tensor prob({k, q});
  double loss = 0.0;
  for (std::size_t j = 0; j < q; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) mx = std::max(mx, lv[c * q + j]);
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      prob[c * q + j] = std::exp(lv[c * q + j] - mx);
      z += prob[c * q + j];
    }
    for (std::size_t c = 0; c < k; ++c) prob[c * q + j] /= z;
    loss += (mx + std::log(z)) - lv[static_cast<std::size_t>(labels[j]) * q + j];
  }
  loss /= static_cast<double>(q);
  return logits.tape().record(Tensor::scalar(loss), {logits},
                              [logits, labels, prob = std::move(prob), k, q](Tape& t, const Tensor& g) {
                                Tensor& gl = t.grad(logits);
                                const double s = g[0] / static_cast<double>(q);
                                for (std::size_t j = 0; j < q; ++j) {
                                  for (std::size_t c = 0; c < k; ++c) {
                                    const double target = static_cast<std::size_t>(labels[j]) == c ? 1.0 : 0.0;
                                    gl[c * q + j] += s * (prob[c * q + j] - target);
                                  }
                                }
                              });
}

}  // namespace radbev::ops
