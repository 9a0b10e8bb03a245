// Scalar reference kernels. These define the numerical semantics of the
// library; the AVX2 variants must match them bit for bit. Conventions that
// make that possible:
//   - fused multiply-add everywhere a SIMD fmadd would be used (std::fma)
//   - reductions keep 4 interleaved partial sums, combined as (s0+s1)+(s2+s3)
//   - max/min return the second operand on ties (matches _mm256_max/min_pd)
//   - relu/clip produce +0.0 for non-positive inputs

#include <cmath>

#include "tolnet/kernels.hpp"

namespace tolnet::kern {
namespace {

void s_add(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void s_sub(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void s_mul(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void s_vmax(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] > b[i] ? a[i] : b[i];
}
void s_vmin(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] < b[i] ? a[i] : b[i];
}
void s_vabs(const double* a, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = std::fabs(a[i]);
}
void s_relu(const double* a, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}
void s_sign(const double* a, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i)
    out[i] = a[i] > 0.0 ? 1.0 : (a[i] < 0.0 ? -1.0 : 0.0);
}
void s_clamp(const double* a, double lo, double hi, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) {
    double x = a[i] > lo ? a[i] : lo;  // max(a, lo), tie -> lo
    out[i] = x < hi ? x : hi;          // min(x, hi), tie -> hi
  }
}
void s_add_scalar(const double* a, double s, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + s;
}
void s_mul_scalar(const double* a, double s, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void s_acc(double* dst, const double* src, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
}
void s_acc_scaled(double* dst, const double* src, double s, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dst[i] = std::fma(s, src[i], dst[i]);
}
void s_acc_mul(double* dst, const double* dy, const double* o, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dst[i] = std::fma(dy[i], o[i], dst[i]);
}
// Masked accumulations add a +0.0 where the mask is off (the vector form
// blends against zero), so the scalar form does the same.
void s_acc_relu_mask(double* dst, const double* dy, const double* x, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dst[i] += x[i] > 0.0 ? dy[i] : 0.0;
}
void s_acc_sign_mul(double* dst, const double* dy, const double* x, int64_t n) {
  for (int64_t i = 0; i < n; ++i)
    dst[i] += x[i] > 0.0 ? dy[i] : (x[i] < 0.0 ? -dy[i] : 0.0);
}
void s_acc_cmp_mask(double* dst, const double* dy, const double* a, const double* b,
                    Cmp cmp, int64_t n) {
  switch (cmp) {
    case Cmp::GE:
      for (int64_t i = 0; i < n; ++i) dst[i] += a[i] >= b[i] ? dy[i] : 0.0;
      break;
    case Cmp::GT:
      for (int64_t i = 0; i < n; ++i) dst[i] += a[i] > b[i] ? dy[i] : 0.0;
      break;
    case Cmp::LE:
      for (int64_t i = 0; i < n; ++i) dst[i] += a[i] <= b[i] ? dy[i] : 0.0;
      break;
    case Cmp::LT:
      for (int64_t i = 0; i < n; ++i) dst[i] += a[i] < b[i] ? dy[i] : 0.0;
      break;
  }
}

double s_sum(const double* a, int64_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i];
    s1 += a[i + 1];
    s2 += a[i + 2];
    s3 += a[i + 3];
  }
  for (; i < n; ++i) {
    switch (i & 3) {
      case 0: s0 += a[i]; break;
      case 1: s1 += a[i]; break;
      case 2: s2 += a[i]; break;
      default: s3 += a[i]; break;
    }
  }
  return (s0 + s1) + (s2 + s3);
}

double s_dot(const double* a, const double* b, int64_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = std::fma(a[i], b[i], s0);
    s1 = std::fma(a[i + 1], b[i + 1], s1);
    s2 = std::fma(a[i + 2], b[i + 2], s2);
    s3 = std::fma(a[i + 3], b[i + 3], s3);
  }
  for (; i < n; ++i) {
    switch (i & 3) {
      case 0: s0 = std::fma(a[i], b[i], s0); break;
      case 1: s1 = std::fma(a[i], b[i], s1); break;
      case 2: s2 = std::fma(a[i], b[i], s2); break;
      default: s3 = std::fma(a[i], b[i], s3); break;
    }
  }
  return (s0 + s1) + (s2 + s3);
}

// The k dimension can be huge (flattened conv maps), so every GEMM walks k in
// the outer loop: one pass over w per call instead of one per row of x. The
// per-element accumulation order (ascending k, ascending m) is what the AVX2
// side replicates.
void s_gemm_acc(const double* x, const double* w, double* y,
                int64_t m, int64_t k, int64_t n) {
  for (int64_t kk = 0; kk < k; ++kk) {
    const double* wr = w + kk * n;
    for (int64_t i = 0; i < m; ++i) {
      double xv = x[i * k + kk];
      double* yi = y + i * n;
      for (int64_t j = 0; j < n; ++j) yi[j] = std::fma(xv, wr[j], yi[j]);
    }
  }
}

void s_gemm_acc_bt(const double* dy, const double* w, double* dx,
                   int64_t m, int64_t k, int64_t n) {
  for (int64_t kk = 0; kk < k; ++kk) {
    const double* wr = w + kk * n;
    for (int64_t i = 0; i < m; ++i) dx[i * k + kk] += s_dot(dy + i * n, wr, n);
  }
}

void s_gemm_acc_at(const double* x, const double* dy, double* dw,
                   int64_t m, int64_t k, int64_t n) {
  for (int64_t kk = 0; kk < k; ++kk) {
    double* dwr = dw + kk * n;
    for (int64_t i = 0; i < m; ++i) {
      double xv = x[i * k + kk];
      const double* dyi = dy + i * n;
      for (int64_t j = 0; j < n; ++j) dwr[j] = std::fma(xv, dyi[j], dwr[j]);
    }
  }
}

void s_bias_add(const double* x, const double* b, double* out, int64_t rows, int64_t n) {
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = x + r * n;
    double* outr = out + r * n;
    for (int64_t j = 0; j < n; ++j) outr[j] = xr[j] + b[j];
  }
}
void s_acc_colsum(double* db, const double* dy, int64_t rows, int64_t n) {
  for (int64_t r = 0; r < rows; ++r) {
    const double* dyr = dy + r * n;
    for (int64_t j = 0; j < n; ++j) db[j] += dyr[j];
  }
}

void s_conv2d(const double* in, const double* k, double* out, const ConvDims& d) {
  const int64_t in_plane = d.in_h * d.in_w * d.in_c;
  const int64_t out_plane = d.out_h * d.out_w * d.out_c;
  for (int64_t b = 0; b < d.batch; ++b) {
    const double* inb = in + b * in_plane;
    double* outb = out + b * out_plane;
    for (int64_t oy = 0; oy < d.out_h; ++oy) {
      for (int64_t ox = 0; ox < d.out_w; ++ox) {
        double* o = outb + (oy * d.out_w + ox) * d.out_c;
        for (int64_t ky = 0; ky < d.k_h; ++ky) {
          int64_t iy = oy * d.stride - d.pad_top + ky;
          if (iy < 0 || iy >= d.in_h) continue;
          for (int64_t kx = 0; kx < d.k_w; ++kx) {
            int64_t ix = ox * d.stride - d.pad_left + kx;
            if (ix < 0 || ix >= d.in_w) continue;
            const double* ip = inb + (iy * d.in_w + ix) * d.in_c;
            const double* kp = k + (ky * d.k_w + kx) * d.in_c * d.out_c;
            for (int64_t c = 0; c < d.in_c; ++c) {
              double iv = ip[c];
              const double* kc = kp + c * d.out_c;
              for (int64_t f = 0; f < d.out_c; ++f) o[f] = std::fma(iv, kc[f], o[f]);
            }
          }
        }
      }
    }
  }
}

void s_conv2d_acc_din(const double* dout, const double* k, double* din, const ConvDims& d) {
  const int64_t in_plane = d.in_h * d.in_w * d.in_c;
  const int64_t out_plane = d.out_h * d.out_w * d.out_c;
  for (int64_t b = 0; b < d.batch; ++b) {
    const double* doutb = dout + b * out_plane;
    double* dinb = din + b * in_plane;
    for (int64_t oy = 0; oy < d.out_h; ++oy) {
      for (int64_t ox = 0; ox < d.out_w; ++ox) {
        const double* go = doutb + (oy * d.out_w + ox) * d.out_c;
        for (int64_t ky = 0; ky < d.k_h; ++ky) {
          int64_t iy = oy * d.stride - d.pad_top + ky;
          if (iy < 0 || iy >= d.in_h) continue;
          for (int64_t kx = 0; kx < d.k_w; ++kx) {
            int64_t ix = ox * d.stride - d.pad_left + kx;
            if (ix < 0 || ix >= d.in_w) continue;
            double* dp = dinb + (iy * d.in_w + ix) * d.in_c;
            const double* kp = k + (ky * d.k_w + kx) * d.in_c * d.out_c;
            for (int64_t c = 0; c < d.in_c; ++c)
              dp[c] += s_dot(go, kp + c * d.out_c, d.out_c);
          }
        }
      }
    }
  }
}

void s_conv2d_acc_dk(const double* in, const double* dout, double* dk, const ConvDims& d) {
  const int64_t in_plane = d.in_h * d.in_w * d.in_c;
  const int64_t out_plane = d.out_h * d.out_w * d.out_c;
  for (int64_t b = 0; b < d.batch; ++b) {
    const double* inb = in + b * in_plane;
    const double* doutb = dout + b * out_plane;
    for (int64_t oy = 0; oy < d.out_h; ++oy) {
      for (int64_t ox = 0; ox < d.out_w; ++ox) {
        const double* go = doutb + (oy * d.out_w + ox) * d.out_c;
        for (int64_t ky = 0; ky < d.k_h; ++ky) {
          int64_t iy = oy * d.stride - d.pad_top + ky;
          if (iy < 0 || iy >= d.in_h) continue;
          for (int64_t kx = 0; kx < d.k_w; ++kx) {
            int64_t ix = ox * d.stride - d.pad_left + kx;
            if (ix < 0 || ix >= d.in_w) continue;
            const double* ip = inb + (iy * d.in_w + ix) * d.in_c;
            double* dkp = dk + (ky * d.k_w + kx) * d.in_c * d.out_c;
            for (int64_t c = 0; c < d.in_c; ++c) {
              double iv = ip[c];
              double* dkc = dkp + c * d.out_c;
              for (int64_t f = 0; f < d.out_c; ++f) dkc[f] = std::fma(iv, go[f], dkc[f]);
            }
          }
        }
      }
    }
  }
}

void s_maxpool(const double* in, double* out, int64_t* argmax, const PoolDims& d) {
  const int64_t in_plane = d.in_h * d.in_w * d.c;
  const int64_t out_plane = d.out_h * d.out_w * d.c;
  for (int64_t b = 0; b < d.batch; ++b) {
    const double* inb = in + b * in_plane;
    for (int64_t oy = 0; oy < d.out_h; ++oy) {
      for (int64_t ox = 0; ox < d.out_w; ++ox) {
        for (int64_t c = 0; c < d.c; ++c) {
          double best = 0;
          int64_t best_idx = -1;
          for (int64_t wy = 0; wy < d.win_h; ++wy) {
            int64_t iy = oy * d.stride + wy;
            for (int64_t wx = 0; wx < d.win_w; ++wx) {
              int64_t ix = ox * d.stride + wx;
              int64_t idx = (iy * d.in_w + ix) * d.c + c;
              double v = inb[idx];
              // first maximum in scan order wins ties
              if (best_idx < 0 || v > best) {
                best = v;
                best_idx = idx;
              }
            }
          }
          int64_t oidx = b * out_plane + (oy * d.out_w + ox) * d.c + c;
          out[oidx] = best;
          argmax[oidx] = b * in_plane + best_idx;
        }
      }
    }
  }
}

void s_maxpool_acc_din(const double* dout, const int64_t* argmax, double* din, int64_t out_n) {
  for (int64_t i = 0; i < out_n; ++i) din[argmax[i]] += dout[i];
}

void s_adam(double* p, const double* g, double* m, double* v, int64_t n,
            double alpha, double beta1, double beta2, double eps,
            double bc1, double bc2) {
  const double omb1 = 1.0 - beta1;
  const double omb2 = 1.0 - beta2;
  for (int64_t i = 0; i < n; ++i) {
    double gi = g[i];
    double mi = beta1 * m[i] + omb1 * gi;
    double vi = beta2 * v[i] + omb2 * (gi * gi);
    m[i] = mi;
    v[i] = vi;
    double mhat = mi / bc1;
    double vhat = vi / bc2;
    p[i] = p[i] - (alpha * mhat) / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels table = {
      "scalar",
      s_add, s_sub, s_mul, s_vmax, s_vmin, s_vabs, s_relu, s_sign, s_clamp,
      s_add_scalar, s_mul_scalar,
      s_acc, s_acc_scaled, s_acc_mul, s_acc_relu_mask, s_acc_sign_mul, s_acc_cmp_mask,
      s_sum, s_dot,
      s_gemm_acc, s_gemm_acc_bt, s_gemm_acc_at,
      s_bias_add, s_acc_colsum,
      s_conv2d, s_conv2d_acc_din, s_conv2d_acc_dk,
      s_maxpool, s_maxpool_acc_din,
      s_adam,
  };
  return table;
}

}  // namespace tolnet::kern
