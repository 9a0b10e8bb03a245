// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64 and is a no-op stub elsewhere. Bit parity with the
// scalar reference kernels:
//   - vector lanes apply the same IEEE operation per element
//   - reduction lane L holds exactly the scalar partial sum s_L
//   - scalar tails reuse the reference expressions (std::fma, ternaries)
//   - _mm256_max_pd / _mm256_min_pd return the second operand on ties,
//     which the scalar `a > b ? a : b` form reproduces

#include "tolnet/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace tolnet::kern {
namespace {

inline __m256d abs_pd(__m256d x) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  return _mm256_and_pd(x, mask);
}

void v_add(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}
void v_sub(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}
void v_mul(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}
void v_vmax(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] > b[i] ? a[i] : b[i];
}
void v_vmin(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] < b[i] ? a[i] : b[i];
}
void v_vabs(const double* a, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, abs_pd(_mm256_loadu_pd(a + i)));
  for (; i < n; ++i) out[i] = std::fabs(a[i]);
}
void v_relu(const double* a, double* out, int64_t n) {
  const __m256d zero = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(a + i);
    __m256d mask = _mm256_cmp_pd(x, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_and_pd(x, mask));
  }
  for (; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}
void v_sign(const double* a, double* out, int64_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d mone = _mm256_set1_pd(-1.0);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(a + i);
    __m256d pos = _mm256_and_pd(_mm256_cmp_pd(x, zero, _CMP_GT_OQ), one);
    __m256d neg = _mm256_and_pd(_mm256_cmp_pd(x, zero, _CMP_LT_OQ), mone);
    _mm256_storeu_pd(out + i, _mm256_or_pd(pos, neg));
  }
  for (; i < n; ++i) out[i] = a[i] > 0.0 ? 1.0 : (a[i] < 0.0 ? -1.0 : 0.0);
}
void v_clamp(const double* a, double lo, double hi, double* out, int64_t n) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_max_pd(_mm256_loadu_pd(a + i), vlo);
    _mm256_storeu_pd(out + i, _mm256_min_pd(x, vhi));
  }
  for (; i < n; ++i) {
    double x = a[i] > lo ? a[i] : lo;
    out[i] = x < hi ? x : hi;
  }
}
void v_add_scalar(const double* a, double s, double* out, int64_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) out[i] = a[i] + s;
}
void v_mul_scalar(const double* a, double s, double* out, int64_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) out[i] = a[i] * s;
}

void v_acc(double* dst, const double* src, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(src + i)));
  for (; i < n; ++i) dst[i] += src[i];
}
void v_acc_scaled(double* dst, const double* src, double s, int64_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(vs, _mm256_loadu_pd(src + i), _mm256_loadu_pd(dst + i)));
  for (; i < n; ++i) dst[i] = std::fma(s, src[i], dst[i]);
}
void v_acc_mul(double* dst, const double* dy, const double* o, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(_mm256_loadu_pd(dy + i), _mm256_loadu_pd(o + i),
                                              _mm256_loadu_pd(dst + i)));
  for (; i < n; ++i) dst[i] = std::fma(dy[i], o[i], dst[i]);
}
void v_acc_relu_mask(double* dst, const double* dy, const double* x, int64_t n) {
  const __m256d zero = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    __m256d addend = _mm256_and_pd(_mm256_loadu_pd(dy + i), mask);
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), addend));
  }
  for (; i < n; ++i) dst[i] += x[i] > 0.0 ? dy[i] : 0.0;
}
void v_acc_sign_mul(double* dst, const double* dy, const double* x, int64_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d signbit = _mm256_castsi256_pd(_mm256_set1_epi64x(0x8000000000000000ULL));
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d dyv = _mm256_loadu_pd(dy + i);
    __m256d pos = _mm256_and_pd(dyv, _mm256_cmp_pd(xv, zero, _CMP_GT_OQ));
    __m256d neg = _mm256_and_pd(_mm256_xor_pd(dyv, signbit), _mm256_cmp_pd(xv, zero, _CMP_LT_OQ));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_or_pd(pos, neg)));
  }
  for (; i < n; ++i) dst[i] += x[i] > 0.0 ? dy[i] : (x[i] < 0.0 ? -dy[i] : 0.0);
}
template <int CMP, Cmp MODE>
void v_acc_cmp_mask_impl(double* dst, const double* dy, const double* a, const double* b, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), CMP);
    __m256d addend = _mm256_and_pd(_mm256_loadu_pd(dy + i), mask);
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), addend));
  }
  for (; i < n; ++i) {
    bool hit = MODE == Cmp::GE   ? a[i] >= b[i]
               : MODE == Cmp::GT ? a[i] > b[i]
               : MODE == Cmp::LE ? a[i] <= b[i]
                                 : a[i] < b[i];
    dst[i] += hit ? dy[i] : 0.0;
  }
}
void v_acc_cmp_mask(double* dst, const double* dy, const double* a, const double* b,
                    Cmp cmp, int64_t n) {
  switch (cmp) {
    case Cmp::GE: v_acc_cmp_mask_impl<_CMP_GE_OQ, Cmp::GE>(dst, dy, a, b, n); break;
    case Cmp::GT: v_acc_cmp_mask_impl<_CMP_GT_OQ, Cmp::GT>(dst, dy, a, b, n); break;
    case Cmp::LE: v_acc_cmp_mask_impl<_CMP_LE_OQ, Cmp::LE>(dst, dy, a, b, n); break;
    case Cmp::LT: v_acc_cmp_mask_impl<_CMP_LT_OQ, Cmp::LT>(dst, dy, a, b, n); break;
  }
}

// Lane L of the accumulator carries the scalar partial sum s_L.
double v_sum(const double* a, int64_t n) {
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  for (; i < n; ++i) s[i & 3] += a[i];
  return (s[0] + s[1]) + (s[2] + s[3]);
}
double v_dot(const double* a, const double* b, int64_t n) {
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  for (; i < n; ++i) s[i & 3] = std::fma(a[i], b[i], s[i & 3]);
  return (s[0] + s[1]) + (s[2] + s[3]);
}

inline void row_fma(double xv, const double* w, double* y, int64_t n) {
  const __m256d vx = _mm256_set1_pd(xv);
  int64_t j = 0;
  for (; j + 4 <= n; j += 4)
    _mm256_storeu_pd(y + j, _mm256_fmadd_pd(vx, _mm256_loadu_pd(w + j), _mm256_loadu_pd(y + j)));
  for (; j < n; ++j) y[j] = std::fma(xv, w[j], y[j]);
}

// k in the outer loop: w is streamed once per call (see the scalar note).
void v_gemm_acc(const double* x, const double* w, double* y,
                int64_t m, int64_t k, int64_t n) {
  for (int64_t kk = 0; kk < k; ++kk) {
    const double* wr = w + kk * n;
    for (int64_t i = 0; i < m; ++i) row_fma(x[i * k + kk], wr, y + i * n, n);
  }
}
void v_gemm_acc_bt(const double* dy, const double* w, double* dx,
                   int64_t m, int64_t k, int64_t n) {
  for (int64_t kk = 0; kk < k; ++kk) {
    const double* wr = w + kk * n;
    for (int64_t i = 0; i < m; ++i) dx[i * k + kk] += v_dot(dy + i * n, wr, n);
  }
}
void v_gemm_acc_at(const double* x, const double* dy, double* dw,
                   int64_t m, int64_t k, int64_t n) {
  for (int64_t kk = 0; kk < k; ++kk) {
    double* dwr = dw + kk * n;
    for (int64_t i = 0; i < m; ++i) row_fma(x[i * k + kk], dy + i * n, dwr, n);
  }
}

void v_bias_add(const double* x, const double* b, double* out, int64_t rows, int64_t n) {
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = x + r * n;
    double* outr = out + r * n;
    int64_t j = 0;
    for (; j + 4 <= n; j += 4)
      _mm256_storeu_pd(outr + j, _mm256_add_pd(_mm256_loadu_pd(xr + j), _mm256_loadu_pd(b + j)));
    for (; j < n; ++j) outr[j] = xr[j] + b[j];
  }
}
void v_acc_colsum(double* db, const double* dy, int64_t rows, int64_t n) {
  for (int64_t r = 0; r < rows; ++r) v_acc(db, dy + r * n, n);
}

// The window accumulates into a stack buffer that stays L1-hot across the
// (ky, kx, c) sweep; the per-element accumulation order matches the scalar
// reference exactly. out_c is processed in chunks of 32 lanes.
void v_conv2d(const double* in, const double* k, double* out, const ConvDims& d) {
  const int64_t in_plane = d.in_h * d.in_w * d.in_c;
  const int64_t out_plane = d.out_h * d.out_w * d.out_c;
  const int64_t krow = d.in_c * d.out_c;
  constexpr int64_t kChunk = 32;
  alignas(32) double acc[kChunk];
  for (int64_t b = 0; b < d.batch; ++b) {
    const double* inb = in + b * in_plane;
    double* outb = out + b * out_plane;
    for (int64_t oy = 0; oy < d.out_h; ++oy) {
      const int64_t iy0 = oy * d.stride - d.pad_top;
      const int64_t ky_lo = iy0 < 0 ? -iy0 : 0;
      const int64_t ky_hi = std::min(d.k_h, d.in_h - iy0);
      for (int64_t ox = 0; ox < d.out_w; ++ox) {
        const int64_t ix0 = ox * d.stride - d.pad_left;
        const int64_t kx_lo = ix0 < 0 ? -ix0 : 0;
        const int64_t kx_hi = std::min(d.k_w, d.in_w - ix0);
        double* o = outb + (oy * d.out_w + ox) * d.out_c;
        for (int64_t f0 = 0; f0 < d.out_c; f0 += kChunk) {
          const int64_t fc = std::min(kChunk, d.out_c - f0);
          for (int64_t f = 0; f < fc; ++f) acc[f] = o[f0 + f];
          for (int64_t ky = ky_lo; ky < ky_hi; ++ky) {
            const double* in_row = inb + ((iy0 + ky) * d.in_w + ix0) * d.in_c;
            const double* k_row = k + ky * d.k_w * krow + f0;
            for (int64_t kx = kx_lo; kx < kx_hi; ++kx) {
              const double* ip = in_row + kx * d.in_c;
              const double* kp = k_row + kx * krow;
              for (int64_t c = 0; c < d.in_c; ++c)
                row_fma(ip[c], kp + c * d.out_c, acc, fc);
            }
          }
          for (int64_t f = 0; f < fc; ++f) o[f0 + f] = acc[f];
        }
      }
    }
  }
}
void v_conv2d_acc_din(const double* dout, const double* k, double* din, const ConvDims& d) {
  const int64_t in_plane = d.in_h * d.in_w * d.in_c;
  const int64_t out_plane = d.out_h * d.out_w * d.out_c;
  const int64_t krow = d.in_c * d.out_c;
  for (int64_t b = 0; b < d.batch; ++b) {
    const double* doutb = dout + b * out_plane;
    double* dinb = din + b * in_plane;
    for (int64_t oy = 0; oy < d.out_h; ++oy) {
      const int64_t iy0 = oy * d.stride - d.pad_top;
      const int64_t ky_lo = iy0 < 0 ? -iy0 : 0;
      const int64_t ky_hi = std::min(d.k_h, d.in_h - iy0);
      for (int64_t ox = 0; ox < d.out_w; ++ox) {
        const int64_t ix0 = ox * d.stride - d.pad_left;
        const int64_t kx_lo = ix0 < 0 ? -ix0 : 0;
        const int64_t kx_hi = std::min(d.k_w, d.in_w - ix0);
        const double* go = doutb + (oy * d.out_w + ox) * d.out_c;
        for (int64_t ky = ky_lo; ky < ky_hi; ++ky) {
          double* din_row = dinb + ((iy0 + ky) * d.in_w + ix0) * d.in_c;
          const double* k_row = k + ky * d.k_w * krow;
          for (int64_t kx = kx_lo; kx < kx_hi; ++kx) {
            double* dp = din_row + kx * d.in_c;
            const double* kp = k_row + kx * krow;
            for (int64_t c = 0; c < d.in_c; ++c)
              dp[c] += v_dot(go, kp + c * d.out_c, d.out_c);
          }
        }
      }
    }
  }
}
void v_conv2d_acc_dk(const double* in, const double* dout, double* dk, const ConvDims& d) {
  const int64_t in_plane = d.in_h * d.in_w * d.in_c;
  const int64_t out_plane = d.out_h * d.out_w * d.out_c;
  const int64_t krow = d.in_c * d.out_c;
  for (int64_t b = 0; b < d.batch; ++b) {
    const double* inb = in + b * in_plane;
    const double* doutb = dout + b * out_plane;
    for (int64_t oy = 0; oy < d.out_h; ++oy) {
      const int64_t iy0 = oy * d.stride - d.pad_top;
      const int64_t ky_lo = iy0 < 0 ? -iy0 : 0;
      const int64_t ky_hi = std::min(d.k_h, d.in_h - iy0);
      for (int64_t ox = 0; ox < d.out_w; ++ox) {
        const int64_t ix0 = ox * d.stride - d.pad_left;
        const int64_t kx_lo = ix0 < 0 ? -ix0 : 0;
        const int64_t kx_hi = std::min(d.k_w, d.in_w - ix0);
        const double* go = doutb + (oy * d.out_w + ox) * d.out_c;
        for (int64_t ky = ky_lo; ky < ky_hi; ++ky) {
          const double* in_row = inb + ((iy0 + ky) * d.in_w + ix0) * d.in_c;
          double* dk_row = dk + ky * d.k_w * krow;
          for (int64_t kx = kx_lo; kx < kx_hi; ++kx) {
            const double* ip = in_row + kx * d.in_c;
            double* dkp = dk_row + kx * krow;
            for (int64_t c = 0; c < d.in_c; ++c)
              row_fma(ip[c], go, dkp + c * d.out_c, d.out_c);
          }
        }
      }
    }
  }
}

void v_adam(double* p, const double* g, double* m, double* v, int64_t n,
            double alpha, double beta1, double beta2, double eps,
            double bc1, double bc2) {
  const double omb1 = 1.0 - beta1;
  const double omb2 = 1.0 - beta2;
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vo1 = _mm256_set1_pd(omb1);
  const __m256d vo2 = _mm256_set1_pd(omb2);
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d ve = _mm256_set1_pd(eps);
  const __m256d vbc1 = _mm256_set1_pd(bc1);
  const __m256d vbc2 = _mm256_set1_pd(bc2);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)),
                               _mm256_mul_pd(vo1, gi));
    __m256d vi = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                               _mm256_mul_pd(vo2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    __m256d mhat = _mm256_div_pd(mi, vbc1);
    __m256d vhat = _mm256_div_pd(vi, vbc2);
    __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), ve);
    __m256d step = _mm256_div_pd(_mm256_mul_pd(va, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
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

const Kernels* avx2_kernels_impl() {
  static const Kernels table = [] {
    Kernels t = scalar_kernels();  // maxpool stays scalar; everything else replaced
    t.name = "avx2";
    t.add = v_add;
    t.sub = v_sub;
    t.mul = v_mul;
    t.vmax = v_vmax;
    t.vmin = v_vmin;
    t.vabs = v_vabs;
    t.relu = v_relu;
    t.sign = v_sign;
    t.clamp = v_clamp;
    t.add_scalar = v_add_scalar;
    t.mul_scalar = v_mul_scalar;
    t.acc = v_acc;
    t.acc_scaled = v_acc_scaled;
    t.acc_mul = v_acc_mul;
    t.acc_relu_mask = v_acc_relu_mask;
    t.acc_sign_mul = v_acc_sign_mul;
    t.acc_cmp_mask = v_acc_cmp_mask;
    t.sum = v_sum;
    t.dot = v_dot;
    t.gemm_acc = v_gemm_acc;
    t.gemm_acc_bt = v_gemm_acc_bt;
    t.gemm_acc_at = v_gemm_acc_at;
    t.bias_add = v_bias_add;
    t.acc_colsum = v_acc_colsum;
    t.conv2d = v_conv2d;
    t.conv2d_acc_din = v_conv2d_acc_din;
    t.conv2d_acc_dk = v_conv2d_acc_dk;
    t.adam = v_adam;
    return t;
  }();
  return &table;
}

}  // namespace tolnet::kern

#else  // !(__AVX2__ && __FMA__)

namespace tolnet::kern {
const Kernels* avx2_kernels_impl() { return nullptr; }
}  // namespace tolnet::kern

#endif
