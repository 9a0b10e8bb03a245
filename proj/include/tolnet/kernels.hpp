#pragma once

#include <cstdint>

namespace tolnet::kern {

// Comparison mode for masked gradient accumulation.
enum class Cmp { GE, GT, LE, LT };

struct ConvDims {
  int64_t batch = 1;
  int64_t in_h = 0, in_w = 0, in_c = 0;
  int64_t k_h = 0, k_w = 0, out_c = 0;  // kernel layout [k_h, k_w, in_c, out_c]
  int64_t stride = 1;
  int64_t pad_top = 0, pad_left = 0;
  int64_t out_h = 0, out_w = 0;
};

struct PoolDims {
  int64_t batch = 1;
  int64_t in_h = 0, in_w = 0, c = 0;
  int64_t win_h = 0, win_w = 0;
  int64_t stride = 1;
  int64_t out_h = 0, out_w = 0;
};

// Kernel table. Every entry has a scalar reference implementation and,
// on x86-64, an AVX2+FMA variant. The two are required to produce
// bit-identical results: reductions use a fixed 4-partial-sum order,
// fused multiply-adds are std::fma on the scalar side, and tie/zero
// handling mirrors the AVX2 instruction semantics. The equivalence suite
// in tests/ checks this exhaustively.
struct Kernels {
  const char* name;

  // elementwise; out may alias an input
  void (*add)(const double* a, const double* b, double* out, int64_t n);
  void (*sub)(const double* a, const double* b, double* out, int64_t n);
  void (*mul)(const double* a, const double* b, double* out, int64_t n);
  void (*vmax)(const double* a, const double* b, double* out, int64_t n);
  void (*vmin)(const double* a, const double* b, double* out, int64_t n);
  void (*vabs)(const double* a, double* out, int64_t n);
  void (*relu)(const double* a, double* out, int64_t n);  // also clip_nonneg
  void (*sign)(const double* a, double* out, int64_t n);  // sign(0) = 0
  void (*clamp)(const double* a, double lo, double hi, double* out, int64_t n);
  void (*add_scalar)(const double* a, double s, double* out, int64_t n);
  void (*mul_scalar)(const double* a, double s, double* out, int64_t n);

  // accumulating helpers for the backward pass
  void (*acc)(double* dst, const double* src, int64_t n);                    // dst += src
  void (*acc_scaled)(double* dst, const double* src, double s, int64_t n);   // dst += s*src
  void (*acc_mul)(double* dst, const double* dy, const double* o, int64_t n);   // dst += dy*o
  void (*acc_relu_mask)(double* dst, const double* dy, const double* x, int64_t n);  // dst += dy*[x>0]
  void (*acc_sign_mul)(double* dst, const double* dy, const double* x, int64_t n);   // dst += dy*sign(x)
  void (*acc_cmp_mask)(double* dst, const double* dy, const double* a, const double* b,
                       Cmp cmp, int64_t n);  // dst += dy*[a cmp b]

  // reductions (4-partial-sum order)
  double (*sum)(const double* a, int64_t n);
  double (*dot)(const double* a, const double* b, int64_t n);

  // y[m,n] += x[m,k] * w[k,n]; accumulation over k in index order
  void (*gemm_acc)(const double* x, const double* w, double* y,
                   int64_t m, int64_t k, int64_t n);
  // dx[m,k] += dy[m,n] * w^T   (dx[i,kk] += dot(dy[i,:], w[kk,:]))
  void (*gemm_acc_bt)(const double* dy, const double* w, double* dx,
                      int64_t m, int64_t k, int64_t n);
  // dw[k,n] += x^T[k,m] * dy[m,n]; accumulation over m in index order
  void (*gemm_acc_at)(const double* x, const double* dy, double* dw,
                      int64_t m, int64_t k, int64_t n);

  // out[r, :] = x[r, :] + b  for every leading row r
  void (*bias_add)(const double* x, const double* b, double* out, int64_t rows, int64_t n);
  void (*acc_colsum)(double* db, const double* dy, int64_t rows, int64_t n);

  void (*conv2d)(const double* in, const double* k, double* out, const ConvDims& d);
  void (*conv2d_acc_din)(const double* dout, const double* k, double* din, const ConvDims& d);
  void (*conv2d_acc_dk)(const double* in, const double* dout, double* dk, const ConvDims& d);

  void (*maxpool)(const double* in, double* out, int64_t* argmax, const PoolDims& d);
  void (*maxpool_acc_din)(const double* dout, const int64_t* argmax, double* din, int64_t out_n);

  // Adam update, elementwise. bc1/bc2 are the bias corrections (1 - beta^t).
  void (*adam)(double* p, const double* g, double* m, double* v, int64_t n,
               double alpha, double beta1, double beta2, double eps,
               double bc1, double bc2);
};

const Kernels& scalar_kernels();

// nullptr when AVX2+FMA is unavailable (at build time or on this CPU).
const Kernels* avx2_kernels();

// Runtime selection: AVX2 when supported, else scalar. The environment
// variable TOLNET_KERNELS=scalar|avx2 forces a choice.
const Kernels& active_kernels();

// Test hook; nullptr restores automatic selection.
void set_active_kernels(const Kernels* k);

}  // namespace tolnet::kern
