#pragma once

#include <cstdint>

// Batched compute kernels. Every output element is produced by one serial
// inner loop, so results are bit-identical for any thread count. The serial
// twins in kern::ref keep the same arithmetic order and are used by the unit
// tests and the kernel benchmark.

namespace octo::kern {

// X [n,in], W [out,in], b [out] -> Y [n,out]
void affine_forward(const double* X, int64_t n, int64_t in, const double* W, const double* b,
                    int64_t out, double* Y);

// G [n,out]; dW/db accumulated, dX [n,in] overwritten (may be null)
void affine_backward(const double* X, const double* G, int64_t n, int64_t in, int64_t out,
                     const double* W, double* dW, double* db, double* dX);

// X [n,Cin,H,W], Wt [Cout,Cin,k,k], b [Cout] -> Y [n,Cout,Ho,Wo]
// Ho = (H + 2p - k)/s + 1
void conv2d_forward(const double* X, int64_t n, int64_t cin, int64_t h, int64_t w,
                    const double* Wt, const double* b, int64_t cout, int64_t k, int64_t s,
                    int64_t p, double* Y);

void conv2d_backward(const double* X, const double* G, int64_t n, int64_t cin, int64_t h,
                     int64_t w, const double* Wt, int64_t cout, int64_t k, int64_t s, int64_t p,
                     double* dW, double* db, double* dX);

// X [n,Cin,H,W], Wt [Cin,Cout,k,k], b [Cout] -> Y [n,Cout,Ho,Wo]
// Ho = (H - 1)s - 2p + k
void tconv2d_forward(const double* X, int64_t n, int64_t cin, int64_t h, int64_t w,
                     const double* Wt, const double* b, int64_t cout, int64_t k, int64_t s,
                     int64_t p, double* Y);

void tconv2d_backward(const double* X, const double* G, int64_t n, int64_t cin, int64_t h,
                      int64_t w, const double* Wt, int64_t cout, int64_t k, int64_t s, int64_t p,
                      double* dW, double* db, double* dX);

// Nearest atom by squared Euclidean distance over `len` components, ties to
// the lowest index. Query i starts at Q + i*q_stride, atom j at A + j*a_stride.
void nearest_atoms(const double* Q, int64_t n, int64_t q_stride, const double* A, int64_t K,
                   int64_t a_stride, int64_t len, int32_t* out_idx);

namespace ref {

void affine_forward(const double* X, int64_t n, int64_t in, const double* W, const double* b,
                    int64_t out, double* Y);
void affine_backward(const double* X, const double* G, int64_t n, int64_t in, int64_t out,
                     const double* W, double* dW, double* db, double* dX);
void conv2d_forward(const double* X, int64_t n, int64_t cin, int64_t h, int64_t w,
                    const double* Wt, const double* b, int64_t cout, int64_t k, int64_t s,
                    int64_t p, double* Y);
void conv2d_backward(const double* X, const double* G, int64_t n, int64_t cin, int64_t h,
                     int64_t w, const double* Wt, int64_t cout, int64_t k, int64_t s, int64_t p,
                     double* dW, double* db, double* dX);
void tconv2d_forward(const double* X, int64_t n, int64_t cin, int64_t h, int64_t w,
                     const double* Wt, const double* b, int64_t cout, int64_t k, int64_t s,
                     int64_t p, double* Y);
void tconv2d_backward(const double* X, const double* G, int64_t n, int64_t cin, int64_t h,
                      int64_t w, const double* Wt, int64_t cout, int64_t k, int64_t s, int64_t p,
                      double* dW, double* db, double* dX);
void nearest_atoms(const double* Q, int64_t n, int64_t q_stride, const double* A, int64_t K,
                   int64_t a_stride, int64_t len, int32_t* out_idx);

}  // namespace ref

}  // namespace octo::kern
