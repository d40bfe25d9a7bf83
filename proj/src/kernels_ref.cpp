#include "octo/kernels.hpp"

#include <limits>

// Serial reference kernels. Same arithmetic order as the parallel versions,
// so outputs must match bit for bit; the unit tests assert that.

namespace octo::kern::ref {

void affine_forward(const double* X, int64_t n, int64_t in, const double* W, const double* b,
                    int64_t out, double* Y) {
    for (int64_t i = 0; i < n; ++i) {
        const double* x = X + i * in;
        for (int64_t o = 0; o < out; ++o) {
            const double* w = W + o * in;
            double acc = b ? b[o] : 0.0;
            for (int64_t j = 0; j < in; ++j) acc += w[j] * x[j];
            Y[i * out + o] = acc;
        }
    }
}

void affine_backward(const double* X, const double* G, int64_t n, int64_t in, int64_t out,
                     const double* W, double* dW, double* db, double* dX) {
    if (dW) {
        for (int64_t o = 0; o < out; ++o) {
            for (int64_t j = 0; j < in; ++j) {
                double acc = 0.0;
                for (int64_t i = 0; i < n; ++i) acc += G[i * out + o] * X[i * in + j];
                dW[o * in + j] += acc;
            }
        }
    }
    if (db) {
        for (int64_t o = 0; o < out; ++o) {
            double acc = 0.0;
            for (int64_t i = 0; i < n; ++i) acc += G[i * out + o];
            db[o] += acc;
        }
    }
    if (dX) {
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t j = 0; j < in; ++j) {
                double acc = 0.0;
                for (int64_t o = 0; o < out; ++o) acc += G[i * out + o] * W[o * in + j];
                dX[i * in + j] = acc;
            }
        }
    }
}

void conv2d_forward(const double* X, int64_t n, int64_t cin, int64_t h, int64_t w,
                    const double* Wt, const double* b, int64_t cout, int64_t k, int64_t s,
                    int64_t p, double* Y) {
    const int64_t ho = (h + 2 * p - k) / s + 1;
    const int64_t wo = (w + 2 * p - k) / s + 1;
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t co = 0; co < cout; ++co) {
            for (int64_t y_ = 0; y_ < ho; ++y_) {
                for (int64_t x_ = 0; x_ < wo; ++x_) {
                    double acc = b ? b[co] : 0.0;
                    for (int64_t ci = 0; ci < cin; ++ci) {
                        const double* xin = X + ((i * cin + ci) * h) * w;
                        const double* wk = Wt + ((co * cin + ci) * k) * k;
                        for (int64_t kh = 0; kh < k; ++kh) {
                            const int64_t yy = y_ * s - p + kh;
                            if (yy < 0 || yy >= h) continue;
                            for (int64_t kw = 0; kw < k; ++kw) {
                                const int64_t xx = x_ * s - p + kw;
                                if (xx < 0 || xx >= w) continue;
                                acc += xin[yy * w + xx] * wk[kh * k + kw];
                            }
                        }
                    }
                    Y[((i * cout + co) * ho + y_) * wo + x_] = acc;
                }
            }
        }
    }
}

void conv2d_backward(const double* X, const double* G, int64_t n, int64_t cin, int64_t h,
                     int64_t w, const double* Wt, int64_t cout, int64_t k, int64_t s, int64_t p,
                     double* dW, double* db, double* dX) {
    const int64_t ho = (h + 2 * p - k) / s + 1;
    const int64_t wo = (w + 2 * p - k) / s + 1;
    if (dW) {
        for (int64_t co = 0; co < cout; ++co) {
            for (int64_t ci = 0; ci < cin; ++ci) {
                for (int64_t kh = 0; kh < k; ++kh) {
                    for (int64_t kw = 0; kw < k; ++kw) {
                        double acc = 0.0;
                        for (int64_t i = 0; i < n; ++i) {
                            const double* xin = X + ((i * cin + ci) * h) * w;
                            const double* g = G + ((i * cout + co) * ho) * wo;
                            for (int64_t y_ = 0; y_ < ho; ++y_) {
                                const int64_t yy = y_ * s - p + kh;
                                if (yy < 0 || yy >= h) continue;
                                for (int64_t x_ = 0; x_ < wo; ++x_) {
                                    const int64_t xx = x_ * s - p + kw;
                                    if (xx < 0 || xx >= w) continue;
                                    acc += g[y_ * wo + x_] * xin[yy * w + xx];
                                }
                            }
                        }
                        dW[((co * cin + ci) * k + kh) * k + kw] += acc;
                    }
                }
            }
        }
    }
    if (db) {
        for (int64_t co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (int64_t i = 0; i < n; ++i) {
                const double* g = G + ((i * cout + co) * ho) * wo;
                for (int64_t t = 0; t < ho * wo; ++t) acc += g[t];
            }
            db[co] += acc;
        }
    }
    if (dX) {
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t ci = 0; ci < cin; ++ci) {
                for (int64_t yy = 0; yy < h; ++yy) {
                    for (int64_t xx = 0; xx < w; ++xx) {
                        double acc = 0.0;
                        for (int64_t co = 0; co < cout; ++co) {
                            const double* g = G + ((i * cout + co) * ho) * wo;
                            const double* wk = Wt + ((co * cin + ci) * k) * k;
                            for (int64_t kh = 0; kh < k; ++kh) {
                                const int64_t ys = yy + p - kh;
                                if (ys < 0 || ys % s != 0) continue;
                                const int64_t y_ = ys / s;
                                if (y_ >= ho) continue;
                                for (int64_t kw = 0; kw < k; ++kw) {
                                    const int64_t xs = xx + p - kw;
                                    if (xs < 0 || xs % s != 0) continue;
                                    const int64_t x_ = xs / s;
                                    if (x_ >= wo) continue;
                                    acc += g[y_ * wo + x_] * wk[kh * k + kw];
                                }
                            }
                        }
                        dX[((i * cin + ci) * h + yy) * w + xx] = acc;
                    }
                }
            }
        }
    }
}

void tconv2d_forward(const double* X, int64_t n, int64_t cin, int64_t h, int64_t w,
                     const double* Wt, const double* b, int64_t cout, int64_t k, int64_t s,
                     int64_t p, double* Y) {
    const int64_t ho = (h - 1) * s - 2 * p + k;
    const int64_t wo = (w - 1) * s - 2 * p + k;
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t co = 0; co < cout; ++co) {
            for (int64_t y_ = 0; y_ < ho; ++y_) {
                for (int64_t x_ = 0; x_ < wo; ++x_) {
                    double acc = b ? b[co] : 0.0;
                    for (int64_t ci = 0; ci < cin; ++ci) {
                        const double* xin = X + ((i * cin + ci) * h) * w;
                        const double* wk = Wt + ((ci * cout + co) * k) * k;
                        for (int64_t kh = 0; kh < k; ++kh) {
                            const int64_t ys = y_ + p - kh;
                            if (ys < 0 || ys % s != 0) continue;
                            const int64_t yy = ys / s;
                            if (yy >= h) continue;
                            for (int64_t kw = 0; kw < k; ++kw) {
                                const int64_t xs = x_ + p - kw;
                                if (xs < 0 || xs % s != 0) continue;
                                const int64_t xx = xs / s;
                                if (xx >= w) continue;
                                acc += xin[yy * w + xx] * wk[kh * k + kw];
                            }
                        }
                    }
                    Y[((i * cout + co) * ho + y_) * wo + x_] = acc;
                }
            }
        }
    }
}

void tconv2d_backward(const double* X, const double* G, int64_t n, int64_t cin, int64_t h,
                      int64_t w, const double* Wt, int64_t cout, int64_t k, int64_t s, int64_t p,
                      double* dW, double* db, double* dX) {
    const int64_t ho = (h - 1) * s - 2 * p + k;
    const int64_t wo = (w - 1) * s - 2 * p + k;
    if (dW) {
        for (int64_t ci = 0; ci < cin; ++ci) {
            for (int64_t co = 0; co < cout; ++co) {
                for (int64_t kh = 0; kh < k; ++kh) {
                    for (int64_t kw = 0; kw < k; ++kw) {
                        double acc = 0.0;
                        for (int64_t i = 0; i < n; ++i) {
                            const double* xin = X + ((i * cin + ci) * h) * w;
                            const double* g = G + ((i * cout + co) * ho) * wo;
                            for (int64_t yy = 0; yy < h; ++yy) {
                                const int64_t y_ = yy * s - p + kh;
                                if (y_ < 0 || y_ >= ho) continue;
                                for (int64_t xx = 0; xx < w; ++xx) {
                                    const int64_t x_ = xx * s - p + kw;
                                    if (x_ < 0 || x_ >= wo) continue;
                                    acc += xin[yy * w + xx] * g[y_ * wo + x_];
                                }
                            }
                        }
                        dW[((ci * cout + co) * k + kh) * k + kw] += acc;
                    }
                }
            }
        }
    }
    if (db) {
        for (int64_t co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (int64_t i = 0; i < n; ++i) {
                const double* g = G + ((i * cout + co) * ho) * wo;
                for (int64_t t = 0; t < ho * wo; ++t) acc += g[t];
            }
            db[co] += acc;
        }
    }
    if (dX) {
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t ci = 0; ci < cin; ++ci) {
                for (int64_t yy = 0; yy < h; ++yy) {
                    for (int64_t xx = 0; xx < w; ++xx) {
                        double acc = 0.0;
                        for (int64_t co = 0; co < cout; ++co) {
                            const double* g = G + ((i * cout + co) * ho) * wo;
                            const double* wk = Wt + ((ci * cout + co) * k) * k;
                            for (int64_t kh = 0; kh < k; ++kh) {
                                const int64_t y_ = yy * s - p + kh;
                                if (y_ < 0 || y_ >= ho) continue;
                                for (int64_t kw = 0; kw < k; ++kw) {
                                    const int64_t x_ = xx * s - p + kw;
                                    if (x_ < 0 || x_ >= wo) continue;
                                    acc += g[y_ * wo + x_] * wk[kh * k + kw];
                                }
                            }
                        }
                        dX[((i * cin + ci) * h + yy) * w + xx] = acc;
                    }
                }
            }
        }
    }
}

void nearest_atoms(const double* Q, int64_t n, int64_t q_stride, const double* A, int64_t K,
                   int64_t a_stride, int64_t len, int32_t* out_idx) {
    for (int64_t i = 0; i < n; ++i) {
        const double* q = Q + i * q_stride;
        double best = std::numeric_limits<double>::infinity();
        int32_t best_j = 0;
        for (int64_t j = 0; j < K; ++j) {
            const double* a = A + j * a_stride;
            double d = 0.0;
            for (int64_t m = 0; m < len; ++m) {
                const double diff = q[m] - a[m];
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                best_j = static_cast<int32_t>(j);
            }
        }
        out_idx[i] = best_j;
    }
}

}  // namespace octo::kern::ref
