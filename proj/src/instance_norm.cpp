#include "octo/instance_norm.hpp"

#include <cmath>
#include <stdexcept>

namespace octo {

InstanceNorm::InstanceNorm(int64_t channels, double eps) : epsilon(eps) {
    if (eps <= 0.0) throw std::invalid_argument("instance_norm: epsilon must be > 0");
    Tensor g({channels});
    g.fill(1.0);
    scale = Parameter("in_scale", std::move(g));
    shift = Parameter("in_shift", Tensor({channels}));
}

namespace {

void shape_check(const InstanceNorm& in, const Tensor& x, int64_t* n, int64_t* c, int64_t* hw,
                 bool* batched) {
    if (x.shape.size() == 3 && x.shape[0] == in.channels()) {
        *n = 1;
        *batched = false;
    } else if (x.shape.size() == 4 && x.shape[1] == in.channels()) {
        *n = x.shape[0];
        *batched = true;
    } else {
        throw std::invalid_argument("instance_norm: expected [C,H,W] or [n,C,H,W] with C=" +
                                    std::to_string(in.channels()) + ", got " +
                                    Tensor::shape_str(x.shape));
    }
    *c = in.channels();
    const size_t off = *batched ? 2 : 1;
    *hw = x.shape[off] * x.shape[off + 1];
}

}  // namespace

Tensor instance_norm_forward(const InstanceNorm& in, const Tensor& x, InCache* cache) {
    int64_t n, c, hw;
    bool batched;
    shape_check(in, x, &n, &c, &hw, &batched);

    Tensor y(x.shape);
    const double* gam = in.scale.value.data.data();
    const double* bet = in.shift.value.data.data();
    const double inv_hw = 1.0 / static_cast<double>(hw);
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < n * c; ++t) {
        const double* src = x.data.data() + t * hw;
        double* dst = y.data.data() + t * hw;
        const int64_t ch = t % c;
        double mu = 0.0;
        for (int64_t i = 0; i < hw; ++i) mu += src[i];
        mu *= inv_hw;
        double var = 0.0;
        for (int64_t i = 0; i < hw; ++i) var += (src[i] - mu) * (src[i] - mu);
        var *= inv_hw;
        const double sigma = std::sqrt(var + in.epsilon);
        for (int64_t i = 0; i < hw; ++i) dst[i] = gam[ch] * (src[i] - mu) / sigma + bet[ch];
    }
    if (cache) {
        cache->input = x;
        cache->batch = n;
        cache->batched_input = batched;
        cache->valid = true;
    }
    return y;
}

Tensor instance_norm_backward(InstanceNorm& in, const Tensor& upstream, const InCache& cache,
                              bool accumulate_params) {
    if (!cache.valid) throw std::runtime_error("instance_norm_backward: called before forward");
    const Tensor& x = cache.input;
    check_same_shape(upstream, x, "instance_norm_backward");
    int64_t n, c, hw;
    bool batched;
    shape_check(in, x, &n, &c, &hw, &batched);

    Tensor gx(x.shape);
    const double* gam = in.scale.value.data.data();
    const double inv_hw = 1.0 / static_cast<double>(hw);
    // parameter grads summed serially per channel for determinism
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t ch = 0; ch < c; ++ch) {
            const double* src = x.data.data() + (i * c + ch) * hw;
            const double* gu = upstream.data.data() + (i * c + ch) * hw;
            double* dst = gx.data.data() + (i * c + ch) * hw;
            double mu = 0.0;
            for (int64_t t = 0; t < hw; ++t) mu += src[t];
            mu *= inv_hw;
            double var = 0.0;
            for (int64_t t = 0; t < hw; ++t) var += (src[t] - mu) * (src[t] - mu);
            var *= inv_hw;
            const double sigma = std::sqrt(var + in.epsilon);
            double gsum = 0.0, gxhat = 0.0;
            for (int64_t t = 0; t < hw; ++t) {
                const double xh = (src[t] - mu) / sigma;
                gsum += gu[t];
                gxhat += gu[t] * xh;
            }
            if (accumulate_params) {
                in.scale.grad[ch] += gxhat;
                in.shift.grad[ch] += gsum;
            }
            for (int64_t t = 0; t < hw; ++t) {
                const double xh = (src[t] - mu) / sigma;
                dst[t] = gam[ch] / sigma * (gu[t] - gsum * inv_hw - xh * gxhat * inv_hw);
            }
        }
    }
    return gx;
}

}  // namespace octo
