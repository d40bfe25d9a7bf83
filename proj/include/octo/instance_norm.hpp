#pragma once

#include "octo/layers.hpp"
#include "octo/tensor.hpp"

namespace octo {

// Per-input, per-channel standardization over the spatial extent, with a
// trainable affine (scale initialized to 1, shift to 0). sigma is
// sqrt(var + epsilon), so constant channels are safe.
struct InstanceNorm {
    Parameter scale;  // gamma_in, length C
    Parameter shift;  // beta_in, length C
    double epsilon = 1e-5;

    InstanceNorm() = default;
    explicit InstanceNorm(int64_t channels, double eps = 1e-5);

    int64_t channels() const { return scale.value.size(); }
};

struct InCache {
    Tensor input;
    int64_t batch = 0;
    bool batched_input = false;
    bool valid = false;
};

// x: [C,H,W] or [n,C,H,W]
Tensor instance_norm_forward(const InstanceNorm& in, const Tensor& x, InCache* cache = nullptr);

// Accumulates parameter grads into in.scale/in.shift when accumulate_params
// is set; returns the input gradient.
Tensor instance_norm_backward(InstanceNorm& in, const Tensor& upstream, const InCache& cache,
                              bool accumulate_params = true);

}  // namespace octo
