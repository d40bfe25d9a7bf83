#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "octo/rng.hpp"
#include "octo/tensor.hpp"

namespace octo {

struct AdamState {
    Tensor m;
    Tensor v;
    int64_t step_count = 0;
};

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;   // same shape as value
    AdamState adam;

    explicit Parameter(std::string n = "", Tensor v = Tensor{})
        : name(std::move(n)), value(std::move(v)) {
        grad = Tensor(value.shape);
        adam.m = Tensor(value.shape);
        adam.v = Tensor(value.shape);
    }

    void zero_grad() { grad.fill(0.0); }
};

// Bias-corrected Adam with beta1=0.9, beta2=0.999, eps=1e-8. Grads are zeroed
// after the step. Throws if a gradient is non-finite, naming the parameter.
void adam_step(const std::vector<Parameter*>& params, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

enum class LayerKind : uint8_t {
    Affine = 0,
    Conv2d = 1,
    TConv2d = 2,
    Relu = 3,
    InstanceNorm = 4,
};

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int64_t in_dim = 0, out_dim = 0;                         // affine
    int64_t in_ch = 0, out_ch = 0, ksize = 0, stride = 1, pad = 0;  // conv / tconv
    int64_t channels = 0;                                    // instance-norm

    static LayerSpec affine(int64_t in, int64_t out) {
        LayerSpec s;
        s.kind = LayerKind::Affine;
        s.in_dim = in;
        s.out_dim = out;
        return s;
    }
    static LayerSpec conv2d(int64_t in_ch, int64_t out_ch, int64_t k, int64_t stride, int64_t pad) {
        LayerSpec s;
        s.kind = LayerKind::Conv2d;
        s.in_ch = in_ch;
        s.out_ch = out_ch;
        s.ksize = k;
        s.stride = stride;
        s.pad = pad;
        return s;
    }
    static LayerSpec tconv2d(int64_t in_ch, int64_t out_ch, int64_t k, int64_t stride, int64_t pad) {
        LayerSpec s;
        s.kind = LayerKind::TConv2d;
        s.in_ch = in_ch;
        s.out_ch = out_ch;
        s.ksize = k;
        s.stride = stride;
        s.pad = pad;
        return s;
    }
    static LayerSpec relu() { return LayerSpec{}; }
    static LayerSpec instance_norm(int64_t channels) {
        LayerSpec s;
        s.kind = LayerKind::InstanceNorm;
        s.channels = channels;
        return s;
    }
};

struct Layer {
    LayerSpec spec;
    std::vector<Parameter> params;
};

// Per-call activation record. Holds each layer's input batch; independent
// caches make concurrent forward passes over one frozen stack safe.
struct StackCache {
    std::vector<Tensor> inputs;
    int64_t batch = 0;
    bool batched_input = false;
    bool valid = false;
    double min_abs_relu_preact = 1e300;
};

// Fixed-menu layer pipeline over batched tensors. Input is either the
// declared per-sample shape (batch of one) or [n, ...shape].
class LayerStack {
public:
    LayerStack() = default;
    LayerStack(std::vector<int64_t> input_shape, const std::vector<LayerSpec>& specs, Rng& rng);

    const std::vector<int64_t>& input_shape() const { return input_shape_; }
    const std::vector<int64_t>& output_shape() const { return output_shape_; }
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    int64_t param_count() const;
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    void zero_grads();

    // Stateful pair: forward records into the internal cache, backward
    // consumes it and accumulates into Parameter.grad.
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& upstream_grad);

    // Re-entrant pair for callers that manage their own caches. grad_sinks
    // must match parameters() order; pass empty to skip parameter grads.
    Tensor forward(const Tensor& x, StackCache& cache) const;
    Tensor backward(const Tensor& upstream_grad, const StackCache& cache,
                    const std::vector<Tensor*>& grad_sinks) const;

    bool empty() const { return layers_.empty(); }

private:
    std::vector<int64_t> input_shape_;
    std::vector<int64_t> output_shape_;
    std::vector<Layer> layers_;
    StackCache cache_;
};

// Builds the scalar check loss L = 0.5*sum(f(x)^2) and compares analytic
// gradients of all parameters and the input against central differences at
// h=1e-5. Coordinates whose perturbation lands within 1e-3 of a ReLU kink
// are skipped.
struct FdReport {
    double max_rel_err = 0.0;
    int64_t checked = 0;
    int64_t skipped = 0;
    bool within(double tol) const { return max_rel_err < tol; }
};

FdReport finite_diff_check(LayerStack& stack, const Tensor& input, double tolerance);

}  // namespace octo
