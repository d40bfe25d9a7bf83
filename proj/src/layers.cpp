#include "octo/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "octo/kernels.hpp"

namespace octo {

void adam_step(const std::vector<Parameter*>& params, double lr, double beta1, double beta2,
               double eps) {
    for (Parameter* p : params) {
        for (int64_t i = 0; i < p->grad.size(); ++i) {
            if (!std::isfinite(p->grad[i])) {
                throw std::runtime_error("adam_step: non-finite gradient in parameter '" + p->name + "'");
            }
        }
    }
    for (Parameter* p : params) {
        AdamState& st = p->adam;
        st.step_count += 1;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.step_count));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.step_count));
        for (int64_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad[i];
            st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g;
            st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g * g;
            const double mhat = st.m[i] / bc1;
            const double vhat = st.v[i] / bc2;
            p->value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
        p->zero_grad();
    }
}

namespace {

std::vector<int64_t> layer_output_shape(const LayerSpec& s, const std::vector<int64_t>& in) {
    switch (s.kind) {
        case LayerKind::Affine: {
            int64_t flat = 1;
            for (int64_t d : in) flat *= d;
            if (flat != s.in_dim) {
                throw std::invalid_argument("affine layer expects " + std::to_string(s.in_dim) +
                                            " inputs, got shape " + Tensor::shape_str(in));
            }
            return {s.out_dim};
        }
        case LayerKind::Conv2d: {
            if (in.size() != 3 || in[0] != s.in_ch) {
                throw std::invalid_argument("conv2d expects [" + std::to_string(s.in_ch) +
                                            ",H,W], got " + Tensor::shape_str(in));
            }
            const int64_t ho = (in[1] + 2 * s.pad - s.ksize) / s.stride + 1;
            const int64_t wo = (in[2] + 2 * s.pad - s.ksize) / s.stride + 1;
            if (ho < 1 || wo < 1 || (in[1] + 2 * s.pad - s.ksize) % s.stride != 0 ||
                (in[2] + 2 * s.pad - s.ksize) % s.stride != 0) {
                throw std::invalid_argument("conv2d geometry does not compose on input " +
                                            Tensor::shape_str(in));
            }
            return {s.out_ch, ho, wo};
        }
        case LayerKind::TConv2d: {
            if (in.size() != 3 || in[0] != s.in_ch) {
                throw std::invalid_argument("tconv2d expects [" + std::to_string(s.in_ch) +
                                            ",H,W], got " + Tensor::shape_str(in));
            }
            const int64_t ho = (in[1] - 1) * s.stride - 2 * s.pad + s.ksize;
            const int64_t wo = (in[2] - 1) * s.stride - 2 * s.pad + s.ksize;
            if (ho < 1 || wo < 1) {
                throw std::invalid_argument("tconv2d geometry does not compose on input " +
                                            Tensor::shape_str(in));
            }
            return {s.out_ch, ho, wo};
        }
        case LayerKind::Relu:
            return in;
        case LayerKind::InstanceNorm: {
            if (in.size() != 3 || in[0] != s.channels) {
                throw std::invalid_argument("instance_norm expects [" + std::to_string(s.channels) +
                                            ",H,W], got " + Tensor::shape_str(in));
            }
            return in;
        }
    }
    throw std::logic_error("unknown layer kind");
}

constexpr double kInEps = 1e-5;  // instance-norm variance floor (Eq-style sqrt(var+eps))

}  // namespace

LayerStack::LayerStack(std::vector<int64_t> input_shape, const std::vector<LayerSpec>& specs,
                       Rng& rng) {
    input_shape_ = std::move(input_shape);
    std::vector<int64_t> cur = input_shape_;
    int li = 0;
    for (const LayerSpec& s : specs) {
        Layer layer;
        layer.spec = s;
        const std::string prefix = "layer" + std::to_string(li);
        switch (s.kind) {
            case LayerKind::Affine: {
                Tensor w({s.out_dim, s.in_dim});
                const double scale = std::sqrt(2.0 / static_cast<double>(s.in_dim));
                for (int64_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, scale);
                layer.params.emplace_back(prefix + ".weight", std::move(w));
                layer.params.emplace_back(prefix + ".bias", Tensor({s.out_dim}));
                break;
            }
            case LayerKind::Conv2d: {
                Tensor w({s.out_ch, s.in_ch, s.ksize, s.ksize});
                const double fan_in = static_cast<double>(s.in_ch * s.ksize * s.ksize);
                const double scale = std::sqrt(2.0 / fan_in);
                for (int64_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, scale);
                layer.params.emplace_back(prefix + ".weight", std::move(w));
                layer.params.emplace_back(prefix + ".bias", Tensor({s.out_ch}));
                break;
            }
            case LayerKind::TConv2d: {
                Tensor w({s.in_ch, s.out_ch, s.ksize, s.ksize});
                const double fan_in = static_cast<double>(s.in_ch * s.ksize * s.ksize);
                const double scale = std::sqrt(2.0 / fan_in);
                for (int64_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, scale);
                layer.params.emplace_back(prefix + ".weight", std::move(w));
                layer.params.emplace_back(prefix + ".bias", Tensor({s.out_ch}));
                break;
            }
            case LayerKind::Relu:
                break;
            case LayerKind::InstanceNorm: {
                Tensor g({s.channels});
                g.fill(1.0);
                layer.params.emplace_back(prefix + ".in_scale", std::move(g));
                layer.params.emplace_back(prefix + ".in_shift", Tensor({s.channels}));
                break;
            }
        }
        cur = layer_output_shape(s, cur);
        layers_.push_back(std::move(layer));
        ++li;
    }
    output_shape_ = cur;
}

int64_t LayerStack::param_count() const {
    int64_t n = 0;
    for (const Layer& l : layers_)
        for (const Parameter& p : l.params) n += p.value.size();
    return n;
}

std::vector<Parameter*> LayerStack::parameters() {
    std::vector<Parameter*> out;
    for (Layer& l : layers_)
        for (Parameter& p : l.params) out.push_back(&p);
    return out;
}

std::vector<const Parameter*> LayerStack::parameters() const {
    std::vector<const Parameter*> out;
    for (const Layer& l : layers_)
        for (const Parameter& p : l.params) out.push_back(&p);
    return out;
}

void LayerStack::zero_grads() {
    for (Layer& l : layers_)
        for (Parameter& p : l.params) p.zero_grad();
}

Tensor LayerStack::forward(const Tensor& x) { return forward(x, cache_); }

Tensor LayerStack::backward(const Tensor& upstream_grad) {
    std::vector<Tensor*> sinks;
    for (Layer& l : layers_)
        for (Parameter& p : l.params) sinks.push_back(&p.grad);
    return backward(upstream_grad, cache_, sinks);
}

Tensor LayerStack::forward(const Tensor& x, StackCache& cache) const {
    int64_t n = 1;
    bool batched = false;
    if (x.shape == input_shape_) {
        n = 1;
    } else if (x.shape.size() == input_shape_.size() + 1 &&
               std::vector<int64_t>(x.shape.begin() + 1, x.shape.end()) == input_shape_) {
        n = x.shape[0];
        batched = true;
    } else {
        throw std::invalid_argument("forward: input shape " + Tensor::shape_str(x.shape) +
                                    " does not match stack input " + Tensor::shape_str(input_shape_));
    }

    cache.inputs.clear();
    cache.batch = n;
    cache.batched_input = batched;
    cache.min_abs_relu_preact = 1e300;

    std::vector<int64_t> cur_shape = input_shape_;
    Tensor cur = x;
    if (!batched) {  // normalize to [1, ...shape]
        cur.shape.insert(cur.shape.begin(), 1);
    }
    for (const Layer& l : layers_) {
        cache.inputs.push_back(cur);
        const LayerSpec& s = l.spec;
        const std::vector<int64_t> out_shape = layer_output_shape(s, cur_shape);
        std::vector<int64_t> batched_out = out_shape;
        batched_out.insert(batched_out.begin(), n);
        Tensor next(batched_out);
        switch (s.kind) {
            case LayerKind::Affine:
                kern::affine_forward(cur.data.data(), n, s.in_dim, l.params[0].value.data.data(),
                                     l.params[1].value.data.data(), s.out_dim, next.data.data());
                break;
            case LayerKind::Conv2d:
                kern::conv2d_forward(cur.data.data(), n, s.in_ch, cur_shape[1], cur_shape[2],
                                     l.params[0].value.data.data(), l.params[1].value.data.data(),
                                     s.out_ch, s.ksize, s.stride, s.pad, next.data.data());
                break;
            case LayerKind::TConv2d:
                kern::tconv2d_forward(cur.data.data(), n, s.in_ch, cur_shape[1], cur_shape[2],
                                      l.params[0].value.data.data(), l.params[1].value.data.data(),
                                      s.out_ch, s.ksize, s.stride, s.pad, next.data.data());
                break;
            case LayerKind::Relu:
                for (int64_t i = 0; i < cur.size(); ++i) {
                    const double v = cur[i];
                    const double a = std::fabs(v);
                    if (a < cache.min_abs_relu_preact) cache.min_abs_relu_preact = a;
                    next[i] = v > 0.0 ? v : 0.0;
                }
                break;
            case LayerKind::InstanceNorm: {
                const int64_t c = s.channels, hw = cur_shape[1] * cur_shape[2];
                const double* gam = l.params[0].value.data.data();
                const double* bet = l.params[1].value.data.data();
                for (int64_t i = 0; i < n; ++i) {
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const double* src = cur.data.data() + (i * c + ch) * hw;
                        double* dst = next.data.data() + (i * c + ch) * hw;
                        double mu = 0.0;
                        for (int64_t t = 0; t < hw; ++t) mu += src[t];
                        mu /= static_cast<double>(hw);
                        double var = 0.0;
                        for (int64_t t = 0; t < hw; ++t) var += (src[t] - mu) * (src[t] - mu);
                        var /= static_cast<double>(hw);
                        const double sigma = std::sqrt(var + kInEps);
                        for (int64_t t = 0; t < hw; ++t)
                            dst[t] = gam[ch] * (src[t] - mu) / sigma + bet[ch];
                    }
                }
                break;
            }
        }
        cur = std::move(next);
        // keep per-sample shape only; the batch dim travels separately
        cur_shape = out_shape;
    }
    cache.valid = true;
    // output keeps the caller's convention: unbatched in, unbatched out
    if (!batched) {
        cur.shape.erase(cur.shape.begin());
        if (cur.shape.empty()) cur.shape = {1};
    }
    return cur;
}

Tensor LayerStack::backward(const Tensor& upstream_grad, const StackCache& cache,
                            const std::vector<Tensor*>& grad_sinks) const {
    if (!cache.valid) {
        throw std::runtime_error("backward: called before forward");
    }
    const int64_t n = cache.batch;
    // walk shapes forward once to recover per-layer input shapes
    std::vector<std::vector<int64_t>> in_shapes;
    std::vector<int64_t> cur_shape = input_shape_;
    for (const Layer& l : layers_) {
        in_shapes.push_back(cur_shape);
        cur_shape = layer_output_shape(l.spec, cur_shape);
    }
    if (upstream_grad.size() != n * Tensor::numel(cur_shape)) {
        throw std::invalid_argument("backward: upstream grad size " +
                                    std::to_string(upstream_grad.size()) + " does not match output");
    }

    size_t sink_at = grad_sinks.size();
    Tensor g = upstream_grad;
    for (int64_t li = static_cast<int64_t>(layers_.size()) - 1; li >= 0; --li) {
        const Layer& l = layers_[static_cast<size_t>(li)];
        const LayerSpec& s = l.spec;
        const Tensor& x = cache.inputs[static_cast<size_t>(li)];
        const std::vector<int64_t>& ish = in_shapes[static_cast<size_t>(li)];
        std::vector<int64_t> batched_in = ish;
        batched_in.insert(batched_in.begin(), n);
        Tensor gx(batched_in);

        double* dw = nullptr;
        double* db = nullptr;
        if (!grad_sinks.empty() && !l.params.empty()) {
            sink_at -= l.params.size();
            dw = grad_sinks[sink_at]->data.data();
            db = grad_sinks[sink_at + 1]->data.data();
        }

        switch (s.kind) {
            case LayerKind::Affine:
                kern::affine_backward(x.data.data(), g.data.data(), n, s.in_dim, s.out_dim,
                                      l.params[0].value.data.data(), dw, db, gx.data.data());
                break;
            case LayerKind::Conv2d:
                kern::conv2d_backward(x.data.data(), g.data.data(), n, s.in_ch, ish[1], ish[2],
                                      l.params[0].value.data.data(), s.out_ch, s.ksize, s.stride,
                                      s.pad, dw, db, gx.data.data());
                break;
            case LayerKind::TConv2d:
                kern::tconv2d_backward(x.data.data(), g.data.data(), n, s.in_ch, ish[1], ish[2],
                                       l.params[0].value.data.data(), s.out_ch, s.ksize, s.stride,
                                       s.pad, dw, db, gx.data.data());
                break;
            case LayerKind::Relu:
                for (int64_t i = 0; i < g.size(); ++i) gx[i] = x[i] > 0.0 ? g[i] : 0.0;
                break;
            case LayerKind::InstanceNorm: {
                const int64_t c = s.channels, hw = ish[1] * ish[2];
                const double* gam = l.params[0].value.data.data();
                for (int64_t i = 0; i < n; ++i) {
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const double* src = x.data.data() + (i * c + ch) * hw;
                        const double* gu = g.data.data() + (i * c + ch) * hw;
                        double* dst = gx.data.data() + (i * c + ch) * hw;
                        double mu = 0.0;
                        for (int64_t t = 0; t < hw; ++t) mu += src[t];
                        mu /= static_cast<double>(hw);
                        double var = 0.0;
                        for (int64_t t = 0; t < hw; ++t) var += (src[t] - mu) * (src[t] - mu);
                        var /= static_cast<double>(hw);
                        const double sigma = std::sqrt(var + kInEps);
                        double gsum = 0.0, gxhat = 0.0;
                        for (int64_t t = 0; t < hw; ++t) {
                            const double xh = (src[t] - mu) / sigma;
                            gsum += gu[t];
                            gxhat += gu[t] * xh;
                        }
                        if (dw) {
                            dw[ch] += gxhat;
                            db[ch] += gsum;
                        }
                        const double inv_hw = 1.0 / static_cast<double>(hw);
                        for (int64_t t = 0; t < hw; ++t) {
                            const double xh = (src[t] - mu) / sigma;
                            dst[t] = gam[ch] / sigma * (gu[t] - gsum * inv_hw - xh * gxhat * inv_hw);
                        }
                    }
                }
                break;
            }
        }
        g = std::move(gx);
    }
    if (!cache.batched_input && !g.shape.empty() && g.shape.front() == 1 && g.shape.size() > 1) {
        g.shape.erase(g.shape.begin());
    }
    return g;
}

FdReport finite_diff_check(LayerStack& stack, const Tensor& input, double /*tolerance*/) {
    constexpr double kH = 1e-5;
    constexpr double kKinkGuard = 1e-3;

    // analytic pass
    StackCache cache;
    Tensor y = stack.forward(input, cache);
    Tensor up = y;  // dL/dy for L = 0.5*sum(y^2)
    std::vector<Tensor> grads;
    std::vector<Tensor*> sinks;
    for (Parameter* p : stack.parameters()) {
        grads.emplace_back(p->value.shape);
        (void)p;
    }
    for (Tensor& t : grads) sinks.push_back(&t);
    Tensor input_grad = stack.backward(up, cache, sinks);

    const auto loss_at = [&stack](const Tensor& x, double* min_kink) -> double {
        StackCache c;
        Tensor out = stack.forward(x, c);
        double l = 0.0;
        for (int64_t i = 0; i < out.size(); ++i) l += 0.5 * out[i] * out[i];
        if (min_kink) *min_kink = std::min(*min_kink, c.min_abs_relu_preact);
        return l;
    };

    FdReport report;
    const auto check_coord = [&](double* coord, double analytic) {
        const double save = *coord;
        double kink = 1e300;
        *coord = save + kH;
        const double lp = loss_at(input, &kink);
        *coord = save - kH;
        const double lm = loss_at(input, &kink);
        *coord = save;
        if (kink < kKinkGuard) {
            ++report.skipped;
            return;
        }
        const double fd = (lp - lm) / (2.0 * kH);
        const double rel = std::fabs(analytic - fd) / std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
        if (rel > report.max_rel_err) report.max_rel_err = rel;
        ++report.checked;
    };

    auto params = stack.parameters();
    for (size_t pi = 0; pi < params.size(); ++pi) {
        for (int64_t i = 0; i < params[pi]->value.size(); ++i) {
            check_coord(&params[pi]->value.data[static_cast<size_t>(i)], grads[pi][i]);
        }
    }
    // input gradient: perturb a copy of the input
    Tensor x = input;
    for (int64_t i = 0; i < x.size(); ++i) {
        const double save = x[i];
        double kink = 1e300;
        x[i] = save + kH;
        const double lp = loss_at(x, &kink);
        x[i] = save - kH;
        const double lm = loss_at(x, &kink);
        x[i] = save;
        if (kink < kKinkGuard) {
            ++report.skipped;
            continue;
        }
        const double fd = (lp - lm) / (2.0 * kH);
        const double a = input_grad[i];
        const double rel = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-6});
        if (rel > report.max_rel_err) report.max_rel_err = rel;
        ++report.checked;
    }
    return report;
}

}  // namespace octo
