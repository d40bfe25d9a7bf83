#include "octo/quantize.hpp"

#include <cmath>

#include "octo/kernels.hpp"

namespace octo::vq {

namespace {

constexpr double kExactMatchEps = 1e-12;

double euclid(const double* a, const double* b, int64_t len) {
    double d = 0.0;
    for (int64_t i = 0; i < len; ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return std::sqrt(d);
}

// Group VQ on one slice: picks the group with the smallest mean distance,
// blends its atoms by inverse distance. Atom rows advance by row_stride so
// the same code serves full vectors and slices.
struct SliceGroupResult {
    int64_t group_index;
    int32_t nearest_index;
    bool exact;
    std::vector<double> blended;
    std::vector<double> weights;
};

SliceGroupResult group_quantize_slice(const double* vec, const double* atoms, int64_t K,
                                      int64_t row_stride, int64_t len, int64_t group_count) {
    const int64_t group_size = K / group_count;
    std::vector<double> dist(static_cast<size_t>(K));
    for (int64_t j = 0; j < K; ++j) dist[static_cast<size_t>(j)] = euclid(vec, atoms + j * row_stride, len);

    int64_t best_group = 0;
    double best_mean = 0.0;
    for (int64_t g = 0; g < group_count; ++g) {
        double mean = 0.0;
        for (int64_t k = 0; k < group_size; ++k) mean += dist[static_cast<size_t>(g * group_size + k)];
        mean /= static_cast<double>(group_size);
        if (g == 0 || mean < best_mean) {
            best_mean = mean;
            best_group = g;
        }
    }

    SliceGroupResult r;
    r.group_index = best_group;
    r.blended.assign(static_cast<size_t>(len), 0.0);
    r.weights.assign(static_cast<size_t>(group_size), 0.0);

    const int64_t base = best_group * group_size;
    int64_t nearest = 0;
    for (int64_t k = 1; k < group_size; ++k) {
        if (dist[static_cast<size_t>(base + k)] < dist[static_cast<size_t>(base + nearest)]) nearest = k;
    }
    r.nearest_index = static_cast<int32_t>(base + nearest);

    if (dist[static_cast<size_t>(base + nearest)] < kExactMatchEps) {
        // singular weights at an exact match: return that atom one-hot
        r.exact = true;
        r.weights[static_cast<size_t>(nearest)] = 1.0;
        const double* a = atoms + (base + nearest) * row_stride;
        for (int64_t i = 0; i < len; ++i) r.blended[static_cast<size_t>(i)] = a[i];
        return r;
    }
    r.exact = false;
    double wsum = 0.0;
    for (int64_t k = 0; k < group_size; ++k) {
        const double w = 1.0 / dist[static_cast<size_t>(base + k)];
        r.weights[static_cast<size_t>(k)] = w;
        wsum += w;
    }
    for (int64_t k = 0; k < group_size; ++k) {
        const double w = r.weights[static_cast<size_t>(k)] / wsum;
        const double* a = atoms + (base + k) * row_stride;
        for (int64_t i = 0; i < len; ++i) r.blended[static_cast<size_t>(i)] += w * a[i];
    }
    return r;
}

}  // namespace

NearestAtom nearest_atom(const std::vector<double>& vec, const Codebook& cb) {
    cb.validate();
    if (cb.slice_count != 1) {
        throw std::invalid_argument("nearest_atom: codebook has slice count " +
                                    std::to_string(cb.slice_count) + ", expected 1");
    }
    const int64_t M = cb.dim();
    if (static_cast<int64_t>(vec.size()) != M) {
        throw std::invalid_argument("nearest_atom: vector length " + std::to_string(vec.size()) +
                                    " does not match atom dimension " + std::to_string(M));
    }
    int32_t idx = 0;
    kern::nearest_atoms(vec.data(), 1, M, cb.atoms.data.data(), cb.atom_count(), M, M, &idx);
    NearestAtom out;
    out.index = idx;
    out.atom.assign(cb.atom(idx), cb.atom(idx) + M);
    return out;
}

GroupQuantize group_quantize(const std::vector<double>& vec, const Codebook& cb) {
    cb.validate();
    if (cb.slice_count != 1) {
        throw std::invalid_argument("group_quantize: codebook has slice count " +
                                    std::to_string(cb.slice_count) + ", expected 1");
    }
    const int64_t M = cb.dim();
    if (static_cast<int64_t>(vec.size()) != M) {
        throw std::invalid_argument("group_quantize: vector length mismatch");
    }
    const auto r = group_quantize_slice(vec.data(), cb.atoms.data.data(), cb.atom_count(), M, M,
                                        cb.group_count);
    GroupQuantize out;
    out.group_index = r.group_index;
    out.blended = r.blended;
    out.weights = r.weights;
    out.nearest_index = r.nearest_index;
    out.exact_match = r.exact;
    return out;
}

QuantizeResult quantize_grid(const Tensor& grid, const Codebook& cb) {
    cb.validate();
    if (grid.shape.size() != 3 || grid.shape[2] != cb.dim()) {
        throw std::invalid_argument("quantize_grid: expected [H,W,M] grid with M=" +
                                    std::to_string(cb.dim()) + ", got " + Tensor::shape_str(grid.shape));
    }
    const int64_t H = grid.shape[0], W = grid.shape[1], M = cb.dim();
    const int64_t cells = H * W;
    const int64_t n_c = cb.slice_count;
    const int64_t width = cb.slice_width();
    const int64_t K = cb.atom_count();

    QuantizeResult out;
    out.rows = H;
    out.cols = W;
    out.slices = n_c;
    out.indices.assign(static_cast<size_t>(cells * n_c), 0);
    out.quantized = Tensor({H, W, M});

    if (cb.group_count == 1) {
        // plain VQ, sliced when n_c > 1
        for (int64_t s = 0; s < n_c; ++s) {
            std::vector<int32_t> idx(static_cast<size_t>(cells));
            kern::nearest_atoms(grid.data.data() + s * width, cells, M, cb.atoms.data.data() + s * width,
                                K, M, width, idx.data());
            for (int64_t c = 0; c < cells; ++c) {
                const int32_t a = idx[static_cast<size_t>(c)];
                out.indices[static_cast<size_t>(c * n_c + s)] = a;
                const double* src = cb.atom(a) + s * width;
                double* dst = out.quantized.data.data() + c * M + s * width;
                for (int64_t i = 0; i < width; ++i) dst[i] = src[i];
            }
        }
        return out;
    }

#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < cells; ++c) {
        for (int64_t s = 0; s < n_c; ++s) {
            const auto r = group_quantize_slice(grid.data.data() + c * M + s * width,
                                                cb.atoms.data.data() + s * width, K, M, width,
                                                cb.group_count);
            out.indices[static_cast<size_t>(c * n_c + s)] = r.nearest_index;
            double* dst = out.quantized.data.data() + c * M + s * width;
            for (int64_t i = 0; i < width; ++i) dst[i] = r.blended[static_cast<size_t>(i)];
        }
    }
    return out;
}

Tensor dequantize(const std::vector<int32_t>& indices, int64_t rows, int64_t cols, int64_t slices,
                  const Codebook& cb) {
    cb.validate();
    if (slices != cb.slice_count) {
        throw std::invalid_argument("dequantize: slice count mismatch");
    }
    if (static_cast<int64_t>(indices.size()) != rows * cols * slices) {
        throw std::invalid_argument("dequantize: index count mismatch");
    }
    const int64_t M = cb.dim(), width = cb.slice_width();
    Tensor grid({rows, cols, M});
    for (int64_t c = 0; c < rows * cols; ++c) {
        for (int64_t s = 0; s < slices; ++s) {
            const int32_t a = indices[static_cast<size_t>(c * slices + s)];
            if (a < 0 || a >= cb.atom_count()) {
                throw std::invalid_argument("dequantize: atom index " + std::to_string(a) +
                                            " out of range [0," + std::to_string(cb.atom_count()) + ")");
            }
            const double* src = cb.atom(a) + s * width;
            double* dst = grid.data.data() + c * M + s * width;
            for (int64_t i = 0; i < width; ++i) dst[i] = src[i];
        }
    }
    return grid;
}

VqLoss vq_loss(const Tensor& z_e, const QuantizeResult& result, double alpha, double beta) {
    check_same_shape(z_e, result.quantized, "vq_loss");
    const int64_t cells = result.cell_count();
    double d = 0.0;
    for (int64_t i = 0; i < z_e.size(); ++i) {
        const double diff = z_e[i] - result.quantized[i];
        d += diff * diff;
    }
    d /= static_cast<double>(cells);  // mean over cells of squared cell distance
    return VqLoss{alpha * d, beta * d};
}

Tensor straight_through(const Tensor& decoder_grad_at_zq) { return decoder_grad_at_zq; }

void ema_update(Codebook& cb, const double* vectors, const int32_t* assigned_atoms, int64_t n) {
    cb.validate();
    const int64_t K = cb.atom_count(), M = cb.dim();
    if (cb.ema.counts.empty()) {
        cb.ema.counts.assign(static_cast<size_t>(K), 0.0);
        cb.ema.sums = Tensor({K, M});
    }
    const double g = cb.ema.decay;

    // per-atom tallies accumulated in atom order for determinism
    std::vector<double> batch_count(static_cast<size_t>(K), 0.0);
    Tensor batch_sum({K, M});
    for (int64_t i = 0; i < n; ++i) {
        const int32_t a = assigned_atoms[i];
        if (a < 0 || a >= K) throw std::invalid_argument("ema_update: atom index out of range");
        batch_count[static_cast<size_t>(a)] += 1.0;
        double* dst = batch_sum.data.data() + a * M;
        const double* src = vectors + i * M;
        for (int64_t m = 0; m < M; ++m) dst[m] += src[m];
    }

    for (int64_t a = 0; a < K; ++a) {
        cb.ema.counts[static_cast<size_t>(a)] =
            g * cb.ema.counts[static_cast<size_t>(a)] + (1.0 - g) * batch_count[static_cast<size_t>(a)];
        double* m_row = cb.ema.sums.data.data() + a * M;
        const double* b_row = batch_sum.data.data() + a * M;
        for (int64_t m = 0; m < M; ++m) m_row[m] = g * m_row[m] + (1.0 - g) * b_row[m];
        if (cb.ema.counts[static_cast<size_t>(a)] > 0.0) {
            double* atom = cb.atoms.data.data() + a * M;
            for (int64_t m = 0; m < M; ++m) atom[m] = m_row[m] / cb.ema.counts[static_cast<size_t>(a)];
        }
    }
}

}  // namespace octo::vq
