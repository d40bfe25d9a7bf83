#pragma once

#include <cstdint>
#include <vector>

#include "octo/codebook.hpp"
#include "octo/tensor.hpp"

namespace octo::vq {

// Quantization of one H x W grid of M-dimensional cell vectors.
// indices holds the selected atom id per (cell, slice); for group VQ it is
// the nearest atom inside the chosen group. quantized is the reconstruction
// the decoder sees (atom rows, or blended vectors for group VQ).
struct QuantizeResult {
    int64_t rows = 0, cols = 0, slices = 1;
    std::vector<int32_t> indices;  // rows*cols*slices
    Tensor quantized;              // [rows, cols, M]

    int32_t index_at(int64_t r, int64_t c, int64_t s = 0) const {
        return indices[static_cast<size_t>((r * cols + c) * slices + s)];
    }
    int64_t cell_count() const { return rows * cols; }
};

struct NearestAtom {
    int32_t index = 0;
    std::vector<double> atom;
};

// Argmin over squared Euclidean distance; ties break to the lowest index.
// Requires slice_count == 1.
NearestAtom nearest_atom(const std::vector<double>& vec, const Codebook& cb);

struct GroupQuantize {
    int64_t group_index = 0;
    std::vector<double> blended;   // weighted average of the chosen group's atoms
    std::vector<double> weights;   // w_k = 1/||z_e - e_k||, one per group atom
    int32_t nearest_index = 0;     // global id of the closest atom in the group
    bool exact_match = false;      // vec equals an atom; blended is that atom
};

// Group chosen by the mean of Euclidean distances to each atom in the group;
// the output vector is the inverse-distance weighted average of that group.
// An exact atom match (distance < 1e-12) returns the atom with a one-hot
// weight instead of dividing by zero.
GroupQuantize group_quantize(const std::vector<double>& vec, const Codebook& cb);

// The general grid quantizer: per slice, per cell, group VQ when G > 1 and
// plain nearest-atom otherwise. n_c = 1 with G = 1 is plain VQ.
QuantizeResult quantize_grid(const Tensor& grid, const Codebook& cb);

// Rebuild the quantized grid a receiver can reconstruct from transmitted
// indices alone (atom lookup; group blending is not recoverable).
Tensor dequantize(const std::vector<int32_t>& indices, int64_t rows, int64_t cols, int64_t slices,
                  const Codebook& cb);

struct VqLoss {
    double codebook_loss = 0.0;    // alpha * mean_cells ||sg[z_e] - e||^2
    double commitment_loss = 0.0;  // beta  * mean_cells ||z_e - sg[e]||^2
};

VqLoss vq_loss(const Tensor& z_e, const QuantizeResult& result, double alpha, double beta);

// Identity pass-through of gradients across the quantization boundary.
Tensor straight_through(const Tensor& decoder_grad_at_zq);

// One EMA step (decay gamma): N_i <- g*N_i + (1-g)*n_i, m_i <- g*m_i +
// (1-g)*sum(z), atom_i <- m_i/N_i for N_i > 0. Atoms with N_i == 0 keep
// their value. Assigned vectors are whole rows (length M); callers feed the
// per-cell encoder outputs with their selected atom ids.
void ema_update(Codebook& cb, const double* vectors, const int32_t* assigned_atoms, int64_t n);

}  // namespace octo::vq
