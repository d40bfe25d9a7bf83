#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "octo/tensor.hpp"

namespace octo::vq {

// Exponential-moving-average statistics for codebook updates:
// counts N (per atom) and vector sums m (per atom row).
struct EmaState {
    std::vector<double> counts;  // N, length K
    Tensor sums;                 // m, K x M
    double decay = 0.99;         // gamma
};

// K x M atom dictionary with group structure along K (G groups of K/G atoms)
// and slice structure along M (n_c slices of M/n_c columns).
struct Codebook {
    Tensor atoms;  // K x M
    int64_t group_count = 1;
    int64_t slice_count = 1;
    EmaState ema;

    int64_t atom_count() const { return atoms.shape.empty() ? 0 : atoms.shape[0]; }
    int64_t dim() const { return atoms.shape.size() < 2 ? 0 : atoms.shape[1]; }
    int64_t group_size() const { return atom_count() / group_count; }
    int64_t slice_width() const { return dim() / slice_count; }

    const double* atom(int64_t i) const { return atoms.data.data() + i * dim(); }

    void validate() const;
};

// Atoms are K distinct seed vectors sampled uniformly; EMA state starts
// empty. Deterministic given rng_seed.
Codebook init_codebook(const std::vector<std::vector<double>>& seed_vectors, int64_t K,
                       uint64_t rng_seed);

// Binary container: "OCTB", version u16, K u32, M u32, G u32, n_c u32,
// gamma f64, atoms K*M f64, counts K f64, sums K*M f64 (all little-endian).
std::vector<uint8_t> serialize_codebook(const Codebook& cb);
Codebook deserialize_codebook(const uint8_t* data, size_t len);
void save_codebook(const Codebook& cb, const std::string& path);
Codebook load_codebook(const std::string& path);

}  // namespace octo::vq
