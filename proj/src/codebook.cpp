#include "octo/codebook.hpp"

#include <cmath>
#include <fstream>

#include "octo/detail/binio.hpp"
#include "octo/rng.hpp"

namespace octo::vq {

void Codebook::validate() const {
    const int64_t K = atom_count(), M = dim();
    if (K < 1 || M < 1) throw std::invalid_argument("codebook: empty atom matrix");
    if (group_count < 1 || K % group_count != 0) {
        throw std::invalid_argument("codebook: group count " + std::to_string(group_count) +
                                    " does not divide K=" + std::to_string(K));
    }
    if (slice_count < 1 || M % slice_count != 0) {
        throw std::invalid_argument("codebook: slice count " + std::to_string(slice_count) +
                                    " does not divide M=" + std::to_string(M));
    }
    for (double v : atoms.data) {
        if (!std::isfinite(v)) throw std::invalid_argument("codebook: non-finite atom entry");
    }
    if (!ema.counts.empty()) {
        if (static_cast<int64_t>(ema.counts.size()) != K || ema.sums.size() != K * M) {
            throw std::invalid_argument("codebook: EMA state shape mismatch");
        }
    }
}

Codebook init_codebook(const std::vector<std::vector<double>>& seed_vectors, int64_t K,
                       uint64_t rng_seed) {
    if (K < 1) throw std::invalid_argument("init_codebook: K must be >= 1");
    if (static_cast<int64_t>(seed_vectors.size()) < K) {
        throw std::invalid_argument("init_codebook: need at least " + std::to_string(K) +
                                    " seed vectors, got " + std::to_string(seed_vectors.size()));
    }
    const int64_t M = static_cast<int64_t>(seed_vectors.front().size());
    for (const auto& v : seed_vectors) {
        if (static_cast<int64_t>(v.size()) != M) {
            throw std::invalid_argument("init_codebook: seed vectors must share one length");
        }
    }
    Rng rng(rng_seed);
    const auto picks = rng.sample_without_replacement(static_cast<int64_t>(seed_vectors.size()), K);
    Codebook cb;
    cb.atoms = Tensor({K, M});
    for (int64_t i = 0; i < K; ++i) {
        const auto& src = seed_vectors[static_cast<size_t>(picks[static_cast<size_t>(i)])];
        for (int64_t j = 0; j < M; ++j) cb.atoms[i * M + j] = src[static_cast<size_t>(j)];
    }
    cb.ema.counts.assign(static_cast<size_t>(K), 0.0);
    cb.ema.sums = Tensor({K, M});
    return cb;
}

std::vector<uint8_t> serialize_codebook(const Codebook& cb) {
    const int64_t K = cb.atom_count(), M = cb.dim();
    std::vector<uint8_t> out;
    out.reserve(32 + static_cast<size_t>(2 * K * M + K) * 8);
    detail::put_bytes(out, "OCTB", 4);
    detail::put_u16(out, 1);
    detail::put_u32(out, static_cast<uint32_t>(K));
    detail::put_u32(out, static_cast<uint32_t>(M));
    detail::put_u32(out, static_cast<uint32_t>(cb.group_count));
    detail::put_u32(out, static_cast<uint32_t>(cb.slice_count));
    detail::put_f64(out, cb.ema.decay);
    detail::put_f64_span(out, cb.atoms.data.data(), static_cast<size_t>(K * M));
    if (cb.ema.counts.empty()) {
        const std::vector<double> zeros(static_cast<size_t>(K), 0.0);
        detail::put_f64_span(out, zeros.data(), zeros.size());
        const std::vector<double> zsums(static_cast<size_t>(K * M), 0.0);
        detail::put_f64_span(out, zsums.data(), zsums.size());
    } else {
        detail::put_f64_span(out, cb.ema.counts.data(), static_cast<size_t>(K));
        detail::put_f64_span(out, cb.ema.sums.data.data(), static_cast<size_t>(K * M));
    }
    return out;
}

Codebook deserialize_codebook(const uint8_t* data, size_t len) {
    detail::Reader r(data, len);
    char magic[4];
    r.take(magic, 4, "codebook magic");
    if (std::string(magic, 4) != "OCTB") throw std::runtime_error("codebook: bad magic");
    const uint16_t version = r.u16("codebook version");
    if (version != 1) throw std::runtime_error("codebook: unsupported version " + std::to_string(version));
    const int64_t K = r.u32("K");
    const int64_t M = r.u32("M");
    Codebook cb;
    cb.group_count = r.u32("group count");
    cb.slice_count = r.u32("slice count");
    cb.ema.decay = r.f64("ema decay");
    cb.atoms = Tensor({K, M});
    r.f64_span(cb.atoms.data.data(), static_cast<size_t>(K * M), "atoms");
    cb.ema.counts.assign(static_cast<size_t>(K), 0.0);
    r.f64_span(cb.ema.counts.data(), static_cast<size_t>(K), "ema counts");
    cb.ema.sums = Tensor({K, M});
    r.f64_span(cb.ema.sums.data.data(), static_cast<size_t>(K * M), "ema sums");
    cb.validate();
    return cb;
}

void save_codebook(const Codebook& cb, const std::string& path) {
    const auto bytes = serialize_codebook(cb);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Codebook load_codebook(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_codebook(bytes.data(), bytes.size());
}

}  // namespace octo::vq
