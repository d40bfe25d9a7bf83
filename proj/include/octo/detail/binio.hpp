#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

// Little-endian binary writers/readers used by the codebook and model
// containers.

namespace octo::detail {

inline void put_bytes(std::vector<uint8_t>& out, const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    out.insert(out.end(), b, b + n);
}

inline void put_u16(std::vector<uint8_t>& out, uint16_t v) { put_bytes(out, &v, 2); }
inline void put_u32(std::vector<uint8_t>& out, uint32_t v) { put_bytes(out, &v, 4); }
inline void put_u64(std::vector<uint8_t>& out, uint64_t v) { put_bytes(out, &v, 8); }
inline void put_i64(std::vector<uint8_t>& out, int64_t v) { put_bytes(out, &v, 8); }
inline void put_f64(std::vector<uint8_t>& out, double v) { put_bytes(out, &v, 8); }

inline void put_f64_span(std::vector<uint8_t>& out, const double* p, size_t n) {
    put_bytes(out, p, n * sizeof(double));
}

struct Reader {
    const uint8_t* p;
    size_t len;
    size_t at = 0;

    Reader(const uint8_t* data, size_t n) : p(data), len(n) {}

    void need(size_t n, const char* what) const {
        if (at + n > len) {
            throw std::runtime_error(std::string("truncated input reading ") + what + " at byte offset " +
                                     std::to_string(at));
        }
    }
    void take(void* dst, size_t n, const char* what) {
        need(n, what);
        std::memcpy(dst, p + at, n);
        at += n;
    }
    uint16_t u16(const char* what) { uint16_t v; take(&v, 2, what); return v; }
    uint32_t u32(const char* what) { uint32_t v; take(&v, 4, what); return v; }
    uint64_t u64(const char* what) { uint64_t v; take(&v, 8, what); return v; }
    int64_t i64(const char* what) { int64_t v; take(&v, 8, what); return v; }
    double f64(const char* what) { double v; take(&v, 8, what); return v; }
    void f64_span(double* dst, size_t n, const char* what) { take(dst, n * sizeof(double), what); }
};

static_assert(std::endian::native == std::endian::little, "serialized formats assume little-endian");

}  // namespace octo::detail
