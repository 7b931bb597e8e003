#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace hypersynth {

/// Fixed-universe bitset sized at construction.
struct Bits {
    std::vector<uint64_t> w;

    Bits() = default;
    explicit Bits(size_t universe) : w((universe + 63) / 64, 0) {}

    void set(size_t i) { w[i >> 6] |= uint64_t{1} << (i & 63); }
    void reset(size_t i) { w[i >> 6] &= ~(uint64_t{1} << (i & 63)); }
    bool test(size_t i) const { return (w[i >> 6] >> (i & 63)) & 1; }

    bool any() const {
        for (uint64_t x : w)
            if (x) return true;
        return false;
    }
    size_t count() const {
        size_t c = 0;
        for (uint64_t x : w) c += static_cast<size_t>(__builtin_popcountll(x));
        return c;
    }
    bool intersects(const Bits& o) const {
        for (size_t i = 0; i < w.size(); ++i)
            if (w[i] & o.w[i]) return true;
        return false;
    }
    bool subset_of(const Bits& o) const {
        for (size_t i = 0; i < w.size(); ++i)
            if (w[i] & ~o.w[i]) return false;
        return true;
    }
    Bits& operator|=(const Bits& o) {
        for (size_t i = 0; i < w.size(); ++i) w[i] |= o.w[i];
        return *this;
    }
    Bits& operator&=(const Bits& o) {
        for (size_t i = 0; i < w.size(); ++i) w[i] &= o.w[i];
        return *this;
    }
    void and_not(const Bits& o) {
        for (size_t i = 0; i < w.size(); ++i) w[i] &= ~o.w[i];
    }
    bool operator==(const Bits&) const = default;

    template <typename Fn>
    void for_each(Fn fn) const {
        for (size_t wi = 0; wi < w.size(); ++wi) {
            uint64_t x = w[wi];
            while (x) {
                unsigned b = static_cast<unsigned>(__builtin_ctzll(x));
                fn(wi * 64 + b);
                x &= x - 1;
            }
        }
    }
};

}  // namespace hypersynth
