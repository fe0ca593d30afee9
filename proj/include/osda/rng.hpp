#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace osda {

/// Seeded random source with explicitly implemented distributions, so that a
/// given seed reproduces the same draw sequence on every build. The standard
/// distribution classes are implementation-defined and are deliberately not
/// used here; only mt19937_64 itself (whose output is pinned by the standard)
/// sits underneath.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased uniform integer in [0, n). Rejection sampling, n > 0.
    std::size_t uniform_index(std::size_t n);

    /// Standard normal via Box-Muller; draws two uniforms every other call.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace osda
