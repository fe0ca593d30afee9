#include "osda/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "osda/errors.hpp"

namespace osda {

std::size_t Rng::uniform_index(std::size_t n) {
    if (n == 0) throw input_error("Rng::uniform_index: n must be positive");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t reject_below = (0 - bound) % bound;  // 2^64 mod n
    std::uint64_t r = next_u64();
    while (r < reject_below) r = next_u64();
    return static_cast<std::size_t>(r % bound);
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_normal_ = true;
    return radius * std::cos(angle);
}

}  // namespace osda
