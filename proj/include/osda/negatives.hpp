#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "osda/dataset.hpp"
#include "osda/network.hpp"
#include "osda/rng.hpp"

namespace osda {

/// Out-of-distribution training set: spliced features living at the M/E
/// boundary, labeled with their cluster id in [0, K).
struct NegativeSet {
    Matrix u_n;
    std::vector<int> y_n;
    std::size_t k = 0;
    double d_percent = 0.0;

    std::size_t size() const { return u_n.rows(); }
};

/// Replaces the top-d-percent activations of `u_i` (largest values, ties to
/// the lower index) with the donor's values at the same coordinates. The
/// result suppresses the strongest class-specific traits of `u_i` while
/// staying near the source feature distribution.
std::vector<double> feature_splice(std::span<const double> u_i, std::span<const double> u_j,
                                   double d_percent);

/// Draws `num_samples` pairs of source instances from distinct classes, maps
/// both through M, splices them, then clusters the spliced features into `k`
/// negative classes. Requires at least two source classes and
/// num_samples >= k.
NegativeSet generate_negatives(const InheritableModel& model, const LabeledSet& source,
                               std::size_t num_samples, double d_percent, std::size_t k, Rng& rng);

}  // namespace osda
