#include "osda/negatives.hpp"

#include <algorithm>
#include <string>

#include "osda/errors.hpp"
#include "osda/kmeans.hpp"
#include "osda/numeric.hpp"

namespace osda {

std::vector<double> feature_splice(std::span<const double> u_i, std::span<const double> u_j,
                                   double d_percent) {
    if (u_i.size() != u_j.size()) {
        throw input_error("feature_splice: length mismatch (" + std::to_string(u_i.size()) + " vs " +
                          std::to_string(u_j.size()) + ")");
    }
    std::vector<double> out(u_i.begin(), u_i.end());
    for (std::size_t idx : top_fraction_indices(u_i, d_percent)) out[idx] = u_j[idx];
    return out;
}

NegativeSet generate_negatives(const InheritableModel& model, const LabeledSet& source,
                               std::size_t num_samples, double d_percent, std::size_t k, Rng& rng) {
    if (source.labels.size() != source.size()) {
        throw input_error("generate_negatives: one label per source row required");
    }
    const std::vector<int> classes = distinct_labels(source.labels);
    if (classes.size() < 2) {
        throw input_error("generate_negatives: source must contain at least two classes");
    }
    if (num_samples < k) {
        throw input_error("generate_negatives: num_samples must be >= k (" +
                          std::to_string(num_samples) + " < " + std::to_string(k) + ")");
    }

    // One batched pass through M; splicing then works on rows of u.
    const Matrix u_all = stack_forward(model.m, source.features);
    const std::size_t n = source.size();

    NegativeSet set;
    set.k = k;
    set.d_percent = d_percent;
    set.u_n = Matrix(num_samples, u_all.cols());
    for (std::size_t s = 0; s < num_samples; ++s) {
        const std::size_t i = rng.uniform_index(n);
        std::size_t j = rng.uniform_index(n);
        while (source.labels[j] == source.labels[i]) j = rng.uniform_index(n);
        const auto spliced = feature_splice(u_all.row(i), u_all.row(j), d_percent);
        std::copy(spliced.begin(), spliced.end(), set.u_n.row(s).begin());
    }

    set.y_n = kmeans(set.u_n, k, rng).assignments;
    return set;
}

}  // namespace osda
