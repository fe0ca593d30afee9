#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "osda/matrix.hpp"

namespace osda {

/// Probabilities are clamped here before any log, so losses on saturated
/// softmax outputs stay finite.
inline constexpr double kProbFloor = 1e-12;

double safe_log(double p);

/// Row-wise softmax with max-subtraction. Each output row is nonnegative and
/// sums to 1.
Matrix softmax(const Matrix& logits);

/// Mean over rows of -log(probs[row][label]). Labels must lie in [0, cols).
double cross_entropy(const Matrix& probs, std::span<const int> labels);

/// Per-row Shannon entropy -sum(p log p), with 0 log 0 = 0. Natural log.
std::vector<double> shannon_entropy(const Matrix& probs);

/// Number of entries in the "top d percent" of n values: ceil(d/100 * n).
std::size_t top_fraction_count(std::size_t n, double d_percent);

/// Indices of the m = ceil(d/100 * n) largest values, ties broken toward the
/// lower index. Accepts d in [0, 100]; d = 0 selects nothing, d = 100 selects
/// everything.
std::vector<std::size_t> top_fraction_indices(std::span<const double> values, double d_percent);

/// Nearest-rank percentile threshold: the smallest value still inside the
/// top-d-percent selection (sort descending, take the value at rank
/// ceil(d/100 * n)). Requires a nonempty input and 0 < d < 100.
double percentile_threshold(std::span<const double> values, double d_percent);

double mean(std::span<const double> values);

}  // namespace osda
