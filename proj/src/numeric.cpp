#include "osda/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "osda/errors.hpp"

namespace osda {

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

Matrix softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto in = logits.row(i);
        auto o = out.row(i);
        double mx = in[0];
        for (double v : in) mx = std::max(mx, v);
        double sum = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        for (std::size_t j = 0; j < in.size(); ++j) o[j] /= sum;
    }
    return out;
}

double cross_entropy(const Matrix& probs, std::span<const int> labels) {
    if (probs.rows() != labels.size()) throw input_error("cross_entropy: one label per row required");
    if (probs.rows() == 0) throw input_error("cross_entropy: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= probs.cols()) {
            throw input_error("cross_entropy: label " + std::to_string(y) + " out of range at row " +
                              std::to_string(i));
        }
        total -= safe_log(probs(i, static_cast<std::size_t>(y)));
    }
    return total / static_cast<double>(probs.rows());
}

std::vector<double> shannon_entropy(const Matrix& probs) {
    std::vector<double> out(probs.rows(), 0.0);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        double h = 0.0;
        for (double p : probs.row(i)) {
            if (p > 0.0) h -= p * safe_log(p);
        }
        out[i] = h;
    }
    return out;
}

std::size_t top_fraction_count(std::size_t n, double d_percent) {
    if (d_percent < 0.0 || d_percent > 100.0) {
        throw input_error("top_fraction_count: percent must lie in [0, 100]");
    }
    const auto m = static_cast<std::size_t>(std::ceil(d_percent * static_cast<double>(n) / 100.0));
    return std::min(m, n);
}

std::vector<std::size_t> top_fraction_indices(std::span<const double> values, double d_percent) {
    const std::size_t m = top_fraction_count(values.size(), d_percent);
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Stable sort keeps equal values in index order, which is the tie-break.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    order.resize(m);
    return order;
}

double percentile_threshold(std::span<const double> values, double d_percent) {
    if (values.empty()) throw input_error("percentile_threshold: empty input");
    if (d_percent <= 0.0 || d_percent >= 100.0) {
        throw input_error("percentile_threshold: percent must lie in (0, 100)");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t m = top_fraction_count(values.size(), d_percent);
    return sorted[m - 1];
}

double mean(std::span<const double> values) {
    if (values.empty()) throw input_error("mean: empty input");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

}  // namespace osda
