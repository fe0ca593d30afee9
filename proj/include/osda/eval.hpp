#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osda/dataset.hpp"
#include "osda/matrix.hpp"
#include "osda/network.hpp"
#include "osda/rng.hpp"

namespace osda {

/// Open-set scoring summary. per_class_acc holds one recall per shared class
/// plus one final entry for the collapsed unknown class; classes absent from
/// the truth are NaN and excluded from the OS / OS* means.
struct EvalReport {
    double os = 0.0;
    double os_star = 0.0;
    std::vector<double> per_class_acc;
    std::vector<int> shared_labels;
    Matrix confusion;  // (C+1) x (C+1) counts, rows = truth, last = unknown
    std::optional<double> openness;
    std::optional<double> pad_shared;
    std::optional<double> pad_unknown;

    std::string to_text() const;
    std::string to_json() const;
};

/// Class-wise recalls from predictions vs truth. Any label outside
/// `shared_labels` (including kUnknownLabel) counts as the unknown class, on
/// both sides.
EvalReport score(std::span<const int> predictions, std::span<const int> truth,
                 std::span<const int> shared_labels);

double openness(std::size_t num_shared, std::size_t num_total);

struct PrecisionPoint {
    double percentile;
    double precision;
};

/// Precision of the model's shared-class predictions among the most confident
/// target instances: for each percentile p, rank by instance confidence, take
/// the top ceil(p% * n) rows and count how many have their true label
/// predicted. Rows whose truth is not a shared class can never count as hits.
std::vector<PrecisionPoint> precision_at_percentile(const InheritableModel& model,
                                                    const Matrix& target_features,
                                                    std::span<const int> truth,
                                                    std::span<const double> percentiles);

/// Proxy A-distance between two feature sets: 2 * (1 - 2 * err) for the
/// held-out error of a logistic discriminator trained on an 80/20 split,
/// clamped to [0, 2]. Both sets need at least 5 rows.
double proxy_a_distance(const Matrix& features_a, const Matrix& features_b, Rng& rng);

}  // namespace osda
