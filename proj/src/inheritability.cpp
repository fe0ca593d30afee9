#include "osda/inheritability.hpp"

#include <algorithm>

#include "osda/errors.hpp"
#include "osda/numeric.hpp"

namespace osda {

std::vector<double> instance_weights(const InheritableModel& model, const Matrix& x) {
    const ForwardTaps taps = forward(model, x);
    const Matrix probs = softmax(concat_logits(taps.logits_s, taps.logits_n));
    std::vector<double> w(x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = probs.row(i);
        w[i] = *std::max_element(row.begin(), row.begin() + model.spec.num_shared);
    }
    return w;
}

std::vector<double> normalize_by_max(std::span<const double> weights) {
    if (weights.empty()) throw input_error("normalize_by_max: empty batch");
    const double mx = *std::max_element(weights.begin(), weights.end());
    if (!(mx > 0.0)) throw input_error("normalize_by_max: weights must be positive");
    std::vector<double> out(weights.begin(), weights.end());
    for (double& v : out) v /= mx;
    return out;
}

WeightedInstances weigh_instances(const InheritableModel& model, const Matrix& all_features,
                                  std::span<const std::size_t> batch) {
    WeightedInstances out;
    out.indices.assign(batch.begin(), batch.end());
    out.raw_w = instance_weights(model, take_rows(all_features, batch));
    out.normalized_w = normalize_by_max(out.raw_w);
    return out;
}

double model_inheritability(const InheritableModel& model, const Matrix& target_features) {
    if (target_features.rows() == 0) throw input_error("model_inheritability: empty target");
    if (!(model.source_mean_w > 0.0)) {
        throw input_error("model_inheritability: model carries no positive source_mean_w");
    }
    return mean(instance_weights(model, target_features)) / model.source_mean_w;
}

OrderingDiagnostic ordering_diagnostic(const InheritableModel& model, const Matrix& source,
                                       const Matrix& target_shared, const Matrix& target_unknown) {
    if (source.rows() == 0 || target_shared.rows() == 0 || target_unknown.rows() == 0) {
        throw input_error("ordering_diagnostic: all three sets must be nonempty");
    }
    OrderingDiagnostic d;
    d.mean_source = mean(instance_weights(model, source));
    d.mean_target_shared = mean(instance_weights(model, target_shared));
    d.mean_target_unknown = mean(instance_weights(model, target_unknown));
    return d;
}

}  // namespace osda
