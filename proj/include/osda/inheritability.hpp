#pragma once

#include <span>
#include <vector>

#include "osda/matrix.hpp"
#include "osda/network.hpp"

namespace osda {

/// Instance confidence w(x): softmax over the full concatenated head output,
/// then the maximum over the shared-class coordinates only. High for inputs
/// the model places inside the source distribution, low for inputs claimed by
/// the negative classes. One value per row of x, each strictly inside (0, 1).
std::vector<double> instance_weights(const InheritableModel& model, const Matrix& x);

/// Divides by the batch maximum, so the largest weight becomes exactly 1 and
/// the ordering of instances is unchanged.
std::vector<double> normalize_by_max(std::span<const double> weights);

/// A batch of instances with their raw and max-normalized weights.
struct WeightedInstances {
    std::vector<std::size_t> indices;
    std::vector<double> raw_w;
    std::vector<double> normalized_w;
};

WeightedInstances weigh_instances(const InheritableModel& model, const Matrix& all_features,
                                  std::span<const std::size_t> batch);

/// Mean target confidence divided by the vendor-side mean stored in the model
/// file; no source data is needed at call time. Ratios near (or above) 1 mean
/// the target sits close to the source distribution.
double model_inheritability(const InheritableModel& model, const Matrix& target_features);

/// Mean w over source, target-shared and target-unknown sets. A healthy
/// trained model orders these decreasingly.
struct OrderingDiagnostic {
    double mean_source = 0.0;
    double mean_target_shared = 0.0;
    double mean_target_unknown = 0.0;
};

OrderingDiagnostic ordering_diagnostic(const InheritableModel& model, const Matrix& source,
                                       const Matrix& target_shared, const Matrix& target_unknown);

}  // namespace osda
