#pragma once

#include <cstddef>
#include <vector>

#include "osda/matrix.hpp"
#include "osda/rng.hpp"

namespace osda {

struct KMeansResult {
    std::vector<int> assignments;          // one entry per point, in [0, k)
    Matrix centroids;                      // k x dims
    std::vector<double> objective_history; // sum of squared distances, per iteration
};

/// Lloyd iterations from a k-means++ initialization. Terminates when the
/// assignments stabilize or after max_iter passes. Empty clusters are repaired
/// by handing them the point currently farthest from its own centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, Rng& rng, std::size_t max_iter = 100);

}  // namespace osda
