#include "osda/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "osda/errors.hpp"

namespace osda {

namespace {

Matrix plus_plus_init(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centroids(k, points.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    std::size_t first = rng.uniform_index(n);
    std::copy(points.row(first).begin(), points.row(first).end(), centroids.row(0).begin());

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c - 1)));
            total += d2[i];
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.uniform_index(n);  // all remaining points coincide with chosen centroids
        } else {
            const double t = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > t) {
                    pick = i;
                    break;
                }
            }
        }
        std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
    }
    return centroids;
}

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> p) {
    std::size_t best = 0;
    double best_d = squared_distance(p, centroids.row(0));
    for (std::size_t c = 1; c < centroids.rows(); ++c) {
        const double d = squared_distance(p, centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

void recompute_means(const Matrix& points, const std::vector<int>& assignments, Matrix& centroids) {
    const std::size_t k = centroids.rows();
    std::vector<std::size_t> counts(k, 0);
    std::fill(centroids.data().begin(), centroids.data().end(), 0.0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const auto c = static_cast<std::size_t>(assignments[i]);
        ++counts[c];
        auto crow = centroids.row(c);
        const auto prow = points.row(i);
        for (std::size_t j = 0; j < points.cols(); ++j) crow[j] += prow[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;  // repaired by the caller before the next pass
        auto crow = centroids.row(c);
        for (std::size_t j = 0; j < points.cols(); ++j) crow[j] /= static_cast<double>(counts[c]);
    }
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, Rng& rng, std::size_t max_iter) {
    const std::size_t n = points.rows();
    if (k == 0) throw input_error("kmeans: k must be positive");
    if (n < k) {
        throw input_error("kmeans: need at least k points (" + std::to_string(n) + " < " +
                          std::to_string(k) + ")");
    }

    KMeansResult result;
    result.centroids = plus_plus_init(points, k, rng);
    result.assignments.assign(n, -1);

    std::vector<int> prev(n, -1);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            result.assignments[i] = static_cast<int>(nearest_centroid(result.centroids, points.row(i)));
        }

        // Repair empty clusters: steal the point farthest from its centroid.
        std::vector<std::size_t> counts(k, 0);
        for (int a : result.assignments) ++counts[static_cast<std::size_t>(a)];
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto home = static_cast<std::size_t>(result.assignments[i]);
                if (counts[home] <= 1) continue;
                const double d = squared_distance(points.row(i), result.centroids.row(home));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            --counts[static_cast<std::size_t>(result.assignments[far])];
            result.assignments[far] = static_cast<int>(c);
            ++counts[c];
            std::copy(points.row(far).begin(), points.row(far).end(), result.centroids.row(c).begin());
        }

        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            objective += squared_distance(
                points.row(i), result.centroids.row(static_cast<std::size_t>(result.assignments[i])));
        }
        result.objective_history.push_back(objective);

        if (result.assignments == prev) break;
        prev = result.assignments;
        recompute_means(points, result.assignments, result.centroids);
    }

    recompute_means(points, result.assignments, result.centroids);
    return result;
}

}  // namespace osda
