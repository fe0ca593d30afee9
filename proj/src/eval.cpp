#include "osda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "osda/errors.hpp"
#include "osda/inheritability.hpp"
#include "osda/numeric.hpp"

namespace osda {

namespace {

double mean_ignoring_nan(std::span<const double> values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        if (!std::isnan(v)) {
            sum += v;
            ++n;
        }
    }
    if (n == 0) throw input_error("score: no class present in truth");
    return sum / static_cast<double>(n);
}

}  // namespace

EvalReport score(std::span<const int> predictions, std::span<const int> truth,
                 std::span<const int> shared_labels) {
    if (predictions.size() != truth.size()) {
        throw input_error("score: predictions and truth differ in length");
    }
    if (predictions.empty()) throw input_error("score: empty input");
    if (shared_labels.empty()) throw input_error("score: no shared classes");

    const std::size_t c = shared_labels.size();
    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < c; ++i) index[shared_labels[i]] = i;
    const auto to_index = [&](int label) {
        const auto it = index.find(label);
        return it == index.end() ? c : it->second;  // everything else is unknown
    };

    EvalReport report;
    report.shared_labels.assign(shared_labels.begin(), shared_labels.end());
    report.confusion = Matrix(c + 1, c + 1);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        report.confusion(to_index(truth[i]), to_index(predictions[i])) += 1.0;
    }

    report.per_class_acc.assign(c + 1, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k <= c; ++k) {
        double total = 0.0;
        for (std::size_t j = 0; j <= c; ++j) total += report.confusion(k, j);
        if (total > 0.0) report.per_class_acc[k] = report.confusion(k, k) / total;
    }
    report.os = mean_ignoring_nan(report.per_class_acc);
    report.os_star = mean_ignoring_nan(std::span(report.per_class_acc).first(c));
    return report;
}

double openness(std::size_t num_shared, std::size_t num_total) {
    if (num_shared == 0 || num_total < num_shared) {
        throw input_error("openness: need 0 < shared <= total");
    }
    return 1.0 - static_cast<double>(num_shared) / static_cast<double>(num_total);
}

std::vector<PrecisionPoint> precision_at_percentile(const InheritableModel& model,
                                                    const Matrix& target_features,
                                                    std::span<const int> truth,
                                                    std::span<const double> percentiles) {
    if (truth.size() != target_features.rows()) {
        throw input_error("precision_at_percentile: one truth label per row required");
    }
    const std::vector<double> conf = instance_weights(model, target_features);

    const ForwardTaps taps = forward(model, target_features);
    std::vector<int> predicted(target_features.rows());
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const auto row = taps.logits_s.row(i);
        const auto arg = static_cast<std::size_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
        predicted[i] = model.shared_labels[arg];
    }

    std::vector<PrecisionPoint> curve;
    curve.reserve(percentiles.size());
    for (double p : percentiles) {
        const auto top = top_fraction_indices(conf, p);
        if (top.empty()) {
            curve.push_back({p, std::numeric_limits<double>::quiet_NaN()});
            continue;
        }
        std::size_t hits = 0;
        for (std::size_t idx : top) {
            if (predicted[idx] == truth[idx]) ++hits;
        }
        curve.push_back({p, static_cast<double>(hits) / static_cast<double>(top.size())});
    }
    return curve;
}

double proxy_a_distance(const Matrix& features_a, const Matrix& features_b, Rng& rng) {
    if (features_a.rows() < 5 || features_b.rows() < 5) {
        throw input_error("proxy_a_distance: each set needs at least 5 rows");
    }
    if (features_a.cols() != features_b.cols()) {
        throw input_error("proxy_a_distance: feature width mismatch");
    }
    const std::size_t dims = features_a.cols();

    // 80/20 split inside each domain, so both domains appear on both sides.
    struct Split {
        std::vector<std::size_t> train, test;
    };
    const auto split_set = [&rng](std::size_t n) {
        Split s;
        const auto perm = rng.permutation(n);
        const std::size_t n_train = (n * 8 + 9) / 10;  // ceil(0.8 n)
        s.train.assign(perm.begin(), perm.begin() + n_train);
        s.test.assign(perm.begin() + n_train, perm.end());
        return s;
    };
    const Split sa = split_set(features_a.rows());
    const Split sb = split_set(features_b.rows());

    // Column standardization fitted on the training rows.
    std::vector<double> mu(dims, 0.0), sd(dims, 0.0);
    const std::size_t n_train = sa.train.size() + sb.train.size();
    const auto accumulate = [&](const Matrix& f, const std::vector<std::size_t>& rows) {
        for (std::size_t r : rows) {
            const auto row = f.row(r);
            for (std::size_t j = 0; j < dims; ++j) mu[j] += row[j];
        }
    };
    accumulate(features_a, sa.train);
    accumulate(features_b, sb.train);
    for (double& v : mu) v /= static_cast<double>(n_train);
    const auto accumulate_var = [&](const Matrix& f, const std::vector<std::size_t>& rows) {
        for (std::size_t r : rows) {
            const auto row = f.row(r);
            for (std::size_t j = 0; j < dims; ++j) {
                const double d = row[j] - mu[j];
                sd[j] += d * d;
            }
        }
    };
    accumulate_var(features_a, sa.train);
    accumulate_var(features_b, sb.train);
    for (double& v : sd) v = std::max(std::sqrt(v / static_cast<double>(n_train)), 1e-8);

    // Single linear layer + sigmoid, full-batch gradient descent.
    std::vector<double> weights(dims, 0.0);
    double bias = 0.0;
    const auto margin = [&](const Matrix& f, std::size_t r) {
        const auto row = f.row(r);
        double z = bias;
        for (std::size_t j = 0; j < dims; ++j) z += weights[j] * (row[j] - mu[j]) / sd[j];
        return z;
    };

    constexpr int kEpochs = 200;
    constexpr double kLr = 0.5;
    std::vector<double> gw(dims, 0.0);
    for (int epoch = 0; epoch < kEpochs; ++epoch) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        const auto accumulate_grad = [&](const Matrix& f, const std::vector<std::size_t>& rows,
                                         double label) {
            for (std::size_t r : rows) {
                const double p = 1.0 / (1.0 + std::exp(-margin(f, r)));
                const double err = p - label;
                const auto row = f.row(r);
                for (std::size_t j = 0; j < dims; ++j) gw[j] += err * (row[j] - mu[j]) / sd[j];
                gb += err;
            }
        };
        accumulate_grad(features_a, sa.train, 0.0);
        accumulate_grad(features_b, sb.train, 1.0);
        const double inv = 1.0 / static_cast<double>(n_train);
        for (std::size_t j = 0; j < dims; ++j) weights[j] -= kLr * gw[j] * inv;
        bias -= kLr * gb * inv;
    }

    std::size_t errors = 0;
    for (std::size_t r : sa.test) {
        if (margin(features_a, r) >= 0.0) ++errors;
    }
    for (std::size_t r : sb.test) {
        if (margin(features_b, r) < 0.0) ++errors;
    }
    const double err_rate =
        static_cast<double>(errors) / static_cast<double>(sa.test.size() + sb.test.size());
    return std::clamp(2.0 * (1.0 - 2.0 * err_rate), 0.0, 2.0);
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << "OS  (|C_s|+1 classes): " << os << "\n";
    out << "OS* (shared classes) : " << os_star << "\n";
    if (openness) out << "openness             : " << *openness << "\n";
    if (pad_shared) out << "PAD vs target-shared : " << *pad_shared << "\n";
    if (pad_unknown) out << "PAD vs target-unknown: " << *pad_unknown << "\n";
    out << "per-class recall:\n";
    for (std::size_t i = 0; i < per_class_acc.size(); ++i) {
        out << "  ";
        if (i < shared_labels.size()) {
            out << "class " << shared_labels[i];
        } else {
            out << "unknown";
        }
        out << ": ";
        if (std::isnan(per_class_acc[i])) {
            out << "absent";
        } else {
            out << per_class_acc[i];
        }
        out << "\n";
    }
    return out.str();
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["os"] = os;
    j["os_star"] = os_star;
    j["shared_labels"] = shared_labels;
    auto& acc = j["per_class_acc"] = nlohmann::json::array();
    for (double v : per_class_acc) {
        if (std::isnan(v)) {
            acc.push_back(nullptr);
        } else {
            acc.push_back(v);
        }
    }
    if (openness) j["openness"] = *openness;
    if (pad_shared) j["pad_shared"] = *pad_shared;
    if (pad_unknown) j["pad_unknown"] = *pad_unknown;
    auto& conf = j["confusion"] = nlohmann::json::array();
    for (std::size_t r = 0; r < confusion.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < confusion.cols(); ++c) {
            row.push_back(static_cast<std::uint64_t>(confusion(r, c)));
        }
        conf.push_back(row);
    }
    return j.dump(2);
}

}  // namespace osda
