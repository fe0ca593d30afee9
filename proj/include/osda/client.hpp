#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "osda/dataset.hpp"
#include "osda/network.hpp"

namespace osda {

struct AdaptConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double weight_decay = 0.0;
    double k_percent = 15.0;  // share of target instances that receive pseudo-labels
    std::uint64_t seed = 1;

    void validate() const;
};

/// Target rows selected for pseudo-labeling, ranked by confidence. Labels are
/// shared-class indices in [0, num_shared), not original class ids.
struct PseudoLabelSet {
    std::vector<std::size_t> indices;
    std::vector<int> labels;
};

/// The client-side predictor: an adapted feature extractor in front of the
/// vendor's untouched classifier heads.
struct TargetModel {
    InheritableModel net;
};

/// Ranks the target by instance confidence under the frozen source model,
/// keeps the top ceil(k% * n) rows (ties toward the lower index) and labels
/// each with the source model's best shared class.
PseudoLabelSet pseudo_label(const InheritableModel& source_model, const Matrix& target_features,
                            double k_percent);

struct AdaptEvent {
    std::size_t epoch;  // 1-based
    double l_inh;
    double l_t1;
    double l_t2;
    const InheritableModel& current;
};
using AdaptCallback = std::function<void(const AdaptEvent&)>;

/// Source-free adaptation. Only the feature extractor {M, E} of the returned
/// model differs from `source_model`; the heads are carried over bit for bit.
/// Instance weights and pseudo-labels come from the frozen source model and
/// are computed once, before the first step.
TargetModel adapt(const InheritableModel& source_model, const Matrix& target_features,
                  const AdaptConfig& cfg, const AdaptCallback& callback = {});

/// Open-set inference: argmax over the concatenated softmax; any negative
/// class wins means "unknown" (kUnknownLabel), otherwise the original id of
/// the winning shared class. Ties resolve toward the lower index.
std::vector<int> infer(const InheritableModel& model, const Matrix& x);
std::vector<int> infer(const TargetModel& model, const Matrix& x);

struct AdaptTerms {
    double l_inh = 0.0;
    double l_t1 = 0.0;
    double l_t2 = 0.0;

    double total() const { return l_inh + l_t1 + l_t2; }
};

/// One batch of the adaptation objective plus gradients w.r.t. the feature
/// extractor. `weights` are the (already normalized) instance weights;
/// `pseudo_labels` holds a shared-class index per row or -1 for rows without
/// one. The head parameters receive no gradient by construction. Term flags
/// let tests exercise each loss in isolation.
AdaptTerms adapt_terms_and_grads(const Stack& m_t, const Stack& e_t, const DenseLayer& g_s,
                                 const DenseLayer& g_n, const Matrix& x,
                                 std::span<const double> weights,
                                 std::span<const int> pseudo_labels, bool with_inh, bool with_t1,
                                 bool with_t2, StackGrads* gm, StackGrads* ge);

/// The binary shared-vs-unknown term for one instance: -w log(s) -
/// (1-w) log(1-s), with s clamped away from 0 and 1. Minimized at s = w.
double tune_binary_loss(double s_hat, double w);

}  // namespace osda
