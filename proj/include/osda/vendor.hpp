#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "osda/dataset.hpp"
#include "osda/negatives.hpp"
#include "osda/network.hpp"

namespace osda {

struct VendorConfig {
    std::size_t pretrain_epochs = 30;
    std::size_t finetune_epochs = 30;
    /// Phase-1 batches are all source rows; phase-2 batches split this evenly
    /// between source rows and spliced negatives.
    std::size_t batch_size = 64;
    double learning_rate = 0.01;
    double momentum = 0.9;
    /// L2 penalty in the optimizer; keeps the heads from saturating on easily
    /// separable data, so instance confidence stays informative off-source.
    double weight_decay = 1e-3;
    double d_percent = 15.0;
    std::size_t negative_classes = 0;  // 0 = 4 * |C_s|
    std::size_t negative_samples = 0;  // 0 = one per source row
    std::uint64_t seed = 1;

    std::size_t resolve_negative_classes(std::size_t num_shared) const {
        return negative_classes ? negative_classes : 4 * num_shared;
    }

    void validate() const;
};

struct TrainEvent {
    enum class Phase { pretrain, inheritable };
    Phase phase;
    std::size_t epoch;       // 1-based
    double loss;             // mean step loss over the epoch
    double source_accuracy;  // full source pass at epoch end
    double mean_source_w;    // phase 2 only; NaN during pretraining
};
using TrainCallback = std::function<void(const TrainEvent&)>;

/// Feature-extractor architecture, fixed before the negative-class count is
/// known.
struct FeatureArch {
    std::size_t input_dim = 0;
    std::vector<std::size_t> m_dims{64};
    std::vector<std::size_t> e_dims{32};
};

/// Output of phase 1: backbone, embedder and shared head, no negative head
/// yet.
struct PretrainedModel {
    FeatureArch arch;
    std::size_t num_shared = 0;
    Stack m;
    Stack e;
    DenseLayer g_s;
};

/// Phase 1: minimize the shared-class cross-entropy over the source set with
/// class-balanced mini-batches. Labels must be canonical, i.e. exactly
/// [0, C) for some C >= 2.
PretrainedModel pretrain(const FeatureArch& arch, const LabeledSet& source,
                         const VendorConfig& cfg, const TrainCallback& callback = {});

/// Phase 2: freeze M, splice negatives at the M/E boundary, then train
/// {E, G_s, G_n} on balanced source/negative batches under the concatenated
/// softmax. Records the mean source confidence into the finished model.
InheritableModel train_inheritable(const PretrainedModel& pretrained, const LabeledSet& source,
                                   const VendorConfig& cfg, const TrainCallback& callback = {});

/// Both phases plus label canonicalization; `source` may use arbitrary
/// nonnegative class ids, which end up in the model's shared_labels.
InheritableModel train_vendor(const FeatureArch& arch, const LabeledSet& source,
                              const VendorConfig& cfg, const TrainCallback& callback = {});

/// Phase-1 loss: CE(softmax(G_s(E(M(x)))), y), mean over the batch. Gradients
/// are accumulated into the provided structs; any of them may be omitted.
double pretrain_loss_and_grads(const Stack& m, const Stack& e, const DenseLayer& g_s,
                               const Matrix& x, std::span<const int> y, StackGrads* gm,
                               StackGrads* ge, DenseGrads* ggs);

/// Phase-2 loss: concatenated-softmax CE on source rows plus the same on
/// negative rows entering at the M/E boundary (labels offset past the shared
/// classes). M is frozen by construction: no gradient for it exists.
double inheritable_loss_and_grads(const Stack& m, const Stack& e, const DenseLayer& g_s,
                                  const DenseLayer& g_n, const Matrix& x_s,
                                  std::span<const int> y_s, const Matrix& u_n,
                                  std::span<const int> y_n, StackGrads* ge, DenseGrads* ggs,
                                  DenseGrads* ggn);

}  // namespace osda
