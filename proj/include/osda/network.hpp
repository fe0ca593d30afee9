#pragma once

#include <cstdint>
#include <cstddef>
#include <span>
#include <vector>

#include "osda/layers.hpp"
#include "osda/matrix.hpp"
#include "osda/rng.hpp"

namespace osda {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Architecture of the open-set network: a backbone stack M, an embedder
/// stack E on top of it, and two linear heads — G_s over the shared classes
/// and G_n over the negative (out-of-distribution) classes. Classification
/// uses one softmax over the concatenated head outputs.
struct NetworkSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> m_dims{64};
    std::vector<std::size_t> e_dims{32};
    std::size_t num_shared = 0;
    std::size_t num_negative = 0;

    std::size_t splice_dim() const { return m_dims.back(); }   // width of u, the M/E boundary
    std::size_t feature_dim() const { return e_dims.back(); }  // width of f, the pre-classifier space
    std::size_t num_outputs() const { return num_shared + num_negative; }

    void validate() const;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// The portable artifact a vendor ships: network parameters, the original ids
/// of the shared classes, and the vendor-side mean instance confidence that
/// the inheritability ratio is measured against.
struct InheritableModel {
    NetworkSpec spec;
    Stack m;
    Stack e;
    DenseLayer g_s;
    DenseLayer g_n;
    std::vector<int> shared_labels;
    double source_mean_w = 1.0;
    std::uint32_t format_version = kModelFormatVersion;

    void validate() const;

    friend bool operator==(const InheritableModel&, const InheritableModel&) = default;
};

/// Intermediate activations of one forward pass. `u` is the splice space
/// (output of M), `f` the pre-classifier space (output of E).
struct ForwardTaps {
    Matrix u;
    Matrix f;
    Matrix logits_s;
    Matrix logits_n;
};

/// Fresh model with He-uniform weights and zero biases, drawn from `rng` in a
/// fixed order (M, E, G_s, G_n).
InheritableModel init_model(const NetworkSpec& spec, Rng& rng);

ForwardTaps forward(const InheritableModel& model, const Matrix& x);

/// Forward starting at the M/E boundary; spliced negatives enter here.
/// forward_from_u(model, forward(model, x).u) reproduces the downstream taps
/// of forward(model, x) exactly.
ForwardTaps forward_from_u(const InheritableModel& model, const Matrix& u);

/// Batch x (num_shared + num_negative) logits, shared columns first.
Matrix concat_logits(const Matrix& logits_s, const Matrix& logits_n);

}  // namespace osda
