#include "osda/network.hpp"

#include <set>
#include <string>

#include "osda/errors.hpp"

namespace osda {

void NetworkSpec::validate() const {
    if (input_dim < 1) throw input_error("NetworkSpec: input_dim must be >= 1");
    if (m_dims.empty() || e_dims.empty()) throw input_error("NetworkSpec: empty layer list");
    for (std::size_t d : m_dims)
        if (d < 1) throw input_error("NetworkSpec: zero width in m_dims");
    for (std::size_t d : e_dims)
        if (d < 1) throw input_error("NetworkSpec: zero width in e_dims");
    if (num_shared < 2) throw input_error("NetworkSpec: num_shared must be >= 2");
    if (num_negative < 1) throw input_error("NetworkSpec: num_negative must be >= 1");
}

void InheritableModel::validate() const {
    spec.validate();
    auto check_stack = [](const Stack& s, std::size_t in, std::span<const std::size_t> widths,
                          const char* name) {
        if (s.layers.size() != widths.size())
            throw input_error(std::string("InheritableModel: wrong depth for ") + name);
        std::size_t prev = in;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            const DenseLayer& l = s.layers[i];
            if (l.in_dim() != prev || l.out_dim() != widths[i] || l.b.rows() != 1 ||
                l.b.cols() != widths[i]) {
                throw input_error(std::string("InheritableModel: bad layer shape in ") + name);
            }
            prev = widths[i];
        }
    };
    check_stack(m, spec.input_dim, spec.m_dims, "M");
    check_stack(e, spec.splice_dim(), spec.e_dims, "E");
    if (g_s.in_dim() != spec.feature_dim() || g_s.out_dim() != spec.num_shared)
        throw input_error("InheritableModel: bad G_s shape");
    if (g_n.in_dim() != spec.feature_dim() || g_n.out_dim() != spec.num_negative)
        throw input_error("InheritableModel: bad G_n shape");
    if (shared_labels.size() != spec.num_shared)
        throw input_error("InheritableModel: shared_labels size mismatch");
    if (std::set<int>(shared_labels.begin(), shared_labels.end()).size() != shared_labels.size())
        throw input_error("InheritableModel: shared_labels must be distinct");
    if (!(source_mean_w > 0.0) || source_mean_w > 1.0)
        throw input_error("InheritableModel: source_mean_w must lie in (0, 1]");
}

InheritableModel init_model(const NetworkSpec& spec, Rng& rng) {
    spec.validate();
    InheritableModel model;
    model.spec = spec;
    model.m = make_stack(spec.input_dim, spec.m_dims, rng);
    model.e = make_stack(spec.splice_dim(), spec.e_dims, rng);
    model.g_s = make_dense(spec.feature_dim(), spec.num_shared, rng);
    model.g_n = make_dense(spec.feature_dim(), spec.num_negative, rng);
    model.shared_labels.resize(spec.num_shared);
    for (std::size_t i = 0; i < spec.num_shared; ++i) model.shared_labels[i] = static_cast<int>(i);
    return model;
}

ForwardTaps forward(const InheritableModel& model, const Matrix& x) {
    if (x.cols() != model.spec.input_dim) {
        throw input_error("forward: input has " + std::to_string(x.cols()) + " columns, model expects " +
                          std::to_string(model.spec.input_dim));
    }
    ForwardTaps taps;
    taps.u = stack_forward(model.m, x);
    taps.f = stack_forward(model.e, taps.u);
    taps.logits_s = dense_forward(model.g_s, taps.f);
    taps.logits_n = dense_forward(model.g_n, taps.f);
    return taps;
}

ForwardTaps forward_from_u(const InheritableModel& model, const Matrix& u) {
    if (u.cols() != model.spec.splice_dim()) {
        throw input_error("forward_from_u: input has " + std::to_string(u.cols()) +
                          " columns, splice space has " + std::to_string(model.spec.splice_dim()));
    }
    ForwardTaps taps;
    taps.u = u;
    taps.f = stack_forward(model.e, u);
    taps.logits_s = dense_forward(model.g_s, taps.f);
    taps.logits_n = dense_forward(model.g_n, taps.f);
    return taps;
}

Matrix concat_logits(const Matrix& logits_s, const Matrix& logits_n) {
    if (logits_s.rows() != logits_n.rows()) throw input_error("concat_logits: row count mismatch");
    Matrix out(logits_s.rows(), logits_s.cols() + logits_n.cols());
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto orow = out.row(i);
        const auto s = logits_s.row(i);
        const auto n = logits_n.row(i);
        std::copy(s.begin(), s.end(), orow.begin());
        std::copy(n.begin(), n.end(), orow.begin() + logits_s.cols());
    }
    return out;
}

}  // namespace osda
