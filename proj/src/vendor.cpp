#include "osda/vendor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "osda/errors.hpp"
#include "osda/inheritability.hpp"
#include "osda/numeric.hpp"

namespace osda {

namespace {

constexpr std::uint64_t kPhase2SeedSalt = 0x9e3779b97f4a7c15ull;

void check_canonical_labels(const LabeledSet& source, std::size_t* num_classes) {
    if (source.size() == 0) throw input_error("vendor: empty source set");
    if (source.labels.size() != source.size()) {
        throw input_error("vendor: one label per source row required");
    }
    const auto classes = distinct_labels(source.labels);
    if (classes.size() < 2) throw input_error("vendor: source must contain at least two classes");
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] != static_cast<int>(i)) {
            throw input_error("vendor: labels must be canonical [0, C); found id " +
                              std::to_string(classes[i]));
        }
    }
    *num_classes = classes.size();
}

/// Class-balanced order over all rows: within-class shuffle, then round-robin
/// over a per-round shuffled class order. Every row appears exactly once.
std::vector<std::size_t> balanced_order(std::span<const int> labels, std::size_t num_classes,
                                        Rng& rng) {
    std::vector<std::vector<std::size_t>> per_class(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        per_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (auto& rows : per_class) rng.shuffle(rows);

    std::vector<std::size_t> cursor(num_classes, 0);
    std::vector<std::size_t> class_visit(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) class_visit[c] = c;

    std::vector<std::size_t> order;
    order.reserve(labels.size());
    while (order.size() < labels.size()) {
        rng.shuffle(class_visit);
        for (std::size_t c : class_visit) {
            if (cursor[c] < per_class[c].size()) order.push_back(per_class[c][cursor[c]++]);
        }
    }
    return order;
}

/// Without-replacement index stream that reshuffles each time it runs dry.
class IndexStream {
public:
    IndexStream(std::size_t n, Rng& rng) : order_(rng.permutation(n)) {}

    std::size_t next(Rng& rng) {
        if (pos_ == order_.size()) {
            rng.shuffle(order_);
            pos_ = 0;
        }
        return order_[pos_++];
    }

private:
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
};

Matrix one_hot_grad(const Matrix& probs, std::span<const int> labels, double inv_count) {
    Matrix d = probs;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        d(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    }
    scale_inplace(d, inv_count);
    return d;
}

double phase1_source_accuracy(const PretrainedModel& model, const LabeledSet& source) {
    const Matrix f = stack_forward(model.e, stack_forward(model.m, source.features));
    const Matrix logits = dense_forward(model.g_s, f);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        const std::size_t arg = static_cast<std::size_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
        if (arg == static_cast<std::size_t>(source.labels[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

double phase2_source_accuracy(const InheritableModel& model, const LabeledSet& source) {
    const ForwardTaps taps = forward(model, source.features);
    const Matrix logits = concat_logits(taps.logits_s, taps.logits_n);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        const std::size_t arg = static_cast<std::size_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
        if (arg == static_cast<std::size_t>(source.labels[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace

void VendorConfig::validate() const {
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw input_error("VendorConfig: batch_size must be even and >= 2");
    }
    if (learning_rate < 0.0) throw input_error("VendorConfig: learning_rate must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw input_error("VendorConfig: momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw input_error("VendorConfig: weight_decay must be >= 0");
    if (d_percent <= 0.0 || d_percent > 100.0) {
        throw input_error("VendorConfig: d_percent must lie in (0, 100]");
    }
}

double pretrain_loss_and_grads(const Stack& m, const Stack& e, const DenseLayer& g_s,
                               const Matrix& x, std::span<const int> y, StackGrads* gm,
                               StackGrads* ge, DenseGrads* ggs) {
    StackCache cm, ce;
    const Matrix u = stack_forward(m, x, gm ? &cm : nullptr);
    const Matrix f = stack_forward(e, u, (gm || ge) ? &ce : nullptr);
    const Matrix probs = softmax(dense_forward(g_s, f));
    const double loss = cross_entropy(probs, y);
    if (!gm && !ge && !ggs) return loss;

    Matrix d_logits = one_hot_grad(probs, y, 1.0 / static_cast<double>(x.rows()));
    DenseGrads scratch = zero_grads(g_s);
    Matrix d_f = dense_backward(g_s, f, d_logits, ggs ? *ggs : scratch);
    if (!gm && !ge) return loss;
    StackGrads e_scratch = zero_grads(e);
    Matrix d_u = stack_backward(e, ce, std::move(d_f), ge ? *ge : e_scratch);
    if (gm) stack_backward(m, cm, std::move(d_u), *gm);
    return loss;
}

double inheritable_loss_and_grads(const Stack& m, const Stack& e, const DenseLayer& g_s,
                                  const DenseLayer& g_n, const Matrix& x_s,
                                  std::span<const int> y_s, const Matrix& u_n,
                                  std::span<const int> y_n, StackGrads* ge, DenseGrads* ggs,
                                  DenseGrads* ggn) {
    const std::size_t num_shared = g_s.out_dim();
    const bool want_grads = ge || ggs || ggn;

    // Source rows enter at x; M is applied without a cache because it is
    // frozen in this phase. Negative rows enter at the M/E boundary.
    StackCache ce_s, ce_n;
    const Matrix u_s = stack_forward(m, x_s);
    const Matrix f_s = stack_forward(e, u_s, want_grads ? &ce_s : nullptr);
    const Matrix f_n = stack_forward(e, u_n, want_grads ? &ce_n : nullptr);

    const Matrix probs_s = softmax(concat_logits(dense_forward(g_s, f_s), dense_forward(g_n, f_s)));
    const Matrix probs_n = softmax(concat_logits(dense_forward(g_s, f_n), dense_forward(g_n, f_n)));

    std::vector<int> y_n_offset(y_n.begin(), y_n.end());
    for (int& l : y_n_offset) l += static_cast<int>(num_shared);

    const double loss = cross_entropy(probs_s, y_s) + cross_entropy(probs_n, y_n_offset);
    if (!want_grads) return loss;

    DenseGrads gs_scratch = zero_grads(g_s);
    DenseGrads gn_scratch = zero_grads(g_n);
    StackGrads e_scratch = zero_grads(e);
    DenseGrads& gs_out = ggs ? *ggs : gs_scratch;
    DenseGrads& gn_out = ggn ? *ggn : gn_scratch;
    StackGrads& e_out = ge ? *ge : e_scratch;

    const auto backprop_stream = [&](const Matrix& probs, std::span<const int> labels,
                                     const Matrix& f, const StackCache& ce) {
        Matrix d_concat = one_hot_grad(probs, labels, 1.0 / static_cast<double>(probs.rows()));
        Matrix d_ls(d_concat.rows(), num_shared);
        Matrix d_ln(d_concat.rows(), probs.cols() - num_shared);
        for (std::size_t i = 0; i < d_concat.rows(); ++i) {
            const auto src = d_concat.row(i);
            std::copy(src.begin(), src.begin() + num_shared, d_ls.row(i).begin());
            std::copy(src.begin() + num_shared, src.end(), d_ln.row(i).begin());
        }
        Matrix d_f = dense_backward(g_s, f, d_ls, gs_out);
        add_inplace(d_f, dense_backward(g_n, f, d_ln, gn_out));
        stack_backward(e, ce, std::move(d_f), e_out);
    };

    backprop_stream(probs_s, y_s, f_s, ce_s);
    backprop_stream(probs_n, y_n_offset, f_n, ce_n);
    return loss;
}

PretrainedModel pretrain(const FeatureArch& arch, const LabeledSet& source,
                         const VendorConfig& cfg, const TrainCallback& callback) {
    cfg.validate();
    std::size_t num_classes = 0;
    check_canonical_labels(source, &num_classes);
    if (arch.input_dim != source.features.cols()) {
        throw input_error("pretrain: arch.input_dim does not match source features");
    }

    Rng rng(cfg.seed);
    PretrainedModel model;
    model.arch = arch;
    model.num_shared = num_classes;
    model.m = make_stack(arch.input_dim, arch.m_dims, rng);
    model.e = make_stack(arch.m_dims.back(), arch.e_dims, rng);
    model.g_s = make_dense(arch.e_dims.back(), num_classes, rng);

    std::vector<Matrix*> params;
    collect_params(model.m, params);
    collect_params(model.e, params);
    collect_params(model.g_s, params);
    SgdMomentum opt(cfg.learning_rate, cfg.momentum, cfg.weight_decay);

    for (std::size_t epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
        const auto order = balanced_order(source.labels, num_classes, rng);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            const std::span<const std::size_t> chunk(order.data() + start, len);
            const Matrix x = take_rows(source.features, chunk);
            std::vector<int> y(len);
            for (std::size_t i = 0; i < len; ++i) y[i] = source.labels[chunk[i]];

            StackGrads gm = zero_grads(model.m);
            StackGrads ge = zero_grads(model.e);
            DenseGrads ggs = zero_grads(model.g_s);
            loss_sum += pretrain_loss_and_grads(model.m, model.e, model.g_s, x, y, &gm, &ge, &ggs);
            ++steps;

            std::vector<Matrix*> grads;
            collect_grads(gm, grads);
            collect_grads(ge, grads);
            collect_grads(ggs, grads);
            opt.step(params, grads);
        }
        if (callback) {
            callback({TrainEvent::Phase::pretrain, epoch, loss_sum / static_cast<double>(steps),
                      phase1_source_accuracy(model, source),
                      std::numeric_limits<double>::quiet_NaN()});
        }
    }
    return model;
}

InheritableModel train_inheritable(const PretrainedModel& pretrained, const LabeledSet& source,
                                   const VendorConfig& cfg, const TrainCallback& callback) {
    cfg.validate();
    std::size_t num_classes = 0;
    check_canonical_labels(source, &num_classes);
    if (num_classes != pretrained.num_shared) {
        throw input_error("train_inheritable: source classes do not match the pretrained model");
    }

    Rng rng(cfg.seed ^ kPhase2SeedSalt);

    InheritableModel model;
    model.spec.input_dim = pretrained.arch.input_dim;
    model.spec.m_dims = pretrained.arch.m_dims;
    model.spec.e_dims = pretrained.arch.e_dims;
    model.spec.num_shared = pretrained.num_shared;
    model.spec.num_negative = cfg.resolve_negative_classes(pretrained.num_shared);
    model.spec.validate();
    model.m = pretrained.m;
    model.e = pretrained.e;
    model.g_s = pretrained.g_s;
    model.g_n = make_dense(pretrained.arch.e_dims.back(), model.spec.num_negative, rng);
    model.shared_labels.resize(model.spec.num_shared);
    for (std::size_t i = 0; i < model.spec.num_shared; ++i) {
        model.shared_labels[i] = static_cast<int>(i);
    }

    const std::size_t num_negatives = cfg.negative_samples ? cfg.negative_samples : source.size();
    const NegativeSet negatives = generate_negatives(model, source, num_negatives, cfg.d_percent,
                                                     model.spec.num_negative, rng);

    // Only {E, G_s, G_n} train in this phase; M stays exactly as pretrained.
    std::vector<Matrix*> params;
    collect_params(model.e, params);
    collect_params(model.g_s, params);
    collect_params(model.g_n, params);
    SgdMomentum opt(cfg.learning_rate, cfg.momentum, cfg.weight_decay);

    const std::size_t half_batch = cfg.batch_size / 2;
    IndexStream negative_stream(negatives.size(), rng);

    for (std::size_t epoch = 1; epoch <= cfg.finetune_epochs; ++epoch) {
        const auto order = balanced_order(source.labels, num_classes, rng);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < order.size(); start += half_batch) {
            const std::size_t len = std::min(half_batch, order.size() - start);
            const std::span<const std::size_t> chunk(order.data() + start, len);
            const Matrix x_s = take_rows(source.features, chunk);
            std::vector<int> y_s(len);
            for (std::size_t i = 0; i < len; ++i) y_s[i] = source.labels[chunk[i]];

            std::vector<std::size_t> neg_rows(half_batch);
            for (std::size_t i = 0; i < half_batch; ++i) neg_rows[i] = negative_stream.next(rng);
            const Matrix u_n = take_rows(negatives.u_n, neg_rows);
            std::vector<int> y_n(half_batch);
            for (std::size_t i = 0; i < half_batch; ++i) y_n[i] = negatives.y_n[neg_rows[i]];

            StackGrads ge = zero_grads(model.e);
            DenseGrads ggs = zero_grads(model.g_s);
            DenseGrads ggn = zero_grads(model.g_n);
            loss_sum += inheritable_loss_and_grads(model.m, model.e, model.g_s, model.g_n, x_s, y_s,
                                                   u_n, y_n, &ge, &ggs, &ggn);
            ++steps;

            std::vector<Matrix*> grads;
            collect_grads(ge, grads);
            collect_grads(ggs, grads);
            collect_grads(ggn, grads);
            opt.step(params, grads);
        }
        if (callback) {
            callback({TrainEvent::Phase::inheritable, epoch,
                      loss_sum / static_cast<double>(steps), phase2_source_accuracy(model, source),
                      mean(instance_weights(model, source.features))});
        }
    }

    model.source_mean_w = mean(instance_weights(model, source.features));
    model.validate();
    return model;
}

InheritableModel train_vendor(const FeatureArch& arch, const LabeledSet& source,
                              const VendorConfig& cfg, const TrainCallback& callback) {
    for (int l : source.labels) {
        if (l < 0) throw input_error("train_vendor: negative label in source set");
    }
    const Canonicalized canon = canonicalize_labels(source);
    const PretrainedModel pre = pretrain(arch, canon.set, cfg, callback);
    InheritableModel model = train_inheritable(pre, canon.set, cfg, callback);
    model.shared_labels = canon.class_ids;
    return model;
}

}  // namespace osda
