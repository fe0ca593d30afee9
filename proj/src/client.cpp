#include "osda/client.hpp"

#include <algorithm>
#include <cmath>

#include "osda/errors.hpp"
#include "osda/inheritability.hpp"
#include "osda/numeric.hpp"
#include "osda/rng.hpp"

namespace osda {

void AdaptConfig::validate() const {
    if (batch_size < 1) throw input_error("AdaptConfig: batch_size must be >= 1");
    if (learning_rate < 0.0) throw input_error("AdaptConfig: learning_rate must be >= 0");
    if (weight_decay < 0.0) throw input_error("AdaptConfig: weight_decay must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw input_error("AdaptConfig: momentum must lie in [0, 1)");
    if (k_percent < 0.0 || k_percent > 100.0) {
        throw input_error("AdaptConfig: k_percent must lie in [0, 100]");
    }
}

PseudoLabelSet pseudo_label(const InheritableModel& source_model, const Matrix& target_features,
                            double k_percent) {
    if (target_features.rows() == 0) throw input_error("pseudo_label: empty target");
    if (k_percent < 0.0 || k_percent > 100.0) {
        throw input_error("pseudo_label: k_percent must lie in [0, 100]");
    }

    const std::vector<double> w = instance_weights(source_model, target_features);

    PseudoLabelSet out;
    out.indices = top_fraction_indices(w, k_percent);
    if (out.indices.empty()) return out;

    const Matrix selected = take_rows(target_features, out.indices);
    const ForwardTaps taps = forward(source_model, selected);
    out.labels.resize(out.indices.size());
    for (std::size_t i = 0; i < out.indices.size(); ++i) {
        const auto row = taps.logits_s.row(i);
        out.labels[i] =
            static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

double tune_binary_loss(double s_hat, double w) {
    const double s = std::clamp(s_hat, kProbFloor, 1.0 - kProbFloor);
    return -w * std::log(s) - (1.0 - w) * std::log(1.0 - s);
}

AdaptTerms adapt_terms_and_grads(const Stack& m_t, const Stack& e_t, const DenseLayer& g_s,
                                 const DenseLayer& g_n, const Matrix& x,
                                 std::span<const double> weights,
                                 std::span<const int> pseudo_labels, bool with_inh, bool with_t1,
                                 bool with_t2, StackGrads* gm, StackGrads* ge) {
    const std::size_t batch = x.rows();
    if (weights.size() != batch || pseudo_labels.size() != batch) {
        throw input_error("adapt_terms_and_grads: one weight and pseudo-label slot per row");
    }
    const std::size_t num_shared = g_s.out_dim();
    const bool want_grads = gm || ge;

    StackCache cm, ce;
    const Matrix u = stack_forward(m_t, x, want_grads ? &cm : nullptr);
    const Matrix f = stack_forward(e_t, u, want_grads ? &ce : nullptr);
    const Matrix logits_s = dense_forward(g_s, f);
    const Matrix logits_n = dense_forward(g_n, f);
    const Matrix probs = softmax(concat_logits(logits_s, logits_n));
    const Matrix z_sh = softmax(logits_s);
    const Matrix z_uk = softmax(logits_n);

    const double inv_batch = 1.0 / static_cast<double>(batch);
    std::size_t num_pseudo = 0;
    for (int l : pseudo_labels) {
        if (l >= 0) ++num_pseudo;
    }

    AdaptTerms terms;
    Matrix d_ls(batch, num_shared);
    Matrix d_ln(batch, probs.cols() - num_shared);

    for (std::size_t i = 0; i < batch; ++i) {
        const auto p = probs.row(i);
        const double w = weights[i];

        // Inherit: cross-entropy toward the pseudo-label over the full
        // concatenated softmax, averaged over the labeled rows only.
        if (with_inh && pseudo_labels[i] >= 0) {
            const auto y = static_cast<std::size_t>(pseudo_labels[i]);
            terms.l_inh -= safe_log(p[y]);
            if (want_grads) {
                const double inv_pseudo = 1.0 / static_cast<double>(num_pseudo);
                for (std::size_t j = 0; j < p.size(); ++j) {
                    const double g = (p[j] - (j == y ? 1.0 : 0.0)) * inv_pseudo;
                    if (j < num_shared) {
                        d_ls(i, j) += g;
                    } else {
                        d_ln(i, j - num_shared) += g;
                    }
                }
            }
        }

        // Coarse separation: binary loss on the total shared-class mass.
        if (with_t1) {
            double s_hat = 0.0;
            for (std::size_t c = 0; c < num_shared; ++c) s_hat += p[c];
            terms.l_t1 += tune_binary_loss(s_hat, w) * inv_batch;
            if (want_grads && s_hat > kProbFloor && s_hat < 1.0 - kProbFloor) {
                const double dl_ds = (-w / s_hat + (1.0 - w) / (1.0 - s_hat)) * inv_batch;
                for (std::size_t j = 0; j < p.size(); ++j) {
                    const double indicator = j < num_shared ? 1.0 : 0.0;
                    const double g = dl_ds * p[j] * (indicator - s_hat);
                    if (j < num_shared) {
                        d_ls(i, j) += g;
                    } else {
                        d_ln(i, j - num_shared) += g;
                    }
                }
            }
        }

        // Fine alignment: weighted per-head entropies.
        if (with_t2) {
            const auto zs = z_sh.row(i);
            const auto zu = z_uk.row(i);
            double h_sh = 0.0, h_uk = 0.0;
            for (double v : zs)
                if (v > 0.0) h_sh -= v * safe_log(v);
            for (double v : zu)
                if (v > 0.0) h_uk -= v * safe_log(v);
            terms.l_t2 += (w * h_sh + (1.0 - w) * h_uk) * inv_batch;
            if (want_grads) {
                for (std::size_t j = 0; j < zs.size(); ++j) {
                    if (zs[j] > 0.0) d_ls(i, j) += w * inv_batch * (-zs[j] * (safe_log(zs[j]) + h_sh));
                }
                for (std::size_t j = 0; j < zu.size(); ++j) {
                    if (zu[j] > 0.0)
                        d_ln(i, j) += (1.0 - w) * inv_batch * (-zu[j] * (safe_log(zu[j]) + h_uk));
                }
            }
        }
    }
    if (num_pseudo > 0) terms.l_inh /= static_cast<double>(num_pseudo);
    if (!want_grads) return terms;

    // The heads are frozen: propagate through their weights without ever
    // forming a head gradient.
    Matrix d_f = matmul_nt(d_ls, g_s.w);
    add_inplace(d_f, matmul_nt(d_ln, g_n.w));
    StackGrads e_scratch = zero_grads(e_t);
    Matrix d_u = stack_backward(e_t, ce, std::move(d_f), ge ? *ge : e_scratch);
    if (gm) stack_backward(m_t, cm, std::move(d_u), *gm);
    return terms;
}

TargetModel adapt(const InheritableModel& source_model, const Matrix& target_features,
                  const AdaptConfig& cfg, const AdaptCallback& callback) {
    cfg.validate();
    source_model.validate();
    if (target_features.rows() == 0) throw input_error("adapt: empty target");

    TargetModel target{source_model};
    const std::size_t n = target_features.rows();

    // Confidence and pseudo-labels depend only on the frozen source model, so
    // both are fixed for the whole adaptation.
    const std::vector<double> w_all = instance_weights(source_model, target_features);
    const PseudoLabelSet pseudo = pseudo_label(source_model, target_features, cfg.k_percent);
    std::vector<int> pseudo_by_row(n, -1);
    for (std::size_t i = 0; i < pseudo.indices.size(); ++i) {
        pseudo_by_row[pseudo.indices[i]] = pseudo.labels[i];
    }

    std::vector<Matrix*> params;
    collect_params(target.net.m, params);
    collect_params(target.net.e, params);
    SgdMomentum opt(cfg.learning_rate, cfg.momentum, cfg.weight_decay);
    Rng rng(cfg.seed);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto order = rng.permutation(n);
        AdaptTerms epoch_terms;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, n - start);
            const std::span<const std::size_t> chunk(order.data() + start, len);
            const Matrix x = take_rows(target_features, chunk);

            std::vector<double> w_batch(len);
            std::vector<int> pl_batch(len);
            for (std::size_t i = 0; i < len; ++i) {
                w_batch[i] = w_all[chunk[i]];
                pl_batch[i] = pseudo_by_row[chunk[i]];
            }
            const std::vector<double> w_norm = normalize_by_max(w_batch);

            StackGrads gm = zero_grads(target.net.m);
            StackGrads ge = zero_grads(target.net.e);
            const AdaptTerms terms =
                adapt_terms_and_grads(target.net.m, target.net.e, target.net.g_s, target.net.g_n, x,
                                      w_norm, pl_batch, true, true, true, &gm, &ge);
            epoch_terms.l_inh += terms.l_inh;
            epoch_terms.l_t1 += terms.l_t1;
            epoch_terms.l_t2 += terms.l_t2;
            ++steps;

            std::vector<Matrix*> grads;
            collect_grads(gm, grads);
            collect_grads(ge, grads);
            opt.step(params, grads);
        }
        if (callback) {
            const double inv = 1.0 / static_cast<double>(steps);
            callback({epoch, epoch_terms.l_inh * inv, epoch_terms.l_t1 * inv,
                      epoch_terms.l_t2 * inv, target.net});
        }
    }
    return target;
}

std::vector<int> infer(const InheritableModel& model, const Matrix& x) {
    const ForwardTaps taps = forward(model, x);
    const Matrix logits = concat_logits(taps.logits_s, taps.logits_n);
    std::vector<int> labels(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = logits.row(i);
        const std::size_t arg = static_cast<std::size_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
        labels[i] = arg < model.spec.num_shared ? model.shared_labels[arg] : kUnknownLabel;
    }
    return labels;
}

std::vector<int> infer(const TargetModel& model, const Matrix& x) { return infer(model.net, x); }

}  // namespace osda
