#include "osda/layers.hpp"

#include <cmath>

#include "osda/errors.hpp"

namespace osda {

DenseLayer make_dense(std::size_t in, std::size_t out, Rng& rng) {
    if (in == 0 || out == 0) throw input_error("make_dense: zero-width layer");
    DenseLayer layer{Matrix(in, out), Matrix(1, out)};
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    for (double& v : layer.w.data()) v = rng.uniform(-limit, limit);
    return layer;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    Matrix y = matmul(x, layer.w);
    add_row_broadcast(y, layer.b.row(0));
    return y;
}

Matrix dense_backward(const DenseLayer& layer, const Matrix& x, const Matrix& d_out,
                      DenseGrads& grads) {
    add_inplace(grads.dw, matmul_tn(x, d_out));
    add_inplace(grads.db, column_sums(d_out));
    return matmul_nt(d_out, layer.w);
}

void relu_inplace(Matrix& m) {
    for (double& v : m.data()) {
        if (v < 0.0) v = 0.0;
    }
}

void relu_backward_inplace(Matrix& d, const Matrix& activation) {
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (activation.data()[i] <= 0.0) d.data()[i] = 0.0;
    }
}

Stack make_stack(std::size_t in, std::span<const std::size_t> widths, Rng& rng) {
    if (widths.empty()) throw input_error("make_stack: at least one layer required");
    Stack stack;
    std::size_t prev = in;
    for (std::size_t w : widths) {
        stack.layers.push_back(make_dense(prev, w, rng));
        prev = w;
    }
    return stack;
}

Matrix stack_forward(const Stack& stack, const Matrix& x, StackCache* cache) {
    if (cache) {
        cache->xs.clear();
        cache->xs.push_back(x);
    }
    Matrix a = x;
    for (const DenseLayer& layer : stack.layers) {
        a = dense_forward(layer, a);
        relu_inplace(a);
        if (cache) cache->xs.push_back(a);
    }
    return a;
}

Matrix stack_backward(const Stack& stack, const StackCache& cache, Matrix d_out,
                      StackGrads& grads) {
    if (cache.xs.size() != stack.layers.size() + 1) {
        throw input_error("stack_backward: cache does not match stack");
    }
    for (std::size_t li = stack.layers.size(); li-- > 0;) {
        relu_backward_inplace(d_out, cache.xs[li + 1]);
        d_out = dense_backward(stack.layers[li], cache.xs[li], d_out, grads.layers[li]);
    }
    return d_out;
}

DenseGrads zero_grads(const DenseLayer& layer) {
    return {Matrix(layer.w.rows(), layer.w.cols()), Matrix(1, layer.b.cols())};
}

StackGrads zero_grads(const Stack& stack) {
    StackGrads g;
    for (const DenseLayer& layer : stack.layers) g.layers.push_back(zero_grads(layer));
    return g;
}

void collect_params(Stack& stack, std::vector<Matrix*>& out) {
    for (DenseLayer& layer : stack.layers) {
        out.push_back(&layer.w);
        out.push_back(&layer.b);
    }
}

void collect_params(DenseLayer& layer, std::vector<Matrix*>& out) {
    out.push_back(&layer.w);
    out.push_back(&layer.b);
}

void collect_grads(StackGrads& grads, std::vector<Matrix*>& out) {
    for (DenseGrads& g : grads.layers) {
        out.push_back(&g.dw);
        out.push_back(&g.db);
    }
}

void collect_grads(DenseGrads& grads, std::vector<Matrix*>& out) {
    out.push_back(&grads.dw);
    out.push_back(&grads.db);
}

void SgdMomentum::step(std::span<Matrix* const> params, std::span<Matrix* const> grads) {
    if (params.size() != grads.size()) throw input_error("SgdMomentum: params/grads mismatch");
    if (velocity_.empty()) {
        for (const Matrix* p : params) velocity_.emplace_back(p->rows(), p->cols());
    }
    if (velocity_.size() != params.size()) throw input_error("SgdMomentum: parameter list changed");
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& v = velocity_[i];
        Matrix& p = *params[i];
        const Matrix& g = *grads[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            v.data()[j] = momentum_ * v.data()[j] + g.data()[j] + weight_decay_ * p.data()[j];
            p.data()[j] -= lr_ * v.data()[j];
        }
    }
}

}  // namespace osda
