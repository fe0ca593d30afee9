#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "osda/matrix.hpp"
#include "osda/rng.hpp"

namespace osda {

/// One fully connected layer: y = x * w + b, with w of shape in x out and b a
/// 1 x out row broadcast over the batch.
struct DenseLayer {
    Matrix w;
    Matrix b;

    std::size_t in_dim() const { return w.rows(); }
    std::size_t out_dim() const { return w.cols(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct DenseGrads {
    Matrix dw;
    Matrix db;
};

/// He-uniform fan-in initialization, zero bias.
DenseLayer make_dense(std::size_t in, std::size_t out, Rng& rng);

Matrix dense_forward(const DenseLayer& layer, const Matrix& x);

/// Accumulates dw/db into `grads` and returns dL/dx. `x` must be the forward
/// input that produced the gradient `d_out`.
Matrix dense_backward(const DenseLayer& layer, const Matrix& x, const Matrix& d_out,
                      DenseGrads& grads);

void relu_inplace(Matrix& m);
/// Zeroes gradient entries where the forward activation was zero.
void relu_backward_inplace(Matrix& d, const Matrix& activation);

/// A stack of dense layers with ReLU after every one of them.
struct Stack {
    std::vector<DenseLayer> layers;

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }

    friend bool operator==(const Stack&, const Stack&) = default;
};

/// Per-layer inputs captured during the forward pass; xs[0] is the stack
/// input, xs[i + 1] the post-ReLU output of layer i.
struct StackCache {
    std::vector<Matrix> xs;
};

struct StackGrads {
    std::vector<DenseGrads> layers;
};

Stack make_stack(std::size_t in, std::span<const std::size_t> widths, Rng& rng);

Matrix stack_forward(const Stack& stack, const Matrix& x, StackCache* cache = nullptr);

/// Backward through the whole stack; returns dL/d(input).
Matrix stack_backward(const Stack& stack, const StackCache& cache, Matrix d_out,
                      StackGrads& grads);

DenseGrads zero_grads(const DenseLayer& layer);
StackGrads zero_grads(const Stack& stack);

void collect_params(Stack& stack, std::vector<Matrix*>& out);
void collect_params(DenseLayer& layer, std::vector<Matrix*>& out);
void collect_grads(StackGrads& grads, std::vector<Matrix*>& out);
void collect_grads(DenseGrads& grads, std::vector<Matrix*>& out);

/// Plain SGD with momentum and L2 weight decay: v = mu * v + g + wd * p,
/// p = p - lr * v. Velocities are keyed by position in the parameter list,
/// which must stay stable across steps.
class SgdMomentum {
public:
    SgdMomentum(double learning_rate, double momentum, double weight_decay = 0.0)
        : lr_(learning_rate), momentum_(momentum), weight_decay_(weight_decay) {}

    void step(std::span<Matrix* const> params, std::span<Matrix* const> grads);

private:
    double lr_;
    double momentum_;
    double weight_decay_;
    std::vector<Matrix> velocity_;
};

}  // namespace osda
