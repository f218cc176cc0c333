#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "eca/errors.hpp"

namespace eca {

// Floor applied inside log and to divisor magnitudes, so loss formulas can be
// written literally without upstream clamping.
inline constexpr double kEps = 1e-12;

// Dense 64-bit float tensor with optional reverse-mode gradient recording.
// A Tensor is a cheap value handle onto a shared node; op functions build an
// acyclic graph whenever any operand requires grad. Values are treated as
// immutable after an op produces them (the optimizer mutates leaf parameters
// through mutable_values(), which it exclusively owns during training).
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const;
    std::size_t size() const;
    int rows() const;  // first dimension (1 for scalars)
    int cols() const;  // second dimension (1 for vectors/scalars)

    const std::vector<double>& values() const;
    std::vector<double>& mutable_values();
    double at(std::size_t i) const;
    double item() const;  // requires size() == 1

    bool requires_grad() const;
    // Gradient of the last backward() root w.r.t. this tensor. Empty before
    // any backward pass that reaches this node.
    const std::vector<double>& grad() const;

    // Reverse-mode pass from a scalar root. Resets grads of every node in the
    // root's graph, then accumulates; fan-out adds contributions. Throws
    // ContractError if the root is not scalar. A root with no grad path is a
    // no-op (empty gradient map).
    void backward() const;

    struct Node;
    const std::shared_ptr<Node>& node() const { return node_; }

  private:
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
    std::shared_ptr<Node> node_;

    friend Tensor make_op_tensor(const char* op, std::vector<int> shape,
                                 std::vector<double> values,
                                 std::vector<Tensor> parents,
                                 std::function<void(Node&)> backprop);
};

struct Tensor::Node {
    std::vector<int> shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::vector<double> grad;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // reads this->grad, accumulates into parents
};

// ---- forward ops ------------------------------------------------------------
// All ops validate operand shapes (DimensionError) and reject non-finite
// results (DomainError naming the op). Graph recording happens iff any
// operand requires grad.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);       // same shape
Tensor sub(const Tensor& a, const Tensor& b);       // same shape
Tensor mul(const Tensor& a, const Tensor& b);       // Hadamard, same shape
Tensor div(const Tensor& a, const Tensor& b);       // divisor magnitude floored at kEps

Tensor add_scalar(const Tensor& a, double s);       // scalar broadcast
Tensor scale(const Tensor& a, double s);
Tensor rsub_scalar(double s, const Tensor& a);      // s - a

Tensor softplus(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);                        // input floored at kEps
Tensor digamma(const Tensor& a);

Tensor sum(const Tensor& a);                        // scalar
Tensor mean(const Tensor& a);                       // scalar
Tensor l2_norm(const Tensor& a);                    // scalar, sqrt(sum of squares)
Tensor row_sum(const Tensor& a);                    // [r x c] -> [r]
Tensor row_max(const Tensor& a);                    // max over axis 1; grad to first argmax
Tensor row_normalize(const Tensor& a);              // unit L2 rows; zero rows pass through
Tensor scale_rows(const Tensor& m, const Tensor& v);  // row i times v[i]
Tensor div_rows(const Tensor& m, const Tensor& v);    // row i over v[i] (floored)
Tensor add_row_broadcast(const Tensor& m, const Tensor& v);  // v (length cols) added to each row

Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor gather_cols(const Tensor& m, const std::vector<int>& col_index);  // out[i] = m[i, idx[i]]
Tensor diag(const Tensor& m);                       // square matrix diagonal as vector

// ---- scalar math shared with test oracles ----------------------------------
double softplus_value(double x);
double sigmoid_value(double x);
double digamma_value(double x);
double trigamma_value(double x);

// ---- gradient checking ------------------------------------------------------
// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
// f must produce a scalar tensor; h in [1e-6, 1e-3].
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point, double h);

}  // namespace eca
