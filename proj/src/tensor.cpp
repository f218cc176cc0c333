#include "eca/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "eca/kernels.hpp"

namespace eca {

namespace {

std::size_t numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

void validate_shape(const std::vector<int>& shape) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimensions must be positive");
    }
}

std::string shape_str(const std::vector<int>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

void check_finite(const char* op, const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw DomainError(std::string(op) + ": non-finite result");
        }
    }
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

void require_matrix(const char* op, const Tensor& a) {
    if (a.shape().size() != 2) {
        throw DimensionError(std::string(op) + ": expected a 2-D tensor, got " +
                             shape_str(a.shape()));
    }
}

void require_defined(const char* op, const Tensor& a) {
    if (!a.defined()) throw ContractError(std::string(op) + ": undefined tensor operand");
}

using NodePtr = std::shared_ptr<Tensor::Node>;

}  // namespace

Tensor make_op_tensor(const char* op, std::vector<int> shape, std::vector<double> values,
                      std::vector<Tensor> parents, std::function<void(Tensor::Node&)> backprop) {
    check_finite(op, values);
    auto node = std::make_shared<Tensor::Node>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->op = op;
    bool needs_grad = false;
    for (const Tensor& p : parents) {
        if (p.defined() && p.requires_grad()) needs_grad = true;
    }
    if (needs_grad) {
        node->requires_grad = true;
        for (const Tensor& p : parents) node->parents.push_back(p.node());
        node->backprop = std::move(backprop);
    }
    return Tensor(std::move(node));
}

// ---- Tensor basics ----------------------------------------------------------

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    validate_shape(shape);
    std::vector<double> v(numel(shape), value);
    return from_values(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
    validate_shape(shape);
    if (numel(shape) != values.size()) {
        throw DimensionError("from_values: " + std::to_string(values.size()) +
                             " values do not fill shape " + shape_str(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_values({1}, {value}, requires_grad);
}

const std::vector<int>& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->values.size(); }
int Tensor::rows() const { return node_->shape[0]; }
int Tensor::cols() const { return node_->shape.size() >= 2 ? node_->shape[1] : 1; }

const std::vector<double>& Tensor::values() const { return node_->values; }
std::vector<double>& Tensor::mutable_values() { return node_->values; }
double Tensor::at(std::size_t i) const { return node_->values[i]; }

double Tensor::item() const {
    if (size() != 1) throw ContractError("item: tensor is not scalar");
    return node_->values[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
const std::vector<double>& Tensor::grad() const { return node_->grad; }

void Tensor::backward() const {
    if (!node_) throw ContractError("backward: undefined tensor");
    if (node_->values.size() != 1) throw ContractError("backward: root must be scalar");
    if (!node_->requires_grad) return;  // no grad leaves: empty gradient map

    // Postorder over grad-requiring ancestry: leaves first, root last.
    std::vector<Node*> topo;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* n;
        std::size_t next;
    };
    std::vector<Frame> stack;
    stack.push_back({node_.get(), 0});
    visited.insert(node_.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.n->parents.size()) {
            Node* p = f.n->parents[f.next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            topo.push_back(f.n);
            stack.pop_back();
        }
    }

    for (Node* n : topo) n->grad.assign(n->values.size(), 0.0);
    node_->grad[0] = 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop(**it);
    }
}

// ---- elementwise helpers ----------------------------------------------------

double softplus_value(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_value(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Recurrence to x >= 10, then the asymptotic expansion; absolute error below
// 1e-10 on the alpha >= 1 inputs this library produces.
double digamma_value(double x) {
    if (!(x > 0.0)) throw DomainError("digamma: input must be positive");
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    return acc + std::log(x) - 0.5 * inv -
           inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
}

double trigamma_value(double x) {
    if (!(x > 0.0)) throw DomainError("trigamma: input must be positive");
    double acc = 0.0;
    while (x < 10.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    return acc + inv * (1.0 + 0.5 * inv + inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 / 42.0)));
}

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_map(const char* op, const Tensor& a, Fwd fwd, Bwd dfd) {
    require_defined(op, a);
    std::vector<double> out(a.size());
    kernels::map(a.values().data(), out.data(), a.size(), fwd);
    NodePtr pa = a.node();
    return make_op_tensor(op, a.shape(), std::move(out), {a}, [pa, dfd](Tensor::Node& self) {
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            pa->grad[i] += self.grad[i] * dfd(pa->values[i], self.values[i]);
        }
    });
}

}  // namespace

Tensor softplus(const Tensor& a) {
    return unary_map(
        "softplus", a, [](double x) { return softplus_value(x); },
        [](double x, double) { return sigmoid_value(x); });
}

Tensor exp(const Tensor& a) {
    return unary_map(
        "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary_map(
        "log", a, [](double x) { return std::log(std::max(x, kEps)); },
        [](double x, double) { return x > kEps ? 1.0 / x : 0.0; });
}

Tensor digamma(const Tensor& a) {
    require_defined("digamma", a);
    for (std::size_t i = 0; i < a.size(); ++i) {
        // validated up front; the mapped call must not throw inside the
        // parallel region
        if (!(a.at(i) > 0.0)) throw DomainError("digamma: input must be positive");
    }
    return unary_map(
        "digamma", a, [](double x) { return digamma_value(x); },
        [](double x, double) { return trigamma_value(x); });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary_map(
        "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor scale(const Tensor& a, double s) {
    return unary_map(
        "scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor rsub_scalar(double s, const Tensor& a) {
    return unary_map(
        "rsub_scalar", a, [s](double x) { return s - x; }, [](double, double) { return -1.0; });
}

// ---- binary elementwise -----------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_defined("add", a);
    require_defined("add", b);
    require_same_shape("add", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
    NodePtr pa = a.node(), pb = b.node();
    return make_op_tensor("add", a.shape(), std::move(out), {a, b}, [pa, pb](Tensor::Node& self) {
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            if (pa->requires_grad) pa->grad[i] += self.grad[i];
            if (pb->requires_grad) pb->grad[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_defined("sub", a);
    require_defined("sub", b);
    require_same_shape("sub", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
    NodePtr pa = a.node(), pb = b.node();
    return make_op_tensor("sub", a.shape(), std::move(out), {a, b}, [pa, pb](Tensor::Node& self) {
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            if (pa->requires_grad) pa->grad[i] += self.grad[i];
            if (pb->requires_grad) pb->grad[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_defined("mul", a);
    require_defined("mul", b);
    require_same_shape("mul", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
    NodePtr pa = a.node(), pb = b.node();
    return make_op_tensor("mul", a.shape(), std::move(out), {a, b}, [pa, pb](Tensor::Node& self) {
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            if (pa->requires_grad) pa->grad[i] += self.grad[i] * pb->values[i];
            if (pb->requires_grad) pb->grad[i] += self.grad[i] * pa->values[i];
        }
    });
}

namespace {
double floored_divisor(double b) {
    const double mag = std::max(std::abs(b), kEps);
    return b < 0.0 ? -mag : mag;
}
}  // namespace

Tensor div(const Tensor& a, const Tensor& b) {
    require_defined("div", a);
    require_defined("div", b);
    require_same_shape("div", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) / floored_divisor(b.at(i));
    NodePtr pa = a.node(), pb = b.node();
    return make_op_tensor("div", a.shape(), std::move(out), {a, b}, [pa, pb](Tensor::Node& self) {
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            const double d = floored_divisor(pb->values[i]);
            if (pa->requires_grad) pa->grad[i] += self.grad[i] / d;
            if (pb->requires_grad && std::abs(pb->values[i]) > kEps) {
                pb->grad[i] -= self.grad[i] * pa->values[i] / (d * d);
            }
        }
    });
}

// ---- matrix ops ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined("matmul", a);
    require_defined("matmul", b);
    require_matrix("matmul", a);
    require_matrix("matmul", b);
    const int m = a.shape()[0], k = a.shape()[1];
    const int k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2) {
        throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    kernels::matmul(a.values().data(), b.values().data(), out.data(), m, k, n);
    NodePtr pa = a.node(), pb = b.node();
    return make_op_tensor("matmul", {m, n}, std::move(out), {a, b},
                          [pa, pb, m, k, n](Tensor::Node& self) {
                              if (pa->requires_grad) {
                                  std::vector<double> tmp(static_cast<std::size_t>(m) * k);
                                  kernels::matmul_nt(self.grad.data(), pb->values.data(),
                                                     tmp.data(), m, n, k);
                                  for (std::size_t i = 0; i < tmp.size(); ++i)
                                      pa->grad[i] += tmp[i];
                              }
                              if (pb->requires_grad) {
                                  std::vector<double> tmp(static_cast<std::size_t>(k) * n);
                                  kernels::matmul_tn(pa->values.data(), self.grad.data(),
                                                     tmp.data(), k, m, n);
                                  for (std::size_t i = 0; i < tmp.size(); ++i)
                                      pb->grad[i] += tmp[i];
                              }
                          });
}

Tensor transpose(const Tensor& a) {
    require_defined("transpose", a);
    require_matrix("transpose", a);
    const int r = a.shape()[0], c = a.shape()[1];
    std::vector<double> out(a.size());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out[static_cast<std::size_t>(j) * r + i] = a.at(static_cast<std::size_t>(i) * c + j);
    NodePtr pa = a.node();
    return make_op_tensor("transpose", {c, r}, std::move(out), {a}, [pa, r, c](Tensor::Node& self) {
        for (int j = 0; j < c; ++j)
            for (int i = 0; i < r; ++i)
                pa->grad[static_cast<std::size_t>(i) * c + j] +=
                    self.grad[static_cast<std::size_t>(j) * r + i];
    });
}

// ---- reductions ---------------------------------------------------------------

Tensor sum(const Tensor& a) {
    require_defined("sum", a);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.at(i);
    NodePtr pa = a.node();
    return make_op_tensor("sum", {1}, {acc}, {a}, [pa](Tensor::Node& self) {
        for (std::size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += self.grad[0];
    });
}

Tensor mean(const Tensor& a) {
    require_defined("mean", a);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.at(i);
    const double inv = 1.0 / static_cast<double>(a.size());
    NodePtr pa = a.node();
    return make_op_tensor("mean", {1}, {acc * inv}, {a}, [pa, inv](Tensor::Node& self) {
        for (std::size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += self.grad[0] * inv;
    });
}

Tensor l2_norm(const Tensor& a) {
    require_defined("l2_norm", a);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.at(i) * a.at(i);
    const double norm = std::sqrt(acc);
    NodePtr pa = a.node();
    return make_op_tensor("l2_norm", {1}, {norm}, {a}, [pa](Tensor::Node& self) {
        const double n = self.values[0];
        if (n <= 0.0) return;
        for (std::size_t i = 0; i < pa->grad.size(); ++i)
            pa->grad[i] += self.grad[0] * pa->values[i] / n;
    });
}

Tensor row_sum(const Tensor& a) {
    require_defined("row_sum", a);
    require_matrix("row_sum", a);
    const int r = a.shape()[0], c = a.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(r), 0.0);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[i] += a.at(static_cast<std::size_t>(i) * c + j);
    NodePtr pa = a.node();
    return make_op_tensor("row_sum", {r}, std::move(out), {a}, [pa, r, c](Tensor::Node& self) {
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                pa->grad[static_cast<std::size_t>(i) * c + j] += self.grad[i];
    });
}

Tensor row_max(const Tensor& a) {
    require_defined("row_max", a);
    require_matrix("row_max", a);
    const int r = a.shape()[0], c = a.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(r));
    std::vector<int> argmax(static_cast<std::size_t>(r), 0);
    for (int i = 0; i < r; ++i) {
        const double* row = a.values().data() + static_cast<std::size_t>(i) * c;
        int best = 0;
        for (int j = 1; j < c; ++j)
            if (row[j] > row[best]) best = j;
        out[i] = row[best];
        argmax[i] = best;
    }
    NodePtr pa = a.node();
    return make_op_tensor("row_max", {r}, std::move(out), {a},
                          [pa, c, argmax](Tensor::Node& self) {
                              for (std::size_t i = 0; i < self.values.size(); ++i)
                                  pa->grad[i * c + argmax[i]] += self.grad[i];
                          });
}

Tensor row_normalize(const Tensor& a) {
    require_defined("row_normalize", a);
    require_matrix("row_normalize", a);
    const int r = a.shape()[0], c = a.shape()[1];
    std::vector<double> out(a.size());
    std::vector<double> norms(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) {
        const double* row = a.values().data() + static_cast<std::size_t>(i) * c;
        double acc = 0.0;
        for (int j = 0; j < c; ++j) acc += row[j] * row[j];
        const double n = std::sqrt(acc);
        norms[i] = n;
        double* orow = out.data() + static_cast<std::size_t>(i) * c;
        if (n > 0.0) {
            for (int j = 0; j < c; ++j) orow[j] = row[j] / n;
        } else {
            for (int j = 0; j < c; ++j) orow[j] = 0.0;  // zero rows pass through
        }
    }
    NodePtr pa = a.node();
    return make_op_tensor(
        "row_normalize", a.shape(), std::move(out), {a},
        [pa, r, c, norms](Tensor::Node& self) {
            for (int i = 0; i < r; ++i) {
                const std::size_t off = static_cast<std::size_t>(i) * c;
                const double n = norms[i];
                if (n <= 0.0) {
                    for (int j = 0; j < c; ++j) pa->grad[off + j] += self.grad[off + j];
                    continue;
                }
                double dot = 0.0;
                for (int j = 0; j < c; ++j) dot += self.grad[off + j] * self.values[off + j];
                for (int j = 0; j < c; ++j)
                    pa->grad[off + j] += (self.grad[off + j] - dot * self.values[off + j]) / n;
            }
        });
}

Tensor scale_rows(const Tensor& m, const Tensor& v) {
    require_defined("scale_rows", m);
    require_defined("scale_rows", v);
    require_matrix("scale_rows", m);
    const int r = m.shape()[0], c = m.shape()[1];
    if (v.shape().size() != 1 || v.shape()[0] != r) {
        throw DimensionError("scale_rows: scaler must be a vector of length " + std::to_string(r) +
                             ", got " + shape_str(v.shape()));
    }
    std::vector<double> out(m.size());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out[static_cast<std::size_t>(i) * c + j] =
                m.at(static_cast<std::size_t>(i) * c + j) * v.at(i);
    NodePtr pm = m.node(), pv = v.node();
    return make_op_tensor("scale_rows", m.shape(), std::move(out), {m, v},
                          [pm, pv, r, c](Tensor::Node& self) {
                              for (int i = 0; i < r; ++i) {
                                  const std::size_t off = static_cast<std::size_t>(i) * c;
                                  for (int j = 0; j < c; ++j) {
                                      if (pm->requires_grad)
                                          pm->grad[off + j] += self.grad[off + j] * pv->values[i];
                                      if (pv->requires_grad)
                                          pv->grad[i] += self.grad[off + j] * pm->values[off + j];
                                  }
                              }
                          });
}

Tensor div_rows(const Tensor& m, const Tensor& v) {
    require_defined("div_rows", m);
    require_defined("div_rows", v);
    require_matrix("div_rows", m);
    const int r = m.shape()[0], c = m.shape()[1];
    if (v.shape().size() != 1 || v.shape()[0] != r) {
        throw DimensionError("div_rows: divisor must be a vector of length " + std::to_string(r) +
                             ", got " + shape_str(v.shape()));
    }
    std::vector<double> out(m.size());
    for (int i = 0; i < r; ++i) {
        const double d = floored_divisor(v.at(i));
        for (int j = 0; j < c; ++j)
            out[static_cast<std::size_t>(i) * c + j] = m.at(static_cast<std::size_t>(i) * c + j) / d;
    }
    NodePtr pm = m.node(), pv = v.node();
    return make_op_tensor(
        "div_rows", m.shape(), std::move(out), {m, v}, [pm, pv, r, c](Tensor::Node& self) {
            for (int i = 0; i < r; ++i) {
                const std::size_t off = static_cast<std::size_t>(i) * c;
                const double d = floored_divisor(pv->values[i]);
                for (int j = 0; j < c; ++j) {
                    if (pm->requires_grad) pm->grad[off + j] += self.grad[off + j] / d;
                    if (pv->requires_grad && std::abs(pv->values[i]) > kEps)
                        pv->grad[i] -= self.grad[off + j] * pm->values[off + j] / (d * d);
                }
            }
        });
}

Tensor add_row_broadcast(const Tensor& m, const Tensor& v) {
    require_defined("add_row_broadcast", m);
    require_defined("add_row_broadcast", v);
    require_matrix("add_row_broadcast", m);
    const int r = m.shape()[0], c = m.shape()[1];
    if (v.shape().size() != 1 || v.shape()[0] != c) {
        throw DimensionError("add_row_broadcast: vector must have length " + std::to_string(c) +
                             ", got " + shape_str(v.shape()));
    }
    std::vector<double> out(m.size());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out[static_cast<std::size_t>(i) * c + j] =
                m.at(static_cast<std::size_t>(i) * c + j) + v.at(j);
    NodePtr pm = m.node(), pv = v.node();
    return make_op_tensor("add_row_broadcast", m.shape(), std::move(out), {m, v},
                          [pm, pv, r, c](Tensor::Node& self) {
                              for (int i = 0; i < r; ++i) {
                                  const std::size_t off = static_cast<std::size_t>(i) * c;
                                  for (int j = 0; j < c; ++j) {
                                      if (pm->requires_grad) pm->grad[off + j] += self.grad[off + j];
                                      if (pv->requires_grad) pv->grad[j] += self.grad[off + j];
                                  }
                              }
                          });
}

// ---- structure ops -------------------------------------------------------------

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    require_defined("concat_rows", a);
    require_defined("concat_rows", b);
    require_matrix("concat_rows", a);
    require_matrix("concat_rows", b);
    if (a.shape()[1] != b.shape()[1]) {
        throw DimensionError("concat_rows: column counts differ, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
    const int ra = a.shape()[0], rb = b.shape()[0], c = a.shape()[1];
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.values().begin(), a.values().end());
    out.insert(out.end(), b.values().begin(), b.values().end());
    NodePtr pa = a.node(), pb = b.node();
    return make_op_tensor("concat_rows", {ra + rb, c}, std::move(out), {a, b},
                          [pa, pb](Tensor::Node& self) {
                              const std::size_t na = pa->values.size();
                              if (pa->requires_grad)
                                  for (std::size_t i = 0; i < na; ++i) pa->grad[i] += self.grad[i];
                              if (pb->requires_grad)
                                  for (std::size_t i = 0; i < pb->values.size(); ++i)
                                      pb->grad[i] += self.grad[na + i];
                          });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require_defined("concat_cols", a);
    require_defined("concat_cols", b);
    require_matrix("concat_cols", a);
    require_matrix("concat_cols", b);
    if (a.shape()[0] != b.shape()[0]) {
        throw DimensionError("concat_cols: row counts differ, " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
    const int r = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(r) * (ca + cb));
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < ca; ++j)
            out[static_cast<std::size_t>(i) * (ca + cb) + j] =
                a.at(static_cast<std::size_t>(i) * ca + j);
        for (int j = 0; j < cb; ++j)
            out[static_cast<std::size_t>(i) * (ca + cb) + ca + j] =
                b.at(static_cast<std::size_t>(i) * cb + j);
    }
    NodePtr pa = a.node(), pb = b.node();
    return make_op_tensor("concat_cols", {r, ca + cb}, std::move(out), {a, b},
                          [pa, pb, r, ca, cb](Tensor::Node& self) {
                              for (int i = 0; i < r; ++i) {
                                  const std::size_t off = static_cast<std::size_t>(i) * (ca + cb);
                                  if (pa->requires_grad)
                                      for (int j = 0; j < ca; ++j)
                                          pa->grad[static_cast<std::size_t>(i) * ca + j] +=
                                              self.grad[off + j];
                                  if (pb->requires_grad)
                                      for (int j = 0; j < cb; ++j)
                                          pb->grad[static_cast<std::size_t>(i) * cb + j] +=
                                              self.grad[off + ca + j];
                              }
                          });
}

Tensor gather_cols(const Tensor& m, const std::vector<int>& col_index) {
    require_defined("gather_cols", m);
    require_matrix("gather_cols", m);
    const int r = m.shape()[0], c = m.shape()[1];
    if (static_cast<int>(col_index.size()) != r) {
        throw DimensionError("gather_cols: need one column index per row");
    }
    std::vector<double> out(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) {
        const int j = col_index[static_cast<std::size_t>(i)];
        if (j < 0 || j >= c) throw ContractError("gather_cols: column index out of range");
        out[i] = m.at(static_cast<std::size_t>(i) * c + j);
    }
    NodePtr pm = m.node();
    return make_op_tensor("gather_cols", {r}, std::move(out), {m},
                          [pm, c, col_index](Tensor::Node& self) {
                              for (std::size_t i = 0; i < self.values.size(); ++i)
                                  pm->grad[i * c + col_index[i]] += self.grad[i];
                          });
}

Tensor diag(const Tensor& m) {
    require_defined("diag", m);
    require_matrix("diag", m);
    const int r = m.shape()[0], c = m.shape()[1];
    if (r != c) throw DimensionError("diag: matrix must be square, got " + shape_str(m.shape()));
    std::vector<double> out(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) out[i] = m.at(static_cast<std::size_t>(i) * c + i);
    NodePtr pm = m.node();
    return make_op_tensor("diag", {r}, std::move(out), {m}, [pm, c](Tensor::Node& self) {
        for (std::size_t i = 0; i < self.values.size(); ++i)
            pm->grad[i * c + i] += self.grad[i];
    });
}

// ---- gradient checking ----------------------------------------------------------

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point, double h) {
    if (!(h >= 1e-6 && h <= 1e-3)) throw ContractError("grad_check: h must be in [1e-6, 1e-3]");
    Tensor x = Tensor::from_values(point.shape(), point.values(), true);
    Tensor y = f(x);
    if (y.size() != 1) throw ContractError("grad_check: f must return a scalar");
    y.backward();
    std::vector<double> analytic = x.grad();
    if (analytic.empty()) analytic.assign(x.size(), 0.0);

    double max_err = 0.0;
    std::vector<double>& vals = x.mutable_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const double orig = vals[i];
        vals[i] = orig + h;
        const double fp = f(x).item();
        vals[i] = orig - h;
        const double fm = f(x).item();
        vals[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace eca
