#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "augscale/error.hpp"

namespace augscale {

// Row-major dense matrix; the only tensor shape the tape needs (row vectors
// and scalars are 1xN and 1x1).
template <typename T>
struct Mat {
    int rows = 0, cols = 0;
    std::vector<T> v;

    Mat() = default;
    Mat(int r, int c, T fill = T(0))
        : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

    T& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    T operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return v.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    template <typename U>
    Mat<U> cast() const {
        Mat<U> out(rows, cols);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

// Reverse-mode autodiff over a dynamically recorded graph. Forward values
// are computed eagerly at node creation; backward() walks the record in
// reverse and accumulates into input gradients, so a parameter used several
// times receives the sum of all path contributions.
//
// T = float for training, double for finite-difference gradient checks.
template <typename T>
class Tape {
public:
    using NodeId = int;

    enum class Op {
        constant,
        param,
        matmul,     // (m x k) * (k x n)
        add_row,    // (m x n) + broadcast (1 x n)
        add,        // elementwise, same shape
        scale,      // alpha * x
        gelu,       // exact erf form
        mean_rows,  // (m x n) -> (1 x n)
        col_l2norm, // normalize every column to unit L2 norm
        row_l2norm, // normalize every row to unit L2 norm
        ce_temp,    // mean_i H(target_i, softmax(logits_i / tau)) -> 1 x 1
        sum_all,    // sum of all entries -> 1 x 1
    };

    struct Node {
        Op op;
        NodeId a = -1, b = -1;
        Mat<T> value;
        Mat<T> grad;
        Mat<T> aux;     // ce_temp: row-softmax probabilities
        Mat<T> target;  // ce_temp: constant target distribution
        T scalar = T(0);
        bool needs_grad = false;
    };

    NodeId constant(Mat<T> m) { return push({Op::constant, -1, -1, std::move(m), {}, {}, {}, T(0), false}); }

    NodeId param(Mat<T> m) { return push({Op::param, -1, -1, std::move(m), {}, {}, {}, T(0), true}); }

    NodeId matmul(NodeId a, NodeId b) {
        const Mat<T>& A = val(a);
        const Mat<T>& B = val(b);
        if (A.cols != B.rows) throw NumericalError("matmul shape mismatch");
        Mat<T> C(A.rows, B.cols);
        matmul_acc(A, B, C, false, false);
        return push({Op::matmul, a, b, std::move(C), {}, {}, {}, T(0), needs(a) || needs(b)});
    }

    NodeId add_row(NodeId m, NodeId row) {
        const Mat<T>& M = val(m);
        const Mat<T>& R = val(row);
        if (R.rows != 1 || R.cols != M.cols) throw NumericalError("add_row shape mismatch");
        Mat<T> C = M;
        for (int r = 0; r < C.rows; ++r)
            for (int c = 0; c < C.cols; ++c) C(r, c) += R(0, c);
        return push({Op::add_row, m, row, std::move(C), {}, {}, {}, T(0), needs(m) || needs(row)});
    }

    NodeId add(NodeId a, NodeId b) {
        const Mat<T>& A = val(a);
        const Mat<T>& B = val(b);
        if (!A.same_shape(B)) throw NumericalError("add shape mismatch");
        Mat<T> C = A;
        for (std::size_t i = 0; i < C.size(); ++i) C.v[i] += B.v[i];
        return push({Op::add, a, b, std::move(C), {}, {}, {}, T(0), needs(a) || needs(b)});
    }

    NodeId scale(NodeId a, T alpha) {
        Mat<T> C = val(a);
        for (auto& x : C.v) x *= alpha;
        return push({Op::scale, a, -1, std::move(C), {}, {}, {}, alpha, needs(a)});
    }

    NodeId gelu(NodeId a) {
        Mat<T> C = val(a);
        for (auto& x : C.v) x = gelu_fwd(x);
        return push({Op::gelu, a, -1, std::move(C), {}, {}, {}, T(0), needs(a)});
    }

    NodeId mean_rows(NodeId a) {
        const Mat<T>& A = val(a);
        Mat<T> C(1, A.cols);
        for (int r = 0; r < A.rows; ++r)
            for (int c = 0; c < A.cols; ++c) C(0, c) += A(r, c);
        for (auto& x : C.v) x /= static_cast<T>(A.rows);
        return push({Op::mean_rows, a, -1, std::move(C), {}, {}, {}, T(0), needs(a)});
    }

    NodeId col_l2norm(NodeId a) {
        const Mat<T>& A = val(a);
        Mat<T> C(A.rows, A.cols);
        Mat<T> norms(1, A.cols);
        for (int c = 0; c < A.cols; ++c) {
            T s = T(0);
            for (int r = 0; r < A.rows; ++r) s += A(r, c) * A(r, c);
            norms(0, c) = std::max(std::sqrt(s), static_cast<T>(1e-12));
            for (int r = 0; r < A.rows; ++r) C(r, c) = A(r, c) / norms(0, c);
        }
        return push({Op::col_l2norm, a, -1, std::move(C), {}, std::move(norms), {}, T(0), needs(a)});
    }

    NodeId row_l2norm(NodeId a) {
        const Mat<T>& A = val(a);
        Mat<T> C(A.rows, A.cols);
        Mat<T> norms(A.rows, 1);
        for (int r = 0; r < A.rows; ++r) {
            T s = T(0);
            for (int c = 0; c < A.cols; ++c) s += A(r, c) * A(r, c);
            norms(r, 0) = std::max(std::sqrt(s), static_cast<T>(1e-12));
            for (int c = 0; c < A.cols; ++c) C(r, c) = A(r, c) / norms(r, 0);
        }
        return push({Op::row_l2norm, a, -1, std::move(C), {}, std::move(norms), {}, T(0), needs(a)});
    }

    // Mean over rows of the cross-entropy between target rows (constant
    // probability vectors) and softmax(logits/tau).
    NodeId ce_temp(NodeId logits, Mat<T> target, T tau) {
        const Mat<T>& S = val(logits);
        if (!S.same_shape(target)) throw NumericalError("ce_temp shape mismatch");
        if (!(tau > T(0))) throw NumericalError("ce_temp needs positive temperature");
        Mat<T> probs(S.rows, S.cols);
        T loss = T(0);
        for (int r = 0; r < S.rows; ++r) {
            T mx = S(r, 0);
            for (int c = 1; c < S.cols; ++c) mx = std::max(mx, S(r, c));
            T z = T(0);
            for (int c = 0; c < S.cols; ++c) {
                probs(r, c) = std::exp((S(r, c) - mx) / tau);
                z += probs(r, c);
            }
            for (int c = 0; c < S.cols; ++c) {
                probs(r, c) /= z;
                if (target(r, c) != T(0))
                    loss -= target(r, c) * std::log(std::max(probs(r, c), static_cast<T>(1e-30)));
            }
        }
        Mat<T> out(1, 1);
        out(0, 0) = loss / static_cast<T>(S.rows);
        return push({Op::ce_temp, logits, -1, std::move(out), {}, std::move(probs),
                     std::move(target), tau, needs(logits)});
    }

    NodeId sum_all(NodeId a) {
        const Mat<T>& A = val(a);
        Mat<T> out(1, 1);
        for (auto x : A.v) out(0, 0) += x;
        return push({Op::sum_all, a, -1, std::move(out), {}, {}, {}, T(0), needs(a)});
    }

    const Mat<T>& val(NodeId id) const { return nodes_.at(id).value; }
    const Mat<T>& grad(NodeId id) const {
        const Node& n = nodes_.at(id);
        if (n.grad.size() == 0) throw NumericalError("gradient not computed; run backward first");
        return n.grad;
    }

    // Reverse sweep from a scalar loss node.
    void backward(NodeId loss) {
        Node& top = nodes_.at(loss);
        if (top.value.rows != 1 || top.value.cols != 1)
            throw NumericalError("backward requires a scalar loss node");
        for (Node& n : nodes_)
            if (n.needs_grad) n.grad = Mat<T>(n.value.rows, n.value.cols);
        if (!top.needs_grad) return;  // loss independent of any parameter
        top.grad(0, 0) = T(1);
        for (int id = loss; id >= 0; --id) {
            Node& n = nodes_[id];
            if (!n.needs_grad || n.grad.size() == 0) continue;
            backprop(n);
        }
    }

private:
    std::vector<Node> nodes_;

    NodeId push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }
    bool needs(NodeId id) const { return nodes_.at(id).needs_grad; }

    static T gelu_fwd(T x) {
        return static_cast<T>(0.5) * x * (T(1) + std::erf(x * static_cast<T>(0.7071067811865475)));
    }
    static T gelu_grad(T x) {
        const T cdf = static_cast<T>(0.5) * (T(1) + std::erf(x * static_cast<T>(0.7071067811865475)));
        const T pdf = std::exp(static_cast<T>(-0.5) * x * x) * static_cast<T>(0.3989422804014327);
        return cdf + x * pdf;
    }

    // C (+)= op(A) * op(B); transposition handled by index swizzling
    static void matmul_acc(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, bool ta, bool tb) {
        const int m = ta ? A.cols : A.rows;
        const int k = ta ? A.rows : A.cols;
        const int n = tb ? B.rows : B.cols;
        for (int i = 0; i < m; ++i) {
            for (int p = 0; p < k; ++p) {
                const T a = ta ? A(p, i) : A(i, p);
                if (a == T(0)) continue;
                const T* brow = tb ? nullptr : &B.v[static_cast<std::size_t>(p) * B.cols];
                T* crow = &C.v[static_cast<std::size_t>(i) * C.cols];
                if (!tb) {
                    for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
                } else {
                    for (int j = 0; j < n; ++j) crow[j] += a * B(j, p);
                }
            }
        }
    }

    void backprop(Node& n) {
        auto& g = n.grad;
        switch (n.op) {
            case Op::constant:
            case Op::param:
                break;
            case Op::matmul: {
                Node& A = nodes_[n.a];
                Node& B = nodes_[n.b];
                if (A.needs_grad) matmul_acc(g, B.value, A.grad, false, true);  // g * B^T
                if (B.needs_grad) matmul_acc(A.value, g, B.grad, true, false);  // A^T * g
                break;
            }
            case Op::add_row: {
                Node& M = nodes_[n.a];
                Node& R = nodes_[n.b];
                if (M.needs_grad)
                    for (std::size_t i = 0; i < g.size(); ++i) M.grad.v[i] += g.v[i];
                if (R.needs_grad)
                    for (int r = 0; r < g.rows; ++r)
                        for (int c = 0; c < g.cols; ++c) R.grad(0, c) += g(r, c);
                break;
            }
            case Op::add: {
                for (NodeId src : {n.a, n.b}) {
                    Node& S = nodes_[src];
                    if (S.needs_grad)
                        for (std::size_t i = 0; i < g.size(); ++i) S.grad.v[i] += g.v[i];
                }
                break;
            }
            case Op::scale: {
                Node& A = nodes_[n.a];
                if (A.needs_grad)
                    for (std::size_t i = 0; i < g.size(); ++i) A.grad.v[i] += n.scalar * g.v[i];
                break;
            }
            case Op::gelu: {
                Node& A = nodes_[n.a];
                if (A.needs_grad)
                    for (std::size_t i = 0; i < g.size(); ++i)
                        A.grad.v[i] += gelu_grad(A.value.v[i]) * g.v[i];
                break;
            }
            case Op::mean_rows: {
                Node& A = nodes_[n.a];
                if (A.needs_grad) {
                    const T inv = T(1) / static_cast<T>(A.value.rows);
                    for (int r = 0; r < A.value.rows; ++r)
                        for (int c = 0; c < A.value.cols; ++c) A.grad(r, c) += inv * g(0, c);
                }
                break;
            }
            case Op::col_l2norm: {
                Node& A = nodes_[n.a];
                if (!A.needs_grad) break;
                // d/dw (w/|w|) applied per column: (g - y (y.g)) / |w|
                for (int c = 0; c < n.value.cols; ++c) {
                    T dot = T(0);
                    for (int r = 0; r < n.value.rows; ++r) dot += n.value(r, c) * g(r, c);
                    const T inv = T(1) / n.aux(0, c);
                    for (int r = 0; r < n.value.rows; ++r)
                        A.grad(r, c) += (g(r, c) - n.value(r, c) * dot) * inv;
                }
                break;
            }
            case Op::row_l2norm: {
                Node& A = nodes_[n.a];
                if (!A.needs_grad) break;
                for (int r = 0; r < n.value.rows; ++r) {
                    T dot = T(0);
                    for (int c = 0; c < n.value.cols; ++c) dot += n.value(r, c) * g(r, c);
                    const T inv = T(1) / n.aux(r, 0);
                    for (int c = 0; c < n.value.cols; ++c)
                        A.grad(r, c) += (g(r, c) - n.value(r, c) * dot) * inv;
                }
                break;
            }
            case Op::ce_temp: {
                Node& S = nodes_[n.a];
                if (!S.needs_grad) break;
                const T gv = g(0, 0);
                const T coeff = gv / (n.scalar * static_cast<T>(n.aux.rows));
                for (int r = 0; r < n.aux.rows; ++r)
                    for (int c = 0; c < n.aux.cols; ++c)
                        S.grad(r, c) += coeff * (n.aux(r, c) - n.target(r, c));
                break;
            }
            case Op::sum_all: {
                Node& A = nodes_[n.a];
                if (A.needs_grad)
                    for (std::size_t i = 0; i < A.grad.size(); ++i) A.grad.v[i] += g(0, 0);
                break;
            }
        }
    }
};

// Temperature softmax on a plain vector: p_k = exp((x_k - max)/tau) / sum.
template <typename T>
std::vector<T> softmax_temp(const std::vector<T>& x, T tau) {
    if (!(tau > T(0))) throw NumericalError("softmax needs positive temperature");
    if (x.empty()) throw NumericalError("softmax on empty vector");
    T mx = x[0];
    for (T v : x) mx = std::max(mx, v);
    std::vector<T> p(x.size());
    T z = T(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        p[i] = std::exp((x[i] - mx) / tau);
        z += p[i];
    }
    for (T& v : p) v /= z;
    return p;
}

}  // namespace augscale
