#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "shellforge/nn/tensor.hpp"

namespace shellforge::nn {

// Reverse-mode tape node. Graphs are built eagerly by the op functions below;
// backward() walks creation order in reverse, which is a valid topological
// order for any eagerly built graph.
template <class T>
struct Node {
    Tensor<T> val;
    Tensor<T> grad;  // allocated only when requires_grad
    bool requires_grad = false;
    long id = 0;
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::function<void()> backprop;  // scatter this->grad into parents

    explicit Node(Tensor<T> value, bool needs_grad)
        : val(std::move(value)), requires_grad(needs_grad) {
        static long next_id = 0;
        id = ++next_id;
        if (requires_grad) grad = Tensor<T>(val.shape);
    }

    void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), T{0}); }
};

template <class T>
using VarPtr = std::shared_ptr<Node<T>>;

template <class T>
VarPtr<T> make_leaf(Tensor<T> value, bool requires_grad) {
    return std::make_shared<Node<T>>(std::move(value), requires_grad);
}

template <class T>
VarPtr<T> constant(Tensor<T> value) {
    return make_leaf(std::move(value), false);
}

namespace detail {

template <class T>
VarPtr<T> make_op(Tensor<T> value, std::vector<VarPtr<T>> parents) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    auto node = std::make_shared<Node<T>>(std::move(value), needs);
    node->parents = std::move(parents);
    return node;
}

}  // namespace detail

// ---- element-wise ----------------------------------------------------------

template <class T>
VarPtr<T> relu(const VarPtr<T>& x) {
    Tensor<T> out = x->val;
    for (T& a : out.v) a = a > T{0} ? a : T{0};
    auto node = detail::make_op<T>(std::move(out), {x});
    if (node->requires_grad)
        node->backprop = [node_w = std::weak_ptr(node), x] {
            auto node_s = node_w.lock();
            for (std::size_t i = 0; i < x->grad.v.size(); ++i)
                if (x->val.v[i] > T{0}) x->grad.v[i] += node_s->grad.v[i];
        };
    return node;
}

template <class T>
VarPtr<T> sigmoid(const VarPtr<T>& x) {
    Tensor<T> out = x->val;
    for (T& a : out.v) a = T{1} / (T{1} + std::exp(-a));
    auto node = detail::make_op<T>(std::move(out), {x});
    if (node->requires_grad)
        node->backprop = [node_w = std::weak_ptr(node), x] {
            auto node_s = node_w.lock();
            for (std::size_t i = 0; i < x->grad.v.size(); ++i) {
                T s = node_s->val.v[i];
                x->grad.v[i] += node_s->grad.v[i] * s * (T{1} - s);
            }
        };
    return node;
}

template <class T>
VarPtr<T> reshape(const VarPtr<T>& x, std::vector<int> shape) {
    if (Tensor<T>::count(shape) != x->val.numel())
        throw std::invalid_argument("reshape changes element count");
    Tensor<T> out(std::move(shape), x->val.v);
    auto node = detail::make_op<T>(std::move(out), {x});
    if (node->requires_grad)
        node->backprop = [node_w = std::weak_ptr(node), x] {
            auto node_s = node_w.lock();
            for (std::size_t i = 0; i < x->grad.v.size(); ++i)
                x->grad.v[i] += node_s->grad.v[i];
        };
    return node;
}

// ---- dense -----------------------------------------------------------------

// x: [n], w: [m, n], b: [m] -> [m]
template <class T>
VarPtr<T> linear(const VarPtr<T>& x, const VarPtr<T>& w, const VarPtr<T>& b) {
    if (x->val.shape.size() != 1 || w->val.shape.size() != 2 ||
        b->val.shape.size() != 1 || w->val.shape[1] != x->val.shape[0] ||
        w->val.shape[0] != b->val.shape[0])
        throw std::invalid_argument("linear: inconsistent shapes");
    const int n = x->val.shape[0], m = w->val.shape[0];
    Tensor<T> out({m});
    for (int i = 0; i < m; ++i) {
        T acc = b->val.v[i];
        const T* wr = &w->val.v[static_cast<std::size_t>(i) * n];
        for (int j = 0; j < n; ++j) acc += wr[j] * x->val.v[j];
        out.v[i] = acc;
    }
    auto node = detail::make_op<T>(std::move(out), {x, w, b});
    if (node->requires_grad)
        node->backprop = [node_w = std::weak_ptr(node), x, w, b, n, m] {
            auto node_s = node_w.lock();
            for (int i = 0; i < m; ++i) {
                T g = node_s->grad.v[i];
                if (g == T{0}) continue;
                if (b->requires_grad) b->grad.v[i] += g;
                const T* wr = &w->val.v[static_cast<std::size_t>(i) * n];
                T* wg = w->requires_grad
                            ? &w->grad.v[static_cast<std::size_t>(i) * n]
                            : nullptr;
                for (int j = 0; j < n; ++j) {
                    if (wg) wg[j] += g * x->val.v[j];
                    if (x->requires_grad) x->grad.v[j] += g * wr[j];
                }
            }
        };
    return node;
}

// ---- 2D strided convolution ------------------------------------------------

// x: [Cin, H, W], w: [Cout, Cin, k, k], b: [Cout] -> [Cout, H', W']
template <class T>
VarPtr<T> conv2d(const VarPtr<T>& x, const VarPtr<T>& w, const VarPtr<T>& b,
                 int stride, int pad) {
    const auto& xs = x->val.shape;
    const auto& ws = w->val.shape;
    if (xs.size() != 3 || ws.size() != 4 || ws[1] != xs[0] || ws[2] != ws[3])
        throw std::invalid_argument("conv2d: inconsistent shapes");
    const int cin = xs[0], h = xs[1], wd = xs[2];
    const int cout = ws[0], k = ws[2];
    const int oh = (h + 2 * pad - k) / stride + 1;
    const int ow = (wd + 2 * pad - k) / stride + 1;
    if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv2d: empty output");

    auto xat = [&](int c, int i, int j) {
        return x->val.v[(static_cast<std::size_t>(c) * h + i) * wd + j];
    };
    Tensor<T> out({cout, oh, ow});
    for (int co = 0; co < cout; ++co)
        for (int oi = 0; oi < oh; ++oi)
            for (int oj = 0; oj < ow; ++oj) {
                T acc = b->val.v[co];
                for (int ci = 0; ci < cin; ++ci)
                    for (int ki = 0; ki < k; ++ki) {
                        int ii = oi * stride - pad + ki;
                        if (ii < 0 || ii >= h) continue;
                        for (int kj = 0; kj < k; ++kj) {
                            int jj = oj * stride - pad + kj;
                            if (jj < 0 || jj >= wd) continue;
                            acc += xat(ci, ii, jj) *
                                   w->val.v[((static_cast<std::size_t>(co) * cin +
                                              ci) *
                                                 k +
                                             ki) *
                                                k +
                                            kj];
                        }
                    }
                out.v[(static_cast<std::size_t>(co) * oh + oi) * ow + oj] = acc;
            }

    auto node = detail::make_op<T>(std::move(out), {x, w, b});
    if (node->requires_grad)
        node->backprop = [node_w = std::weak_ptr(node), x, w, b, stride, pad,
                          cin, h, wd, cout, k, oh, ow] {
            auto node_s = node_w.lock();
            for (int co = 0; co < cout; ++co)
                for (int oi = 0; oi < oh; ++oi)
                    for (int oj = 0; oj < ow; ++oj) {
                        T g = node_s->grad
                                  .v[(static_cast<std::size_t>(co) * oh + oi) * ow +
                                     oj];
                        if (g == T{0}) continue;
                        if (b->requires_grad) b->grad.v[co] += g;
                        for (int ci = 0; ci < cin; ++ci)
                            for (int ki = 0; ki < k; ++ki) {
                                int ii = oi * stride - pad + ki;
                                if (ii < 0 || ii >= h) continue;
                                for (int kj = 0; kj < k; ++kj) {
                                    int jj = oj * stride - pad + kj;
                                    if (jj < 0 || jj >= wd) continue;
                                    std::size_t xi =
                                        (static_cast<std::size_t>(ci) * h + ii) *
                                            wd +
                                        jj;
                                    std::size_t wi =
                                        ((static_cast<std::size_t>(co) * cin + ci) *
                                             k +
                                         ki) *
                                            k +
                                        kj;
                                    if (w->requires_grad)
                                        w->grad.v[wi] += g * x->val.v[xi];
                                    if (x->requires_grad)
                                        x->grad.v[xi] += g * w->val.v[wi];
                                }
                            }
                    }
        };
    return node;
}

// ---- 3D transposed convolution --------------------------------------------

// x: [Cin, D, D, D], w: [Cin, Cout, k, k, k], b: [Cout] -> [Cout, D', D', D']
// with D' = (D - 1) * stride - 2 * pad + k.
template <class T>
VarPtr<T> conv_transpose3d(const VarPtr<T>& x, const VarPtr<T>& w,
                           const VarPtr<T>& b, int stride, int pad) {
    const auto& xs = x->val.shape;
    const auto& ws = w->val.shape;
    if (xs.size() != 4 || ws.size() != 5 || ws[0] != xs[0] ||
        xs[1] != xs[2] || xs[2] != xs[3] || ws[2] != ws[3] || ws[3] != ws[4])
        throw std::invalid_argument("conv_transpose3d: inconsistent shapes");
    const int cin = xs[0], d = xs[1];
    const int cout = ws[1], k = ws[2];
    const int od = (d - 1) * stride - 2 * pad + k;
    if (od <= 0) throw std::invalid_argument("conv_transpose3d: empty output");

    Tensor<T> out({cout, od, od, od});
    const std::size_t od2 = static_cast<std::size_t>(od) * od;
    for (int co = 0; co < cout; ++co) {
        T bias = b->val.v[co];
        T* ov = &out.v[static_cast<std::size_t>(co) * od * od2];
        for (std::size_t i = 0; i < od * od2; ++i) ov[i] = bias;
    }
    for (int ci = 0; ci < cin; ++ci)
        for (int iz = 0; iz < d; ++iz)
            for (int iy = 0; iy < d; ++iy)
                for (int ix = 0; ix < d; ++ix) {
                    T xv = x->val.v[((static_cast<std::size_t>(ci) * d + iz) * d +
                                     iy) *
                                        d +
                                    ix];
                    if (xv == T{0}) continue;
                    for (int co = 0; co < cout; ++co)
                        for (int kz = 0; kz < k; ++kz) {
                            int oz = iz * stride - pad + kz;
                            if (oz < 0 || oz >= od) continue;
                            for (int ky = 0; ky < k; ++ky) {
                                int oy = iy * stride - pad + ky;
                                if (oy < 0 || oy >= od) continue;
                                for (int kx = 0; kx < k; ++kx) {
                                    int ox = ix * stride - pad + kx;
                                    if (ox < 0 || ox >= od) continue;
                                    out.v[((static_cast<std::size_t>(co) * od +
                                            oz) *
                                               od +
                                           oy) *
                                              od +
                                          ox] +=
                                        xv *
                                        w->val.v[(((static_cast<std::size_t>(ci) *
                                                        cout +
                                                    co) *
                                                       k +
                                                   kz) *
                                                      k +
                                                  ky) *
                                                     k +
                                                 kx];
                                }
                            }
                        }
                }

    auto node = detail::make_op<T>(std::move(out), {x, w, b});
    if (node->requires_grad)
        node->backprop = [node_w = std::weak_ptr(node), x, w, b, stride, pad,
                          cin, d, cout, k, od] {
            auto node_s = node_w.lock();
            if (b->requires_grad) {
                const std::size_t plane = static_cast<std::size_t>(od) * od * od;
                for (int co = 0; co < cout; ++co) {
                    T acc{0};
                    const T* gv = &node_s->grad.v[co * plane];
                    for (std::size_t i = 0; i < plane; ++i) acc += gv[i];
                    b->grad.v[co] += acc;
                }
            }
            for (int ci = 0; ci < cin; ++ci)
                for (int iz = 0; iz < d; ++iz)
                    for (int iy = 0; iy < d; ++iy)
                        for (int ix = 0; ix < d; ++ix) {
                            std::size_t xi =
                                ((static_cast<std::size_t>(ci) * d + iz) * d +
                                 iy) *
                                    d +
                                ix;
                            T xv = x->val.v[xi];
                            T xg{0};
                            for (int co = 0; co < cout; ++co)
                                for (int kz = 0; kz < k; ++kz) {
                                    int oz = iz * stride - pad + kz;
                                    if (oz < 0 || oz >= od) continue;
                                    for (int ky = 0; ky < k; ++ky) {
                                        int oy = iy * stride - pad + ky;
                                        if (oy < 0 || oy >= od) continue;
                                        for (int kx = 0; kx < k; ++kx) {
                                            int ox = ix * stride - pad + kx;
                                            if (ox < 0 || ox >= od) continue;
                                            std::size_t oi =
                                                ((static_cast<std::size_t>(co) *
                                                      od +
                                                  oz) *
                                                     od +
                                                 oy) *
                                                    od +
                                                ox;
                                            std::size_t wi =
                                                (((static_cast<std::size_t>(ci) *
                                                       cout +
                                                   co) *
                                                      k +
                                                  kz) *
                                                     k +
                                                 ky) *
                                                    k +
                                                kx;
                                            T g = node_s->grad.v[oi];
                                            if (w->requires_grad)
                                                w->grad.v[wi] += g * xv;
                                            xg += g * w->val.v[wi];
                                        }
                                    }
                                }
                            if (x->requires_grad) x->grad.v[xi] += xg;
                        }
        };
    return node;
}

// ---- losses and reductions -------------------------------------------------

// Sum of squared differences against a constant target.
template <class T>
VarPtr<T> l2_loss(const VarPtr<T>& pred, const Tensor<T>& truth) {
    if (!pred->val.same_shape(truth))
        throw std::invalid_argument(
            "l2_loss: shape mismatch " + Tensor<T>::shape_str(pred->val.shape) +
            " vs " + Tensor<T>::shape_str(truth.shape));
    T acc{0};
    for (std::size_t i = 0; i < truth.v.size(); ++i) {
        T d = pred->val.v[i] - truth.v[i];
        acc += d * d;
    }
    auto node = detail::make_op<T>(Tensor<T>({1}, {acc}), {pred});
    if (node->requires_grad)
        node->backprop = [node_w = std::weak_ptr(node), pred, truth] {
            auto node_s = node_w.lock();
            T g = node_s->grad.v[0];
            for (std::size_t i = 0; i < truth.v.size(); ++i)
                pred->grad.v[i] += g * T{2} * (pred->val.v[i] - truth.v[i]);
        };
    return node;
}

// Binary cross entropy with epsilon clamping of the prediction.
template <class T>
VarPtr<T> bce_loss(const VarPtr<T>& pred, const Tensor<T>& truth) {
    if (!pred->val.same_shape(truth))
        throw std::invalid_argument(
            "bce_loss: shape mismatch " + Tensor<T>::shape_str(pred->val.shape) +
            " vs " + Tensor<T>::shape_str(truth.shape));
    const T eps = static_cast<T>(1e-7);
    T acc{0};
    for (std::size_t i = 0; i < truth.v.size(); ++i) {
        T f = std::clamp(pred->val.v[i], eps, T{1} - eps);
        T y = truth.v[i];
        acc -= y * std::log(f) + (T{1} - y) * std::log(T{1} - f);
    }
    auto node = detail::make_op<T>(Tensor<T>({1}, {acc}), {pred});
    if (node->requires_grad)
        node->backprop = [node_w = std::weak_ptr(node), pred, truth, eps] {
            auto node_s = node_w.lock();
            T g = node_s->grad.v[0];
            for (std::size_t i = 0; i < truth.v.size(); ++i) {
                T raw = pred->val.v[i];
                if (raw < eps || raw > T{1} - eps) continue;  // clamped: flat
                T y = truth.v[i];
                pred->grad.v[i] += g * (-(y / raw) + (T{1} - y) / (T{1} - raw));
            }
        };
    return node;
}

// Weighted sum of scalar nodes: sum_i weights[i] * terms[i].
template <class T>
VarPtr<T> weighted_sum(const std::vector<VarPtr<T>>& terms,
                       const std::vector<T>& weights) {
    if (terms.empty() || terms.size() != weights.size())
        throw std::invalid_argument("weighted_sum: size mismatch");
    T acc{0};
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i]->val.numel() != 1)
            throw std::invalid_argument("weighted_sum expects scalar terms");
        acc += weights[i] * terms[i]->val.v[0];
    }
    auto node = detail::make_op<T>(Tensor<T>({1}, {acc}), terms);
    if (node->requires_grad)
        node->backprop = [node_w = std::weak_ptr(node), terms, weights] {
            auto node_s = node_w.lock();
            for (std::size_t i = 0; i < terms.size(); ++i)
                if (terms[i]->requires_grad)
                    terms[i]->grad.v[0] += node_s->grad.v[0] * weights[i];
        };
    return node;
}

// Sum of squares of a tensor node (used by tests and weight decay).
template <class T>
VarPtr<T> sum_squares(const VarPtr<T>& x) {
    T acc{0};
    for (T a : x->val.v) acc += a * a;
    auto node = detail::make_op<T>(Tensor<T>({1}, {acc}), {x});
    if (node->requires_grad)
        node->backprop = [node_w = std::weak_ptr(node), x] {
            auto node_s = node_w.lock();
            T g = node_s->grad.v[0];
            for (std::size_t i = 0; i < x->val.v.size(); ++i)
                x->grad.v[i] += g * T{2} * x->val.v[i];
        };
    return node;
}

// ---- reverse pass ----------------------------------------------------------

// Accumulates gradients of a scalar loss into every reachable node that
// requires them. Leaf gradients are not cleared here; callers zero them at
// step boundaries so batches can accumulate.
template <class T>
void backward(const VarPtr<T>& loss) {
    if (!loss) throw std::invalid_argument("backward: null node");
    if (loss->val.numel() != 1)
        throw std::invalid_argument("backward expects a scalar loss");
    if (!loss->requires_grad)
        throw std::invalid_argument(
            "backward: loss does not depend on any trainable tensor");

    // Gather reachable nodes; creation ids give a topological order.
    std::vector<VarPtr<T>> nodes;
    std::unordered_set<const Node<T>*> seen;
    std::vector<VarPtr<T>> stack{loss};
    while (!stack.empty()) {
        VarPtr<T> n = stack.back();
        stack.pop_back();
        if (!seen.insert(n.get()).second) continue;
        nodes.push_back(n);
        for (const auto& p : n->parents)
            if (p->requires_grad) stack.push_back(p);
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const VarPtr<T>& a, const VarPtr<T>& b) { return a->id > b->id; });

    // Interior nodes start from zero; leaves keep accumulating.
    for (const auto& n : nodes)
        if (n->backprop) n->zero_grad();
    loss->grad.v[0] = T{1};
    for (const auto& n : nodes)
        if (n->backprop) n->backprop();
}

}  // namespace shellforge::nn
