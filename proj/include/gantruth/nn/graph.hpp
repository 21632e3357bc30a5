#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <unordered_set>
#include <vector>

#include "gantruth/common.hpp"

// Reverse-mode autodiff on dense tensors. Single-threaded by design: graph
// construction order gives node ids, and id order is a valid topological
// order because every op creates its node after its parents exist.
namespace gantruth::nn {

using Shape = std::vector<int>;

inline size_t numel_of(const Shape& s) {
    size_t n = 1;
    for (int d : s) n *= size_t(d);
    return n;
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

inline std::string shape_str(const Shape& s) {
    std::string r = "(";
    for (size_t i = 0; i < s.size(); ++i) r += (i ? "," : "") + std::to_string(s[i]);
    return r + ")";
}

// Grad recording toggle. Inference paths (translation export, estimator
// evaluation, discriminator fakes) run under NoGradGuard.
struct GradMode {
    static bool& enabled() {
        static bool on = true;
        return on;
    }
};

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(GradMode::enabled()) { GradMode::enabled() = false; }
    ~NoGradGuard() { GradMode::enabled() = prev; }
};

template <typename T>
struct Node {
    uint64_t id = 0;
    Shape shape;
    std::vector<T> val;
    std::vector<T> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    bool trainable = false;  // set only on parameter leaves; frozen params clear it
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::function<void(Node<T>&)> back;

    size_t numel() const { return val.size(); }
    void ensure_grad() {
        if (grad.size() != val.size()) grad.assign(val.size(), T(0));
    }
};

template <typename T>
uint64_t next_node_id() {
    static uint64_t counter = 0;
    return ++counter;
}

// Value-semantics handle over a graph node.
template <typename T>
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node<T>> n) : n_(std::move(n)) {}

    static Var constant(Shape shape, std::vector<T> data) {
        auto n = std::make_shared<Node<T>>();
        n->id = next_node_id<T>();
        n->shape = std::move(shape);
        n->val = std::move(data);
        GT_REQUIRE(n->val.size() == numel_of(n->shape), "tensor data size does not match shape ",
                   shape_str(n->shape));
        return Var(n);
    }

    static Var zeros(Shape shape) {
        return constant(shape, std::vector<T>(numel_of(shape), T(0)));
    }

    static Var full(Shape shape, T v) {
        return constant(shape, std::vector<T>(numel_of(shape), v));
    }

    static Var scalar(T v) { return constant({1}, {v}); }

    static Var param(Shape shape, std::vector<T> data) {
        Var p = constant(std::move(shape), std::move(data));
        p.n_->requires_grad = true;
        p.n_->trainable = true;
        p.n_->ensure_grad();
        return p;
    }

    bool defined() const { return n_ != nullptr; }
    Node<T>& node() const { return *n_; }
    const std::shared_ptr<Node<T>>& ptr() const { return n_; }
    uint64_t id() const { return n_->id; }
    const Shape& shape() const { return n_->shape; }
    size_t numel() const { return n_->numel(); }
    std::vector<T>& value() const { return n_->val; }
    std::vector<T>& grad() const { return n_->grad; }
    bool requires_grad() const { return n_ && n_->requires_grad; }
    bool trainable() const { return n_ && n_->trainable; }

    T item() const {
        GT_REQUIRE(n_ && n_->numel() == 1, "item() requires a scalar tensor");
        return n_->val[0];
    }

    void freeze() const {
        n_->trainable = false;
        n_->requires_grad = false;
        n_->grad.clear();
        n_->grad.shrink_to_fit();
    }

    void zero_grad() const {
        if (n_->requires_grad) {
            n_->ensure_grad();
            std::fill(n_->grad.begin(), n_->grad.end(), T(0));
        }
    }

private:
    std::shared_ptr<Node<T>> n_;
};

// -- op plumbing --------------------------------------------------------

template <typename T>
Var<T> make_op(Shape shape, std::vector<Var<T>> parents, std::function<void(Node<T>&)> back) {
    auto n = std::make_shared<Node<T>>();
    n->id = next_node_id<T>();
    n->shape = std::move(shape);
    n->val.resize(numel_of(n->shape));
    bool track = false;
    if (GradMode::enabled()) {
        for (const auto& p : parents)
            if (p.requires_grad()) track = true;
    }
    if (track) {
        n->requires_grad = true;
        n->ensure_grad();
        n->back = std::move(back);
        for (auto& p : parents) n->parents.push_back(p.ptr());
    }
    return Var<T>(n);
}

// Runs the tape. Root must be scalar. Parameters keep accumulating into
// .grad until zero_grad(), matching the usual optimizer protocol.
template <typename T>
void backward(const Var<T>& root) {
    GT_REQUIRE(root.numel() == 1, "backward() root must be scalar, got ", shape_str(root.shape()));
    if (!root.requires_grad()) return;
    root.node().ensure_grad();
    root.grad()[0] += T(1);

    std::vector<Node<T>*> reachable;
    std::unordered_set<const Node<T>*> seen;
    std::vector<Node<T>*> stack{&root.node()};
    seen.insert(&root.node());
    while (!stack.empty()) {
        Node<T>* n = stack.back();
        stack.pop_back();
        reachable.push_back(n);
        for (auto& p : n->parents) {
            if (p->requires_grad && !seen.count(p.get())) {
                seen.insert(p.get());
                stack.push_back(p.get());
            }
        }
    }
    std::sort(reachable.begin(), reachable.end(),
              [](const Node<T>* a, const Node<T>* b) { return a->id > b->id; });
    for (Node<T>* n : reachable) {
        if (n->back) n->back(*n);
    }
}

// -- elementwise ops -----------------------------------------------------

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    GT_REQUIRE(same_shape(a.shape(), b.shape()), "add: shape mismatch ", shape_str(a.shape()),
               " vs ", shape_str(b.shape()));
    Var<T> out = make_op<T>(a.shape(), {a, b}, [](Node<T>& self) {
        for (int k = 0; k < 2; ++k) {
            auto& p = *self.parents[size_t(k)];
            if (!p.requires_grad) continue;
            p.ensure_grad();
            for (size_t i = 0; i < self.val.size(); ++i) p.grad[i] += self.grad[i];
        }
    });
    for (size_t i = 0; i < out.numel(); ++i) out.value()[i] = a.value()[i] + b.value()[i];
    return out;
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    GT_REQUIRE(same_shape(a.shape(), b.shape()), "sub: shape mismatch");
    Var<T> out = make_op<T>(a.shape(), {a, b}, [](Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (size_t i = 0; i < self.val.size(); ++i) pa.grad[i] += self.grad[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (size_t i = 0; i < self.val.size(); ++i) pb.grad[i] -= self.grad[i];
        }
    });
    for (size_t i = 0; i < out.numel(); ++i) out.value()[i] = a.value()[i] - b.value()[i];
    return out;
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    GT_REQUIRE(same_shape(a.shape(), b.shape()), "mul: shape mismatch");
    Var<T> out = make_op<T>(a.shape(), {a, b}, [](Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (size_t i = 0; i < self.val.size(); ++i) pa.grad[i] += self.grad[i] * pb.val[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (size_t i = 0; i < self.val.size(); ++i) pb.grad[i] += self.grad[i] * pa.val[i];
        }
    });
    for (size_t i = 0; i < out.numel(); ++i) out.value()[i] = a.value()[i] * b.value()[i];
    return out;
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
    Var<T> out = make_op<T>(a.shape(), {a}, [s](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (size_t i = 0; i < self.val.size(); ++i) p.grad[i] += self.grad[i] * s;
    });
    for (size_t i = 0; i < out.numel(); ++i) out.value()[i] = a.value()[i] * s;
    return out;
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
    Var<T> out = make_op<T>(a.shape(), {a}, [](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (size_t i = 0; i < self.val.size(); ++i) p.grad[i] += self.grad[i];
    });
    for (size_t i = 0; i < out.numel(); ++i) out.value()[i] = a.value()[i] + s;
    return out;
}

template <typename T>
Var<T> neg(const Var<T>& a) { return scale(a, T(-1)); }

namespace detail {
// shared skeleton for unary elementwise ops: dval = f(val), dgrad via g(x, y)
template <typename T, typename F, typename G>
Var<T> unary(const Var<T>& a, F f, G dfdx_from_xy) {
    Var<T> out = make_op<T>(a.shape(), {a}, [dfdx_from_xy](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (size_t i = 0; i < self.val.size(); ++i)
            p.grad[i] += self.grad[i] * dfdx_from_xy(p.val[i], self.val[i]);
    });
    for (size_t i = 0; i < out.numel(); ++i) out.value()[i] = f(a.value()[i]);
    return out;
}
} // namespace detail

template <typename T>
Var<T> vabs(const Var<T>& a) {
    return detail::unary(a, [](T x) { return std::abs(x); },
                         [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Var<T> vlog(const Var<T>& a) {
    return detail::unary(a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Var<T> vexp(const Var<T>& a) {
    return detail::unary(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> square(const Var<T>& a) {
    return detail::unary(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
Var<T> vtanh(const Var<T>& a) {
    return detail::unary(a, [](T x) { return std::tanh(x); },
                         [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
    return detail::unary(a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
                         [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
    return detail::unary(a, [](T x) { return x > T(0) ? x : T(0); },
                         [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope) {
    return detail::unary(a, [slope](T x) { return x > T(0) ? x : slope * x; },
                         [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

// log(1+e^x), stable; strictly positive output
template <typename T>
Var<T> softplus(const Var<T>& a) {
    return detail::unary(
        a,
        [](T x) { return x > T(20) ? x : std::log1p(std::exp(std::min(x, T(20)))); },
        [](T x, T) { return T(1) / (T(1) + std::exp(-x)); });
}

// Gradient passes only where the input is strictly inside [lo, hi].
template <typename T>
Var<T> clamp(const Var<T>& a, T lo, T hi) {
    return detail::unary(a, [lo, hi](T x) { return std::min(std::max(x, lo), hi); },
                         [lo, hi](T x, T) { return (x > lo && x < hi) ? T(1) : T(0); });
}

// -- reductions ----------------------------------------------------------

template <typename T>
Var<T> sum(const Var<T>& a) {
    Var<T> out = make_op<T>({1}, {a}, [](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        T g = self.grad[0];
        for (size_t i = 0; i < p.val.size(); ++i) p.grad[i] += g;
    });
    T acc = 0;
    for (size_t i = 0; i < a.numel(); ++i) acc += a.value()[i];
    out.value()[0] = acc;
    return out;
}

template <typename T>
Var<T> mean(const Var<T>& a) {
    GT_REQUIRE(a.numel() > 0, "mean of empty tensor");
    return scale(sum(a), T(1) / T(a.numel()));
}

// -- shape ops -----------------------------------------------------------

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
    GT_REQUIRE(numel_of(shape) == a.numel(), "reshape: element count mismatch");
    Var<T> out = make_op<T>(std::move(shape), {a}, [](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (size_t i = 0; i < self.val.size(); ++i) p.grad[i] += self.grad[i];
    });
    out.value() = a.value();
    return out;
}

// NCHW channel concatenation
template <typename T>
Var<T> concat_ch(const Var<T>& a, const Var<T>& b) {
    GT_REQUIRE(a.shape().size() == 4 && b.shape().size() == 4, "concat_ch: rank-4 only");
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    GT_REQUIRE(sa[0] == sb[0] && sa[2] == sb[2] && sa[3] == sb[3],
               "concat_ch: incompatible shapes ", shape_str(sa), " vs ", shape_str(sb));
    int n = sa[0], ca = sa[1], cb = sb[1], h = sa[2], w = sa[3];
    size_t plane = size_t(h) * size_t(w);
    Var<T> out = make_op<T>({n, ca + cb, h, w}, {a, b}, [n, ca, cb, plane](Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        for (int i = 0; i < n; ++i) {
            const T* g = self.grad.data() + size_t(i) * size_t(ca + cb) * plane;
            if (pa.requires_grad) {
                pa.ensure_grad();
                T* ga = pa.grad.data() + size_t(i) * size_t(ca) * plane;
                for (size_t k = 0; k < size_t(ca) * plane; ++k) ga[k] += g[k];
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                T* gb = pb.grad.data() + size_t(i) * size_t(cb) * plane;
                for (size_t k = 0; k < size_t(cb) * plane; ++k) gb[k] += g[size_t(ca) * plane + k];
            }
        }
    });
    for (int i = 0; i < n; ++i) {
        T* dst = out.value().data() + size_t(i) * size_t(ca + cb) * plane;
        std::copy_n(a.value().data() + size_t(i) * size_t(ca) * plane, size_t(ca) * plane, dst);
        std::copy_n(b.value().data() + size_t(i) * size_t(cb) * plane, size_t(cb) * plane,
                    dst + size_t(ca) * plane);
    }
    return out;
}

// Cuts the tape: same values, no gradient path.
template <typename T>
Var<T> detach(const Var<T>& a) {
    return Var<T>::constant(a.shape(), a.value());
}

template <typename T>
bool all_finite(const Var<T>& a) {
    for (T v : a.value())
        if (!std::isfinite(double(v))) return false;
    return true;
}

} // namespace gantruth::nn
