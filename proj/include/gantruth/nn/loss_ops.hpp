#pragma once

#include "gantruth/nn/graph.hpp"

namespace gantruth::nn {

template <typename T>
struct CeResult {
    Var<T> loss;          // scalar; 0 when no pixel is valid
    long valid_count = 0; // pixels that entered the mean
};

// Pixelwise softmax cross-entropy over the channel axis with an ignore id.
// logits: (N, K, H, W), labels: N*H*W ints in [0, K) or == ignore_index.
// Returns the mean over non-ignored pixels.
template <typename T>
CeResult<T> softmax_cross_entropy(const Var<T>& logits, const std::vector<int>& labels,
                                  int ignore_index) {
    const auto& s = logits.shape();
    GT_REQUIRE(s.size() == 4, "softmax_cross_entropy: rank-4 logits required");
    int n = s[0], k = s[1], h = s[2], w = s[3];
    size_t plane = size_t(h) * size_t(w);
    GT_REQUIRE(labels.size() == size_t(n) * plane, "softmax_cross_entropy: label count mismatch");
    long valid = 0;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == ignore_index) continue;
        GT_REQUIRE(labels[i] >= 0 && labels[i] < k, "softmax_cross_entropy: label ", labels[i],
                   " out of range for K=", k);
        ++valid;
    }
    if (valid == 0) return {Var<T>::scalar(T(0)), 0};

    auto labels_copy = std::make_shared<std::vector<int>>(labels);
    Var<T> out = make_op<T>({1}, {logits}, [n, k, plane, labels_copy, ignore_index,
                                            valid](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        T gscale = self.grad[0] / T(valid);
        std::vector<T> probs(size_t(k), T(0));
        for (int i = 0; i < n; ++i) {
            for (size_t px = 0; px < plane; ++px) {
                int y = (*labels_copy)[size_t(i) * plane + px];
                if (y == ignore_index) continue;
                size_t base = size_t(i) * k * plane + px;
                T mx = p.val[base];
                for (int c = 1; c < k; ++c) mx = std::max(mx, p.val[base + size_t(c) * plane]);
                T z = 0;
                for (int c = 0; c < k; ++c) {
                    probs[size_t(c)] = std::exp(p.val[base + size_t(c) * plane] - mx);
                    z += probs[size_t(c)];
                }
                for (int c = 0; c < k; ++c) {
                    T soft = probs[size_t(c)] / z;
                    p.grad[base + size_t(c) * plane] += gscale * (soft - (c == y ? T(1) : T(0)));
                }
            }
        }
    });

    double acc = 0;
    for (int i = 0; i < n; ++i) {
        for (size_t px = 0; px < plane; ++px) {
            int y = labels[size_t(i) * plane + px];
            if (y == ignore_index) continue;
            size_t base = size_t(i) * k * plane + px;
            T mx = logits.value()[base];
            for (int c = 1; c < k; ++c) mx = std::max(mx, logits.value()[base + size_t(c) * plane]);
            double z = 0;
            for (int c = 0; c < k; ++c)
                z += std::exp(double(logits.value()[base + size_t(c) * plane] - mx));
            acc += std::log(z) + double(mx) - double(logits.value()[base + size_t(y) * plane]);
        }
    }
    out.value()[0] = T(acc / double(valid));
    return {out, valid};
}

// Row-wise cross-entropy for (N, K) logits against integer targets; mean over rows.
template <typename T>
Var<T> cross_entropy_rows(const Var<T>& logits, const std::vector<int>& targets) {
    GT_REQUIRE(logits.shape().size() == 2, "cross_entropy_rows: rank-2 logits required");
    int n = logits.shape()[0], k = logits.shape()[1];
    GT_REQUIRE(targets.size() == size_t(n), "cross_entropy_rows: target count mismatch");
    for (int t : targets) GT_REQUIRE(t >= 0 && t < k, "cross_entropy_rows: target out of range");
    auto tg = std::make_shared<std::vector<int>>(targets);
    Var<T> out = make_op<T>({1}, {logits}, [n, k, tg](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        T gscale = self.grad[0] / T(n);
        for (int i = 0; i < n; ++i) {
            const T* row = p.val.data() + size_t(i) * k;
            T mx = row[0];
            for (int c = 1; c < k; ++c) mx = std::max(mx, row[c]);
            T z = 0;
            for (int c = 0; c < k; ++c) z += std::exp(row[c] - mx);
            for (int c = 0; c < k; ++c)
                p.grad[size_t(i) * k + c] +=
                    gscale * (std::exp(row[c] - mx) / z - (c == (*tg)[size_t(i)] ? T(1) : T(0)));
        }
    });
    double acc = 0;
    for (int i = 0; i < n; ++i) {
        const T* row = logits.value().data() + size_t(i) * k;
        T mx = row[0];
        for (int c = 1; c < k; ++c) mx = std::max(mx, row[c]);
        double z = 0;
        for (int c = 0; c < k; ++c) z += std::exp(double(row[c] - mx));
        acc += std::log(z) + double(mx) - double(row[targets[size_t(i)]]);
    }
    out.value()[0] = T(acc / double(n));
    return out;
}

// Elementwise Huber: 0.5*d^2 for |d|<1, |d|-0.5 otherwise. target is constant.
template <typename T>
Var<T> smooth_l1(const Var<T>& pred, const std::vector<T>& target) {
    GT_REQUIRE(pred.numel() == target.size(), "smooth_l1: size mismatch");
    auto tg = std::make_shared<std::vector<T>>(target);
    Var<T> out = make_op<T>(pred.shape(), {pred}, [tg](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (size_t i = 0; i < self.val.size(); ++i) {
            T d = p.val[i] - (*tg)[i];
            T dd = d > T(1) ? T(1) : (d < T(-1) ? T(-1) : d);
            p.grad[i] += self.grad[i] * dd;
        }
    });
    for (size_t i = 0; i < pred.numel(); ++i) {
        T d = pred.value()[i] - target[i];
        T a = std::abs(d);
        out.value()[i] = a < T(1) ? T(0.5) * d * d : a - T(0.5);
    }
    return out;
}

} // namespace gantruth::nn
