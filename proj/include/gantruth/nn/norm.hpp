#pragma once

#include "gantruth/nn/graph.hpp"

namespace gantruth::nn {

// Instance normalization: each (sample, channel) plane is standardized
// independently, so batch-size-1 training is well defined. gamma/beta are
// per-channel, shared across the batch.
template <typename T>
Var<T> instance_norm2d(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5)) {
    const auto& s = x.shape();
    GT_REQUIRE(s.size() == 4, "instance_norm2d: rank-4 required");
    int n = s[0], c = s[1], h = s[2], w = s[3];
    GT_REQUIRE(gamma.shape() == Shape{c} && beta.shape() == Shape{c},
               "instance_norm2d: affine parameter shape mismatch");
    size_t plane = size_t(h) * size_t(w);
    GT_REQUIRE(plane >= 2, "instance_norm2d: plane must have at least 2 elements");

    // cache per-(n,c) inv std and normalized values for backward
    auto xhat = std::make_shared<std::vector<T>>(x.numel());
    auto istd = std::make_shared<std::vector<T>>(size_t(n) * c);

    Var<T> out = make_op<T>(s, {x, gamma, beta}, [n, c, plane, xhat, istd](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        for (int i = 0; i < n; ++i) {
            for (int ch = 0; ch < c; ++ch) {
                size_t base = (size_t(i) * c + ch) * plane;
                const T* g = self.grad.data() + base;
                const T* xh = xhat->data() + base;
                T gam = pg.val[size_t(ch)];
                if (pg.requires_grad || pb.requires_grad) {
                    T dg = 0, db = 0;
                    for (size_t k = 0; k < plane; ++k) {
                        dg += g[k] * xh[k];
                        db += g[k];
                    }
                    if (pg.requires_grad) {
                        pg.ensure_grad();
                        pg.grad[size_t(ch)] += dg;
                    }
                    if (pb.requires_grad) {
                        pb.ensure_grad();
                        pb.grad[size_t(ch)] += db;
                    }
                }
                if (px.requires_grad) {
                    px.ensure_grad();
                    T* dx = px.grad.data() + base;
                    T inv = (*istd)[size_t(i) * c + ch];
                    T mean_dy = 0, mean_dyxh = 0;
                    for (size_t k = 0; k < plane; ++k) {
                        mean_dy += g[k];
                        mean_dyxh += g[k] * xh[k];
                    }
                    mean_dy /= T(plane);
                    mean_dyxh /= T(plane);
                    for (size_t k = 0; k < plane; ++k)
                        dx[k] += gam * inv * (g[k] - mean_dy - xh[k] * mean_dyxh);
                }
            }
        }
    });

    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            size_t base = (size_t(i) * c + ch) * plane;
            const T* px = x.value().data() + base;
            T mu = 0;
            for (size_t k = 0; k < plane; ++k) mu += px[k];
            mu /= T(plane);
            T var = 0;
            for (size_t k = 0; k < plane; ++k) {
                T d = px[k] - mu;
                var += d * d;
            }
            var /= T(plane);
            T inv = T(1) / std::sqrt(var + eps);
            (*istd)[size_t(i) * c + ch] = inv;
            T gam = gamma.value()[size_t(ch)];
            T bet = beta.value()[size_t(ch)];
            T* xh = xhat->data() + base;
            T* o = out.value().data() + base;
            for (size_t k = 0; k < plane; ++k) {
                xh[k] = (px[k] - mu) * inv;
                o[k] = gam * xh[k] + bet;
            }
        }
    }
    return out;
}

} // namespace gantruth::nn
