#pragma once

#include <map>
#include <string>

#include "gantruth/nn/conv.hpp"
#include "gantruth/nn/norm.hpp"
#include "gantruth/rng.hpp"

namespace gantruth::nn {

// Ordered name -> parameter registry. Shared blocks are registered once under
// their own prefix; collecting with dedupe keeps optimizers from double
// stepping aliased tensors.
template <typename T>
struct NamedParams {
    std::vector<std::pair<std::string, Var<T>>> items;

    void add(const std::string& name, const Var<T>& v) {
        for (auto& it : items) {
            if (it.first == name) fail("duplicate parameter name: ", name);
        }
        items.emplace_back(name, v);
    }

    void merge(const NamedParams& other) {
        for (auto& it : other.items) {
            bool dup_ptr = false;
            for (auto& mine : items)
                if (mine.second.id() == it.second.id()) dup_ptr = true;
            if (dup_ptr) continue;  // aliased (shared) tensor already present
            add(it.first, it.second);
        }
    }

    std::vector<Var<T>> vars() const {
        std::vector<Var<T>> v;
        v.reserve(items.size());
        for (auto& it : items) v.push_back(it.second);
        return v;
    }

    size_t count_scalars() const {
        size_t n = 0;
        for (auto& it : items) n += it.second.numel();
        return n;
    }
};

// Convolution kernels: N(0, 0.02); biases zero; norm affine = identity.
template <typename T>
Var<T> gaussian_param(Rng& rng, Shape shape, T stddev = T(0.02)) {
    std::vector<T> data(numel_of(shape));
    for (auto& v : data) v = T(rng.normal()) * stddev;
    return Var<T>::param(std::move(shape), std::move(data));
}

template <typename T>
struct Conv2d {
    Var<T> w, b;
    int stride = 1, pad = 0;

    Conv2d() = default;
    Conv2d(Rng& rng, NamedParams<T>& reg, const std::string& name, int cin, int cout, int k,
           int stride_, int pad_)
        : stride(stride_), pad(pad_) {
        w = gaussian_param<T>(rng, {cout, cin, k, k});
        b = Var<T>::param({cout}, std::vector<T>(size_t(cout), T(0)));
        reg.add(name + ".w", w);
        reg.add(name + ".b", b);
    }

    Var<T> operator()(const Var<T>& x) const { return conv2d(x, w, b, stride, pad); }
};

template <typename T>
struct ConvTranspose2d {
    Var<T> w, b;
    int stride = 2, pad = 1;

    ConvTranspose2d() = default;
    ConvTranspose2d(Rng& rng, NamedParams<T>& reg, const std::string& name, int cin, int cout,
                    int k, int stride_, int pad_)
        : stride(stride_), pad(pad_) {
        w = gaussian_param<T>(rng, {cin, cout, k, k});
        b = Var<T>::param({cout}, std::vector<T>(size_t(cout), T(0)));
        reg.add(name + ".w", w);
        reg.add(name + ".b", b);
    }

    Var<T> operator()(const Var<T>& x) const { return conv_transpose2d(x, w, b, stride, pad); }
};

template <typename T>
struct InstanceNorm2d {
    Var<T> gamma, beta;

    InstanceNorm2d() = default;
    InstanceNorm2d(NamedParams<T>& reg, const std::string& name, int c) {
        gamma = Var<T>::param({c}, std::vector<T>(size_t(c), T(1)));
        beta = Var<T>::param({c}, std::vector<T>(size_t(c), T(0)));
        reg.add(name + ".gamma", gamma);
        reg.add(name + ".beta", beta);
    }

    Var<T> operator()(const Var<T>& x) const { return instance_norm2d(x, gamma, beta); }
};

template <typename T>
struct Linear {
    Var<T> w, b;

    Linear() = default;
    Linear(Rng& rng, NamedParams<T>& reg, const std::string& name, int fin, int fout) {
        w = gaussian_param<T>(rng, {fout, fin});
        b = Var<T>::param({fout}, std::vector<T>(size_t(fout), T(0)));
        reg.add(name + ".w", w);
        reg.add(name + ".b", b);
    }

    Var<T> operator()(const Var<T>& x) const { return linear(x, w, b); }
};

// conv-norm-relu-conv-norm + skip
template <typename T>
struct ResBlock {
    Conv2d<T> c1, c2;
    InstanceNorm2d<T> n1, n2;

    ResBlock() = default;
    ResBlock(Rng& rng, NamedParams<T>& reg, const std::string& name, int c) {
        c1 = Conv2d<T>(rng, reg, name + ".c1", c, c, 3, 1, 1);
        n1 = InstanceNorm2d<T>(reg, name + ".n1", c);
        c2 = Conv2d<T>(rng, reg, name + ".c2", c, c, 3, 1, 1);
        n2 = InstanceNorm2d<T>(reg, name + ".n2", c);
    }

    Var<T> operator()(const Var<T>& x) const {
        Var<T> y = relu(n1(c1(x)));
        y = n2(c2(y));
        return add(x, y);
    }
};

} // namespace gantruth::nn
