#pragma once

#include <Eigen/Core>

#include "gantruth/nn/graph.hpp"

// Spatial ops. Convolutions go through im2col + one GEMM per sample; the
// column buffer is rebuilt in backward instead of captured, trading a little
// CPU for a much smaller live graph.
namespace gantruth::nn {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;  // column-major

inline int conv_out_dim(int in, int k, int stride, int pad) {
    int out = (in + 2 * pad - k) / stride + 1;
    return out;
}

namespace detail {

// col is K x M column-major, K = cin*kh*kw, M = oh*ow; one output pixel per column
template <typename T>
void im2col(const T* x, int cin, int h, int w, int kh, int kw, int stride, int pad, int oh, int ow,
            T* col) {
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            T* dst = col + (size_t(oy) * ow + ox) * size_t(cin) * kh * kw;
            int iy0 = oy * stride - pad;
            int ix0 = ox * stride - pad;
            for (int c = 0; c < cin; ++c) {
                const T* plane = x + size_t(c) * h * w;
                for (int ky = 0; ky < kh; ++ky) {
                    int iy = iy0 + ky;
                    for (int kx = 0; kx < kw; ++kx) {
                        int ix = ix0 + kx;
                        *dst++ = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                     ? plane[size_t(iy) * w + ix]
                                     : T(0);
                    }
                }
            }
        }
    }
}

// scatter-add transpose of im2col
template <typename T>
void col2im_add(const T* col, int cin, int h, int w, int kh, int kw, int stride, int pad, int oh,
                int ow, T* x) {
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const T* src = col + (size_t(oy) * ow + ox) * size_t(cin) * kh * kw;
            int iy0 = oy * stride - pad;
            int ix0 = ox * stride - pad;
            for (int c = 0; c < cin; ++c) {
                T* plane = x + size_t(c) * h * w;
                for (int ky = 0; ky < kh; ++ky) {
                    int iy = iy0 + ky;
                    for (int kx = 0; kx < kw; ++kx) {
                        int ix = ix0 + kx;
                        T v = *src++;
                        if (iy >= 0 && iy < h && ix >= 0 && ix < w) plane[size_t(iy) * w + ix] += v;
                    }
                }
            }
        }
    }
}

} // namespace detail

// x: (N, Cin, H, W), w: (Cout, Cin, kh, kw), b: (Cout) or undefined
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    GT_REQUIRE(xs.size() == 4 && ws.size() == 4, "conv2d: rank-4 input and weight required");
    GT_REQUIRE(xs[1] == ws[1], "conv2d: channel mismatch, input ", xs[1], " vs weight ", ws[1]);
    int n = xs[0], cin = xs[1], h = xs[2], wd = xs[3];
    int cout = ws[0], kh = ws[2], kw = ws[3];
    int oh = conv_out_dim(h, kh, stride, pad);
    int ow = conv_out_dim(wd, kw, stride, pad);
    GT_REQUIRE(oh >= 1 && ow >= 1, "conv2d: input ", h, "x", wd, " too small for kernel ", kh, "x",
               kw, " stride ", stride);
    if (b.defined()) GT_REQUIRE(b.shape() == Shape{cout}, "conv2d: bias shape mismatch");

    const int K = cin * kh * kw;
    const int M = oh * ow;
    std::vector<Var<T>> parents = b.defined() ? std::vector<Var<T>>{x, w, b}
                                              : std::vector<Var<T>>{x, w};
    bool has_bias = b.defined();
    Var<T> out = make_op<T>(
        {n, cout, oh, ow}, parents,
        [n, cin, h, wd, cout, kh, kw, stride, pad, oh, ow, K, M, has_bias](Node<T>& self) {
            auto& px = *self.parents[0];
            auto& pw = *self.parents[1];
            std::vector<T> col(size_t(K) * M);
            std::vector<T> dcol;
            Eigen::Map<const MatRM<T>> W(pw.val.data(), cout, K);
            for (int i = 0; i < n; ++i) {
                Eigen::Map<const MatRM<T>> dOut(self.grad.data() + size_t(i) * cout * M, cout, M);
                if (pw.requires_grad || px.requires_grad) {
                    if (pw.requires_grad) {
                        detail::im2col(px.val.data() + size_t(i) * cin * h * wd, cin, h, wd, kh,
                                       kw, stride, pad, oh, ow, col.data());
                        pw.ensure_grad();
                        Eigen::Map<MatRM<T>> dW(pw.grad.data(), cout, K);
                        Eigen::Map<const Mat<T>> Col(col.data(), K, M);
                        dW.noalias() += dOut * Col.transpose();
                    }
                    if (px.requires_grad) {
                        px.ensure_grad();
                        dcol.assign(size_t(K) * M, T(0));
                        Eigen::Map<Mat<T>> dCol(dcol.data(), K, M);
                        dCol.noalias() = W.transpose() * dOut;
                        detail::col2im_add(dcol.data(), cin, h, wd, kh, kw, stride, pad, oh, ow,
                                           px.grad.data() + size_t(i) * cin * h * wd);
                    }
                }
                if (has_bias) {
                    auto& pb = *self.parents[2];
                    if (pb.requires_grad) {
                        pb.ensure_grad();
                        for (int c = 0; c < cout; ++c) {
                            const T* g = self.grad.data() + (size_t(i) * cout + c) * M;
                            T acc = 0;
                            for (int m = 0; m < M; ++m) acc += g[m];
                            pb.grad[size_t(c)] += acc;
                        }
                    }
                }
            }
        });

    std::vector<T> col(size_t(K) * M);
    Eigen::Map<const MatRM<T>> W(w.value().data(), cout, K);
    for (int i = 0; i < n; ++i) {
        detail::im2col(x.value().data() + size_t(i) * cin * h * wd, cin, h, wd, kh, kw, stride,
                       pad, oh, ow, col.data());
        Eigen::Map<const Mat<T>> Col(col.data(), K, M);
        Eigen::Map<MatRM<T>> Out(out.value().data() + size_t(i) * cout * M, cout, M);
        Out.noalias() = W * Col;
        if (has_bias) {
            for (int c = 0; c < cout; ++c) {
                T bias = b.value()[size_t(c)];
                T* o = out.value().data() + (size_t(i) * cout + c) * M;
                for (int m = 0; m < M; ++m) o[m] += bias;
            }
        }
    }
    return out;
}

// Fractional-stride (transposed) convolution.
// x: (N, Cin, H, W), w: (Cin, Cout, kh, kw); out spatial = (in-1)*stride - 2*pad + k
template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    GT_REQUIRE(xs.size() == 4 && ws.size() == 4, "conv_transpose2d: rank-4 required");
    GT_REQUIRE(xs[1] == ws[0], "conv_transpose2d: channel mismatch");
    int n = xs[0], cin = xs[1], h = xs[2], wd = xs[3];
    int cout = ws[1], kh = ws[2], kw = ws[3];
    int oh = (h - 1) * stride - 2 * pad + kh;
    int ow = (wd - 1) * stride - 2 * pad + kw;
    GT_REQUIRE(oh >= 1 && ow >= 1, "conv_transpose2d: degenerate output size");
    if (b.defined()) GT_REQUIRE(b.shape() == Shape{cout}, "conv_transpose2d: bias shape mismatch");

    const int K = cout * kh * kw;
    const int M = h * wd;  // input pixels play the role of conv output pixels
    std::vector<Var<T>> parents = b.defined() ? std::vector<Var<T>>{x, w, b}
                                              : std::vector<Var<T>>{x, w};
    bool has_bias = b.defined();
    Var<T> out = make_op<T>(
        {n, cout, oh, ow}, parents,
        [n, cin, h, wd, cout, kh, kw, stride, pad, oh, ow, K, M, has_bias](Node<T>& self) {
            auto& px = *self.parents[0];
            auto& pw = *self.parents[1];
            std::vector<T> dycol(size_t(K) * M);
            Eigen::Map<const MatRM<T>> W(pw.val.data(), cin, K);
            for (int i = 0; i < n; ++i) {
                // im2col over the *output* gradient maps convT backward onto conv forward
                detail::im2col(self.grad.data() + size_t(i) * cout * oh * ow, cout, oh, ow, kh,
                               kw, stride, pad, h, wd, dycol.data());
                Eigen::Map<const Mat<T>> dYCol(dycol.data(), K, M);
                if (px.requires_grad) {
                    px.ensure_grad();
                    Eigen::Map<MatRM<T>> dX(px.grad.data() + size_t(i) * cin * M, cin, M);
                    dX.noalias() += W * dYCol;
                }
                if (pw.requires_grad) {
                    pw.ensure_grad();
                    Eigen::Map<const MatRM<T>> X(px.val.data() + size_t(i) * cin * M, cin, M);
                    Eigen::Map<MatRM<T>> dW(pw.grad.data(), cin, K);
                    dW.noalias() += X * dYCol.transpose();
                }
                if (has_bias) {
                    auto& pb = *self.parents[2];
                    if (pb.requires_grad) {
                        pb.ensure_grad();
                        for (int c = 0; c < cout; ++c) {
                            const T* g = self.grad.data() + (size_t(i) * cout + c) * size_t(oh) * ow;
                            T acc = 0;
                            for (size_t m = 0; m < size_t(oh) * ow; ++m) acc += g[m];
                            pb.grad[size_t(c)] += acc;
                        }
                    }
                }
            }
        });

    std::vector<T> col(size_t(K) * M);
    Eigen::Map<const MatRM<T>> W(w.value().data(), cin, K);
    std::fill(out.value().begin(), out.value().end(), T(0));
    for (int i = 0; i < n; ++i) {
        Eigen::Map<const MatRM<T>> X(x.value().data() + size_t(i) * cin * M, cin, M);
        Eigen::Map<Mat<T>> Col(col.data(), K, M);
        Col.noalias() = W.transpose() * X;
        detail::col2im_add(col.data(), cout, oh, ow, kh, kw, stride, pad, h, wd,
                           out.value().data() + size_t(i) * cout * oh * ow);
        if (has_bias) {
            for (int c = 0; c < cout; ++c) {
                T bias = b.value()[size_t(c)];
                T* o = out.value().data() + (size_t(i) * cout + c) * size_t(oh) * ow;
                for (size_t m = 0; m < size_t(oh) * ow; ++m) o[m] += bias;
            }
        }
    }
    return out;
}

// x: (N, F), w: (Out, F), b: (Out) or undefined
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
    GT_REQUIRE(x.shape().size() == 2 && w.shape().size() == 2, "linear: rank-2 required");
    int n = x.shape()[0], f = x.shape()[1], o = w.shape()[0];
    GT_REQUIRE(w.shape()[1] == f, "linear: feature mismatch");
    std::vector<Var<T>> parents = b.defined() ? std::vector<Var<T>>{x, w, b}
                                              : std::vector<Var<T>>{x, w};
    bool has_bias = b.defined();
    Var<T> out = make_op<T>({n, o}, parents, [n, f, o, has_bias](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        Eigen::Map<const MatRM<T>> dY(self.grad.data(), n, o);
        if (px.requires_grad) {
            px.ensure_grad();
            Eigen::Map<const MatRM<T>> W(pw.val.data(), o, f);
            Eigen::Map<MatRM<T>> dX(px.grad.data(), n, f);
            dX.noalias() += dY * W;
        }
        if (pw.requires_grad) {
            pw.ensure_grad();
            Eigen::Map<const MatRM<T>> X(px.val.data(), n, f);
            Eigen::Map<MatRM<T>> dW(pw.grad.data(), o, f);
            dW.noalias() += dY.transpose() * X;
        }
        if (has_bias) {
            auto& pb = *self.parents[2];
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < o; ++j) pb.grad[size_t(j)] += self.grad[size_t(i) * o + j];
            }
        }
    });
    Eigen::Map<const MatRM<T>> X(x.value().data(), n, f);
    Eigen::Map<const MatRM<T>> W(w.value().data(), o, f);
    Eigen::Map<MatRM<T>> Y(out.value().data(), n, o);
    Y.noalias() = X * W.transpose();
    if (has_bias)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < o; ++j) out.value()[size_t(i) * o + j] += b.value()[size_t(j)];
    return out;
}

// 2x2 average pooling, stride 2; spatial dims must be even
template <typename T>
Var<T> avg_pool2x2(const Var<T>& x) {
    const auto& s = x.shape();
    GT_REQUIRE(s.size() == 4, "avg_pool2x2: rank-4 required");
    GT_REQUIRE(s[2] % 2 == 0 && s[3] % 2 == 0, "avg_pool2x2: spatial dims must be even, got ",
               shape_str(s));
    int n = s[0], c = s[1], h = s[2], w = s[3];
    int oh = h / 2, ow = w / 2;
    Var<T> out = make_op<T>({n, c, oh, ow}, {x}, [n, c, h, w, oh, ow](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int ic = 0; ic < n * c; ++ic) {
            const T* g = self.grad.data() + size_t(ic) * oh * ow;
            T* dx = p.grad.data() + size_t(ic) * h * w;
            for (int y = 0; y < oh; ++y)
                for (int xq = 0; xq < ow; ++xq) {
                    T v = g[size_t(y) * ow + xq] * T(0.25);
                    dx[size_t(2 * y) * w + 2 * xq] += v;
                    dx[size_t(2 * y) * w + 2 * xq + 1] += v;
                    dx[size_t(2 * y + 1) * w + 2 * xq] += v;
                    dx[size_t(2 * y + 1) * w + 2 * xq + 1] += v;
                }
        }
    });
    for (int ic = 0; ic < n * c; ++ic) {
        const T* px = x.value().data() + size_t(ic) * h * w;
        T* o = out.value().data() + size_t(ic) * oh * ow;
        for (int y = 0; y < oh; ++y)
            for (int xq = 0; xq < ow; ++xq)
                o[size_t(y) * ow + xq] =
                    (px[size_t(2 * y) * w + 2 * xq] + px[size_t(2 * y) * w + 2 * xq + 1] +
                     px[size_t(2 * y + 1) * w + 2 * xq] + px[size_t(2 * y + 1) * w + 2 * xq + 1]) *
                    T(0.25);
    }
    return out;
}

template <typename T>
Var<T> upsample_nearest2x(const Var<T>& x) {
    const auto& s = x.shape();
    GT_REQUIRE(s.size() == 4, "upsample_nearest2x: rank-4 required");
    int n = s[0], c = s[1], h = s[2], w = s[3];
    Var<T> out = make_op<T>({n, c, 2 * h, 2 * w}, {x}, [n, c, h, w](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int ic = 0; ic < n * c; ++ic) {
            const T* g = self.grad.data() + size_t(ic) * 4 * h * w;
            T* dx = p.grad.data() + size_t(ic) * h * w;
            for (int y = 0; y < h; ++y)
                for (int xq = 0; xq < w; ++xq)
                    dx[size_t(y) * w + xq] += g[size_t(2 * y) * 2 * w + 2 * xq] +
                                              g[size_t(2 * y) * 2 * w + 2 * xq + 1] +
                                              g[size_t(2 * y + 1) * 2 * w + 2 * xq] +
                                              g[size_t(2 * y + 1) * 2 * w + 2 * xq + 1];
        }
    });
    for (int ic = 0; ic < n * c; ++ic) {
        const T* px = x.value().data() + size_t(ic) * h * w;
        T* o = out.value().data() + size_t(ic) * 4 * h * w;
        for (int y = 0; y < h; ++y)
            for (int xq = 0; xq < w; ++xq) {
                T v = px[size_t(y) * w + xq];
                o[size_t(2 * y) * 2 * w + 2 * xq] = v;
                o[size_t(2 * y) * 2 * w + 2 * xq + 1] = v;
                o[size_t(2 * y + 1) * 2 * w + 2 * xq] = v;
                o[size_t(2 * y + 1) * 2 * w + 2 * xq + 1] = v;
            }
    }
    return out;
}

// Nearest-neighbour crop-and-resize of one ROI from one sample.
// Box is [x0, y0, x1, y1) in input pixel coordinates, end-exclusive.
template <typename T>
Var<T> roi_nearest(const Var<T>& x, int sample, int x0, int y0, int x1, int y1, int oh, int ow) {
    const auto& s = x.shape();
    GT_REQUIRE(s.size() == 4, "roi_nearest: rank-4 required");
    GT_REQUIRE(sample >= 0 && sample < s[0], "roi_nearest: sample index out of range");
    GT_REQUIRE(x1 > x0 && y1 > y0, "roi_nearest: malformed box");
    GT_REQUIRE(x0 >= 0 && y0 >= 0 && x1 <= s[3] && y1 <= s[2], "roi_nearest: box out of bounds");
    int c = s[1], h = s[2], w = s[3];
    std::vector<int> sy(size_t(oh), 0), sx(size_t(ow), 0);
    for (int i = 0; i < oh; ++i)
        sy[size_t(i)] = std::min(y1 - 1, y0 + int((double(i) + 0.5) * double(y1 - y0) / oh));
    for (int j = 0; j < ow; ++j)
        sx[size_t(j)] = std::min(x1 - 1, x0 + int((double(j) + 0.5) * double(x1 - x0) / ow));
    Var<T> out = make_op<T>({1, c, oh, ow}, {x}, [sample, c, h, w, oh, ow, sy, sx](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int ch = 0; ch < c; ++ch) {
            T* dx = p.grad.data() + (size_t(sample) * c + ch) * size_t(h) * w;
            const T* g = self.grad.data() + size_t(ch) * oh * ow;
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j)
                    dx[size_t(sy[size_t(i)]) * w + sx[size_t(j)]] += g[size_t(i) * ow + j];
        }
    });
    for (int ch = 0; ch < c; ++ch) {
        const T* px = x.value().data() + (size_t(sample) * c + ch) * size_t(h) * w;
        T* o = out.value().data() + size_t(ch) * oh * ow;
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j)
                o[size_t(i) * ow + j] = px[size_t(sy[size_t(i)]) * w + sx[size_t(j)]];
    }
    return out;
}

} // namespace gantruth::nn
