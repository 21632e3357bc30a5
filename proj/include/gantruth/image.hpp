#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gantruth/common.hpp"

namespace gantruth {

// 8-bit interleaved image, ch in {1, 3}
struct ImageU8 {
    int h = 0, w = 0, ch = 0;
    std::vector<uint8_t> px;

    ImageU8() = default;
    ImageU8(int h_, int w_, int ch_) : h(h_), w(w_), ch(ch_), px(size_t(h_) * w_ * ch_, 0) {}
    uint8_t& at(int y, int x, int c) { return px[(size_t(y) * w + x) * ch + c]; }
    uint8_t at(int y, int x, int c) const { return px[(size_t(y) * w + x) * ch + c]; }
};

// 16-bit single channel
struct Image16 {
    int h = 0, w = 0;
    std::vector<uint16_t> px;

    Image16() = default;
    Image16(int h_, int w_) : h(h_), w(w_), px(size_t(h_) * w_, 0) {}
    uint16_t& at(int y, int x) { return px[size_t(y) * w + x]; }
    uint16_t at(int y, int x) const { return px[size_t(y) * w + x]; }
};

// Rank-4 (batch, channel=3, height, width) float32 batch in [-1, 1]; the
// currency of every network and loss in the project.
struct ImageBatch {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    ImageBatch() = default;
    ImageBatch(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), data(size_t(n_) * c_ * h_ * w_, 0.f) {}

    float& at(int i, int cc, int y, int x) {
        return data[((size_t(i) * c + cc) * h + y) * w + x];
    }
    float at(int i, int cc, int y, int x) const {
        return data[((size_t(i) * c + cc) * h + y) * w + x];
    }
};

struct LabelMap {
    int h = 0, w = 0;
    std::vector<uint8_t> ids;

    LabelMap() = default;
    LabelMap(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), ids(size_t(h_) * w_, fill) {}
    uint8_t& at(int y, int x) { return ids[size_t(y) * w + x]; }
    uint8_t at(int y, int x) const { return ids[size_t(y) * w + x]; }
};

struct DisparityMap {
    int h = 0, w = 0;
    std::vector<float> d;

    DisparityMap() = default;
    DisparityMap(int h_, int w_) : h(h_), w(w_), d(size_t(h_) * w_, 0.f) {}
    float& at(int y, int x) { return d[size_t(y) * w + x]; }
    float at(int y, int x) const { return d[size_t(y) * w + x]; }
};

// u8 [0,255] <-> float [-1,1]
inline float u8_to_signed(uint8_t v) { return float(v) / 127.5f - 1.f; }

inline uint8_t signed_to_u8(float v) {
    float x = (v + 1.f) * 127.5f;
    if (x < 0.f) x = 0.f;
    if (x > 255.f) x = 255.f;
    return uint8_t(std::lround(x));
}

inline ImageBatch to_batch(const ImageU8& img) {
    GT_REQUIRE(img.ch == 3, "to_batch: 3-channel image required");
    ImageBatch b(1, 3, img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) b.at(0, c, y, x) = u8_to_signed(img.at(y, x, c));
    return b;
}

inline ImageU8 from_batch(const ImageBatch& b, int sample) {
    GT_REQUIRE(b.c == 3 && sample >= 0 && sample < b.n, "from_batch: bad sample or channels");
    ImageU8 img(b.h, b.w, 3);
    for (int y = 0; y < b.h; ++y)
        for (int x = 0; x < b.w; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = signed_to_u8(b.at(sample, c, y, x));
    return img;
}

inline void check_batch_valid(const ImageBatch& b, const char* where) {
    for (float v : b.data)
        GT_REQUIRE(std::isfinite(v) && v >= -1.f && v <= 1.f, where,
                   ": image batch value out of [-1,1] or non-finite");
}

} // namespace gantruth
