#pragma once

// template bodies for translation_nets.hpp

namespace gantruth {

inline bool operator==(const ArchConfig& a, const ArchConfig& b) {
    return a.image_channels == b.image_channels && a.base_channels == b.base_channels &&
           a.latent_channels == b.latent_channels && a.downsamples == b.downsamples &&
           a.res_blocks == b.res_blocks && a.disc_base_channels == b.disc_base_channels &&
           a.disc_layers == b.disc_layers && a.disc_scales == b.disc_scales;
}

template <typename T>
EncoderNet<T>::EncoderNet(const ArchConfig& arch, Rng& rng, const std::string& prefix,
                          std::shared_ptr<nn::ResBlock<T>> shared_tail)
    : arch_(arch), shared_tail_(std::move(shared_tail)) {
    GT_REQUIRE(arch.res_blocks >= 1, "encoder needs at least the shared res block");
    int c = arch.base_channels;
    stem_ = nn::Conv2d<T>(rng, params_, prefix + ".stem", arch.image_channels, c, 7, 1, 3);
    stem_norm_ = nn::InstanceNorm2d<T>(params_, prefix + ".stem_norm", c);
    for (int i = 0; i < arch.downsamples; ++i) {
        int cout = (i + 1 == arch.downsamples) ? arch.latent_channels : c * 2;
        down_.emplace_back(rng, params_, cat(prefix, ".down", i), c, cout, 4, 2, 1);
        down_norm_.emplace_back(params_, cat(prefix, ".down", i, "_norm"), cout);
        c = cout;
    }
    for (int i = 0; i + 1 < arch.res_blocks; ++i)
        res_.emplace_back(rng, params_, cat(prefix, ".res", i), arch.latent_channels);
    // shared tail is registered by whoever owns the pair, under "shared."
}

template <typename T>
LatentCode<T> EncoderNet<T>::operator()(const nn::Var<T>& x) const {
    const auto& s = x.shape();
    GT_REQUIRE(s.size() == 4 && s[1] == arch_.image_channels, "encode: bad input shape ",
               nn::shape_str(s));
    int factor = arch_.downsample_factor();
    GT_REQUIRE(s[2] % factor == 0 && s[3] % factor == 0, "encode: spatial dims ", s[2], "x", s[3],
               " not divisible by ", factor);
    nn::Var<T> h = nn::relu(stem_norm_(stem_(x)));
    for (size_t i = 0; i < down_.size(); ++i) h = nn::relu(down_norm_[i](down_[i](h)));
    for (const auto& r : res_) h = r(h);
    h = (*shared_tail_)(h);
    return {h};
}

template <typename T>
DecoderNet<T>::DecoderNet(const ArchConfig& arch, Rng& rng, const std::string& prefix,
                          std::shared_ptr<nn::ResBlock<T>> shared_head)
    : arch_(arch), shared_head_(std::move(shared_head)) {
    for (int i = 0; i + 1 < arch.res_blocks; ++i)
        res_.emplace_back(rng, params_, cat(prefix, ".res", i), arch.latent_channels);
    int c = arch.latent_channels;
    for (int i = 0; i < arch.downsamples; ++i) {
        int cout = (i + 1 == arch.downsamples)
                       ? arch.base_channels
                       : arch.base_channels * (1 << (arch.downsamples - 1 - i));
        up_.emplace_back(rng, params_, cat(prefix, ".up", i), c, cout, 4, 2, 1);
        up_norm_.emplace_back(params_, cat(prefix, ".up", i, "_norm"), cout);
        c = cout;
    }
    out_conv_ = nn::Conv2d<T>(rng, params_, prefix + ".out", c, arch.image_channels, 7, 1, 3);
}

template <typename T>
nn::Var<T> DecoderNet<T>::operator()(const nn::Var<T>& z) const {
    GT_REQUIRE(z.shape().size() == 4 && z.shape()[1] == arch_.latent_channels,
               "decode: latent shape mismatch, got ", nn::shape_str(z.shape()));
    nn::Var<T> h = (*shared_head_)(z);
    for (const auto& r : res_) h = r(h);
    for (size_t i = 0; i < up_.size(); ++i) h = nn::relu(up_norm_[i](up_[i](h)));
    return nn::vtanh(out_conv_(h));
}

template <typename T>
PatchDiscriminator<T>::PatchDiscriminator(const ArchConfig& arch, Rng& rng,
                                          const std::string& prefix) {
    int cin = arch.image_channels;
    for (int i = 0; i < arch.disc_layers; ++i) {
        int cout = arch.disc_base_channels * std::min(1 << i, 4);
        convs_.emplace_back(rng, params_, cat(prefix, ".conv", i), cin, cout, 4, 2, 1);
        cin = cout;
    }
    head_ = nn::Conv2d<T>(rng, params_, prefix + ".head", cin, 1, 1, 1, 0);
}

template <typename T>
nn::Var<T> PatchDiscriminator<T>::operator()(const nn::Var<T>& x) const {
    nn::Var<T> h = x;
    for (const auto& c : convs_) h = nn::leaky_relu(c(h), T(0.2));
    return nn::sigmoid(head_(h));
}

template <typename T>
MultiScaleDiscriminator<T>::MultiScaleDiscriminator(const ArchConfig& arch, Rng& rng,
                                                    const std::string& prefix)
    : arch_(arch) {
    for (int s = 0; s < arch.disc_scales; ++s) {
        scales_.emplace_back(arch, rng, cat(prefix, ".scale", s));
        params_.merge(scales_.back().params());
    }
}

template <typename T>
int MultiScaleDiscriminator<T>::min_input_size() const {
    // coarsest scale sees input / 2^(scales-1); each stride-2 conv needs >= 2 px
    int need = 2;
    for (int i = 1; i < arch_.disc_layers; ++i) need *= 2;
    return need << (arch_.disc_scales - 1);
}

template <typename T>
std::vector<nn::Var<T>> MultiScaleDiscriminator<T>::operator()(const nn::Var<T>& x) const {
    const auto& s = x.shape();
    GT_REQUIRE(s.size() == 4, "discriminate: rank-4 input required");
    int min_size = min_input_size();
    GT_REQUIRE(s[2] >= min_size && s[3] >= min_size, "discriminate: input ", s[2], "x", s[3],
               " below the ", min_size, "px minimum for the 1/", 1 << (arch_.disc_scales - 1),
               " scale");
    std::vector<nn::Var<T>> grids;
    nn::Var<T> cur = x;
    for (size_t i = 0; i < scales_.size(); ++i) {
        grids.push_back(scales_[i](cur));
        if (i + 1 < scales_.size()) cur = nn::avg_pool2x2(cur);
    }
    return grids;
}

template <typename T>
TranslatorPair<T>::TranslatorPair(const ArchConfig& arch, Rng& rng, bool bidirectional)
    : arch_(arch), bidirectional_(bidirectional) {
    shared_enc_tail_ = std::make_shared<nn::ResBlock<T>>(rng, params_, "shared.enc_tail",
                                                         arch.latent_channels);
    shared_dec_head_ = std::make_shared<nn::ResBlock<T>>(rng, params_, "shared.dec_head",
                                                         arch.latent_channels);
    enc_s_ = EncoderNet<T>(arch, rng, "enc_s", shared_enc_tail_);
    params_.merge(enc_s_.params());
    dec_t_ = DecoderNet<T>(arch, rng, "dec_t", shared_dec_head_);
    params_.merge(dec_t_.params());
    if (bidirectional) {
        enc_t_ = EncoderNet<T>(arch, rng, "enc_t", shared_enc_tail_);
        params_.merge(enc_t_.params());
        dec_s_ = DecoderNet<T>(arch, rng, "dec_s", shared_dec_head_);
        params_.merge(dec_s_.params());
    }
}

template <typename T>
const EncoderNet<T>& TranslatorPair<T>::enc_t() const {
    GT_REQUIRE(bidirectional_, "this model has no target-domain encoder");
    return enc_t_;
}

template <typename T>
const DecoderNet<T>& TranslatorPair<T>::dec_s() const {
    GT_REQUIRE(bidirectional_, "this model has no source-domain decoder");
    return dec_s_;
}

template <typename T>
LatentCode<T> encode(const EncoderNet<T>& enc, const nn::Var<T>& x) {
    return enc(x);
}

template <typename T>
nn::Var<T> translate(const EncoderNet<T>& enc, const DecoderNet<T>& dec, const nn::Var<T>& x,
                     TranslateMode mode, const nn::Var<T>& noise) {
    LatentCode<T> z = enc(x);
    if (mode == TranslateMode::kSampled) {
        GT_REQUIRE(noise.defined() && noise.shape() == z.mean.shape(),
                   "translate: sampled mode needs noise matching the latent shape");
        return dec(nn::add(z.mean, noise));
    }
    return dec(z.mean);  // deterministic mode: epsilon = 0
}

template <typename T>
nn::Var<T> gaussian_like(Rng& rng, const nn::Shape& shape) {
    std::vector<T> data(nn::numel_of(shape));
    for (auto& v : data) v = T(rng.normal());
    return nn::Var<T>::constant(shape, std::move(data));
}

inline nn::Var<float> batch_to_var(const ImageBatch& b, bool requires_grad) {
    auto v = nn::Var<float>::constant({b.n, b.c, b.h, b.w}, b.data);
    if (requires_grad) {
        v.node().requires_grad = true;
        v.node().trainable = true;
        v.node().ensure_grad();
    }
    return v;
}

inline ImageBatch var_to_batch(const nn::Var<float>& v) {
    const auto& s = v.shape();
    GT_REQUIRE(s.size() == 4, "var_to_batch: rank-4 required");
    ImageBatch b(s[0], s[1], s[2], s[3]);
    b.data = v.value();
    return b;
}

} // namespace gantruth
