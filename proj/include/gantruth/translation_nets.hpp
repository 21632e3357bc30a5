#pragma once

#include <memory>

#include "gantruth/image.hpp"
#include "gantruth/nn/modules.hpp"

namespace gantruth {

struct ArchConfig {
    int image_channels = 3;
    int base_channels = 16;
    int latent_channels = 64;
    int downsamples = 2;   // stride-2 convs in the encoder
    int res_blocks = 3;    // per encoder; the last one is the shared tail
    int disc_base_channels = 16;
    int disc_layers = 4;   // stride-2 convs per discriminator scale
    int disc_scales = 3;   // full, 1/2, 1/4 resolution

    int downsample_factor() const { return 1 << downsamples; }
};

bool operator==(const ArchConfig& a, const ArchConfig& b);

// Latent mean E(x); sampling adds unit-variance noise: z ~ N(E(x), I).
template <typename T>
struct LatentCode {
    nn::Var<T> mean;
};

// Encoder: stride-1 stem, `downsamples` stride-2 convs, res blocks with the
// last block shared across domains.
template <typename T>
class EncoderNet {
public:
    EncoderNet() = default;
    EncoderNet(const ArchConfig& arch, Rng& rng, const std::string& prefix,
               std::shared_ptr<nn::ResBlock<T>> shared_tail);

    LatentCode<T> operator()(const nn::Var<T>& x) const;
    const nn::NamedParams<T>& params() const { return params_; }
    const nn::ResBlock<T>& shared_tail() const { return *shared_tail_; }
    int downsamples() const { return arch_.downsamples; }

private:
    ArchConfig arch_;
    nn::Conv2d<T> stem_;
    nn::InstanceNorm2d<T> stem_norm_;
    std::vector<nn::Conv2d<T>> down_;
    std::vector<nn::InstanceNorm2d<T>> down_norm_;
    std::vector<nn::ResBlock<T>> res_;  // all but the shared tail
    std::shared_ptr<nn::ResBlock<T>> shared_tail_;
    nn::NamedParams<T> params_;
};

// Decoder mirrors the encoder; its first res block is the shared head and the
// output goes through a saturating tanh.
template <typename T>
class DecoderNet {
public:
    DecoderNet() = default;
    DecoderNet(const ArchConfig& arch, Rng& rng, const std::string& prefix,
               std::shared_ptr<nn::ResBlock<T>> shared_head);

    nn::Var<T> operator()(const nn::Var<T>& z) const;
    const nn::NamedParams<T>& params() const { return params_; }
    const nn::ResBlock<T>& shared_head() const { return *shared_head_; }

private:
    ArchConfig arch_;
    std::shared_ptr<nn::ResBlock<T>> shared_head_;
    std::vector<nn::ResBlock<T>> res_;
    std::vector<nn::ConvTranspose2d<T>> up_;
    std::vector<nn::InstanceNorm2d<T>> up_norm_;
    nn::Conv2d<T> out_conv_;
    nn::NamedParams<T> params_;
};

// Fully convolutional patch discriminator for one scale: stride-2 convs with
// leaky relu, then a 1x1 conv and sigmoid; emits a grid of patch
// probabilities. No normalization, no fully connected layers.
template <typename T>
class PatchDiscriminator {
public:
    PatchDiscriminator() = default;
    PatchDiscriminator(const ArchConfig& arch, Rng& rng, const std::string& prefix);

    nn::Var<T> operator()(const nn::Var<T>& x) const;
    const nn::NamedParams<T>& params() const { return params_; }

private:
    std::vector<nn::Conv2d<T>> convs_;
    nn::Conv2d<T> head_;
    nn::NamedParams<T> params_;
};

template <typename T>
class MultiScaleDiscriminator {
public:
    MultiScaleDiscriminator() = default;
    MultiScaleDiscriminator(const ArchConfig& arch, Rng& rng, const std::string& prefix);

    // one probability grid per scale, all entries strictly inside (0, 1)
    std::vector<nn::Var<T>> operator()(const nn::Var<T>& x) const;
    const nn::NamedParams<T>& params() const { return params_; }
    // smallest input edge this discriminator accepts
    int min_input_size() const;

private:
    ArchConfig arch_;
    std::vector<PatchDiscriminator<T>> scales_;
    nn::NamedParams<T> params_;
};

// The two translation directions of the shared-latent model. In
// unidirectional mode (simple GAN / GANtruth) only E_S and G_T exist; the
// shared blocks still live under the "shared." prefix so checkpoints keep a
// single layout.
template <typename T>
class TranslatorPair {
public:
    TranslatorPair() = default;
    TranslatorPair(const ArchConfig& arch, Rng& rng, bool bidirectional);

    bool bidirectional() const { return bidirectional_; }
    const ArchConfig& arch() const { return arch_; }
    const EncoderNet<T>& enc_s() const { return enc_s_; }
    const EncoderNet<T>& enc_t() const;
    const DecoderNet<T>& dec_t() const { return dec_t_; }
    const DecoderNet<T>& dec_s() const;

    const nn::NamedParams<T>& params() const { return params_; }
    const nn::ResBlock<T>& shared_encoder_tail() const { return *shared_enc_tail_; }
    const nn::ResBlock<T>& shared_decoder_head() const { return *shared_dec_head_; }

private:
    ArchConfig arch_;
    bool bidirectional_ = false;
    std::shared_ptr<nn::ResBlock<T>> shared_enc_tail_, shared_dec_head_;
    EncoderNet<T> enc_s_, enc_t_;
    DecoderNet<T> dec_s_, dec_t_;
    nn::NamedParams<T> params_;
};

enum class TranslateMode { kSampled, kDeterministic };

template <typename T>
LatentCode<T> encode(const EncoderNet<T>& enc, const nn::Var<T>& x);

// noise must match the latent shape when mode is kSampled
template <typename T>
nn::Var<T> translate(const EncoderNet<T>& enc, const DecoderNet<T>& dec, const nn::Var<T>& x,
                     TranslateMode mode, const nn::Var<T>& noise = {});

template <typename T>
nn::Var<T> gaussian_like(Rng& rng, const nn::Shape& shape);

// ImageBatch <-> graph leaves
nn::Var<float> batch_to_var(const ImageBatch& b, bool requires_grad = false);
ImageBatch var_to_batch(const nn::Var<float>& v);

struct BuildReport {
    size_t translator_params = 0;
    size_t discriminator_params = 0;
    size_t total() const { return translator_params + discriminator_params; }
};

} // namespace gantruth

#include "gantruth/translation_nets_impl.hpp"
