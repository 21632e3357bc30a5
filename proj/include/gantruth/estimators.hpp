#pragma once

#include <json.hpp>

#include "gantruth/label_atlas.hpp"
#include "gantruth/loss_bank.hpp"
#include "gantruth/scene_forge.hpp"
#include "gantruth/translation_nets.hpp"

namespace gantruth {

// Small encoder-decoder with skip connections; stands in for the full-scale
// pre-trained label estimators. Emits K logit channels at input resolution.
template <typename T>
class SegNet {
public:
    SegNet() = default;
    SegNet(int num_classes, int base, Rng& rng);

    nn::Var<T> operator()(const nn::Var<T>& x) const;
    const nn::NamedParams<T>& params() const { return params_; }
    int num_classes() const { return k_; }

private:
    int k_ = 0;
    nn::Conv2d<T> enc1_, enc2_, enc3_, dec2_, dec1_, head_;
    nn::NamedParams<T> params_;
};

// Same trunk with a single softplus channel: strictly positive disparities.
// A constant row-coordinate channel is appended to the input; the toy world's
// ground-plane disparity is a pure function of the image row, which plain
// translation-equivariant convolutions cannot represent.
template <typename T>
class DispNet {
public:
    DispNet() = default;
    DispNet(int base, Rng& rng);

    nn::Var<T> operator()(const nn::Var<T>& x) const;
    const nn::NamedParams<T>& params() const { return params_; }

private:
    nn::Conv2d<T> enc1_, enc2_, enc3_, enc4_, dec3_, dec2_, dec1_, head_;
    nn::NamedParams<T> params_;
};

// Shared conv backbone + per-instance heads, teacher-forced on ground-truth
// boxes: class logits, box deltas (zero target on gt boxes) and a fixed-size
// mask grid resampled inside the box.
template <typename T>
class InstanceNet {
public:
    static constexpr int kMaskSize = 16;
    static constexpr int kRoiSize = 8;

    InstanceNet() = default;
    InstanceNet(int num_things, int base, Rng& rng);

    std::vector<InstancePrediction<T>> heads(const nn::Var<T>& x,
                                             const std::vector<PixelBox>& boxes) const;
    const nn::NamedParams<T>& params() const { return params_; }
    int num_things() const { return k_; }

private:
    int k_ = 0;
    int stride_ = 4;
    nn::Conv2d<T> b1_, b2_, b3_;
    nn::Linear<T> cls_, box_;
    nn::Conv2d<T> mask1_, mask2_;
    nn::NamedParams<T> params_;
};

enum class EstimatorKind { kSemseg, kDisparity, kInstance };

const char* estimator_kind_name(EstimatorKind k);
EstimatorKind estimator_kind_from_name(const std::string& name);

// A frozen label estimator f_T (or f_S for the semantic-consistency
// comparison). Parameters never receive updates once frozen; every training
// run re-verifies the checksum.
class EstimatorBundle {
public:
    EstimatorKind kind = EstimatorKind::kSemseg;
    std::vector<int> taxonomy;  // semseg: class ids; instance: thing ids
    int ignore_index = 255;
    int base_channels = 16;
    nlohmann::json provenance;  // dataset hash, steps, final validation metric

    SegNet<float> seg;
    DispNet<float> disp;
    InstanceNet<float> inst;

    bool frozen() const { return frozen_; }
    void freeze();  // idempotent
    uint64_t checksum() const;

    const nn::NamedParams<float>& params() const;
    nn::NamedParams<float>& mutable_params();

    // graph-building forwards (gradients flow to the input, never into
    // frozen parameters)
    nn::Var<float> forward_semseg(const nn::Var<float>& x) const;
    nn::Var<float> forward_disparity(const nn::Var<float>& x) const;
    std::vector<InstancePrediction<float>> forward_instances(
        const nn::Var<float>& x, const std::vector<PixelBox>& boxes) const;

    // evaluation-mode prediction on plain batches (deterministic, no graph)
    std::vector<float> estimate_logits(const ImageBatch& x) const;   // (n,K,h,w)
    std::vector<float> estimate_disparity(const ImageBatch& x) const;  // (n,h,w)
    LabelMap predict_labels(const ImageU8& image) const;

private:
    bool frozen_ = false;
};

struct PretrainConfig {
    int steps = 3000;
    int batch_size = 4;
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999;
    uint64_t seed = 0;
    double val_fraction = 0.1;
    int base_channels = 16;
    std::string mapping = "toy-source-to-toy-target";
    // validation floors; failing one is an error naming the metric
    double semseg_miou_floor = 0.80;
    double disp_abs_rel_ceiling = 0.10;
    double instance_bce_ceiling = 0.30;
    int log_every = 200;
};

// Supervised pre-training on toy target-domain images with remapped labels.
// Returns a frozen bundle whose provenance records the validation metric.
EstimatorBundle pretrain_estimator(EstimatorKind kind, const Dataset& dataset,
                                   const PretrainConfig& config, std::ostream* log = nullptr);

void save_estimator(const EstimatorBundle& bundle, const std::string& path);
EstimatorBundle load_estimator(const std::string& path);

// Teacher-forced instance targets for a scene: class index in the thing
// taxonomy, zero box deltas and the gt mask resampled inside its box.
std::vector<InstanceTarget> make_instance_targets(const SceneGroundTruth& gt,
                                                  const LabelMapping& mapping,
                                                  const std::vector<int>& thing_ids,
                                                  int mask_size);

uint64_t params_checksum(const nn::NamedParams<float>& params);

// class ids -> contiguous channel indices of an estimator's logit layout;
// ignore_index passes through, anything else off-taxonomy is an error
std::vector<int> labels_to_taxonomy_indices(const LabelMap& labels,
                                            const std::vector<int>& taxonomy, int ignore_index);

// -- template bodies ---------------------------------------------------------

template <typename T>
SegNet<T>::SegNet(int num_classes, int base, Rng& rng) : k_(num_classes) {
    enc1_ = nn::Conv2d<T>(rng, params_, "seg.enc1", 3, base, 3, 1, 1);
    enc2_ = nn::Conv2d<T>(rng, params_, "seg.enc2", base, base * 2, 4, 2, 1);
    enc3_ = nn::Conv2d<T>(rng, params_, "seg.enc3", base * 2, base * 4, 4, 2, 1);
    dec2_ = nn::Conv2d<T>(rng, params_, "seg.dec2", base * 4 + base * 2, base * 2, 3, 1, 1);
    dec1_ = nn::Conv2d<T>(rng, params_, "seg.dec1", base * 2 + base, base, 3, 1, 1);
    head_ = nn::Conv2d<T>(rng, params_, "seg.head", base, num_classes, 1, 1, 0);
}

template <typename T>
nn::Var<T> SegNet<T>::operator()(const nn::Var<T>& x) const {
    GT_REQUIRE(x.shape().size() == 4 && x.shape()[2] % 4 == 0 && x.shape()[3] % 4 == 0,
               "segnet: spatial dims must be divisible by 4, got ", nn::shape_str(x.shape()));
    nn::Var<T> h1 = nn::relu(enc1_(x));
    nn::Var<T> h2 = nn::relu(enc2_(h1));
    nn::Var<T> h3 = nn::relu(enc3_(h2));
    nn::Var<T> d2 = nn::relu(dec2_(nn::concat_ch(nn::upsample_nearest2x(h3), h2)));
    nn::Var<T> d1 = nn::relu(dec1_(nn::concat_ch(nn::upsample_nearest2x(d2), h1)));
    return head_(d1);
}

template <typename T>
DispNet<T>::DispNet(int base, Rng& rng) {
    enc1_ = nn::Conv2d<T>(rng, params_, "disp.enc1", 4, base, 3, 1, 1);  // rgb + row coord
    enc2_ = nn::Conv2d<T>(rng, params_, "disp.enc2", base, base * 2, 4, 2, 1);
    enc3_ = nn::Conv2d<T>(rng, params_, "disp.enc3", base * 2, base * 4, 4, 2, 1);
    enc4_ = nn::Conv2d<T>(rng, params_, "disp.enc4", base * 4, base * 4, 4, 2, 1);
    dec3_ = nn::Conv2d<T>(rng, params_, "disp.dec3", base * 4 + base * 4, base * 4, 3, 1, 1);
    dec2_ = nn::Conv2d<T>(rng, params_, "disp.dec2", base * 4 + base * 2, base * 2, 3, 1, 1);
    dec1_ = nn::Conv2d<T>(rng, params_, "disp.dec1", base * 2 + base, base, 3, 1, 1);
    head_ = nn::Conv2d<T>(rng, params_, "disp.head", base, 1, 1, 1, 0);
}

template <typename T>
nn::Var<T> DispNet<T>::operator()(const nn::Var<T>& x) const {
    GT_REQUIRE(x.shape().size() == 4 && x.shape()[2] % 8 == 0 && x.shape()[3] % 8 == 0,
               "dispnet: spatial dims must be divisible by 8, got ", nn::shape_str(x.shape()));
    const auto& s = x.shape();
    std::vector<T> coord(size_t(s[0]) * size_t(s[2]) * s[3]);
    for (int n = 0; n < s[0]; ++n)
        for (int y = 0; y < s[2]; ++y)
            for (int xq = 0; xq < s[3]; ++xq)
                coord[(size_t(n) * s[2] + y) * s[3] + xq] =
                    T(2.0 * y / double(s[2] - 1) - 1.0);
    auto coord_ch = nn::Var<T>::constant({s[0], 1, s[2], s[3]}, std::move(coord));
    nn::Var<T> h1 = nn::relu(enc1_(nn::concat_ch(x, coord_ch)));
    nn::Var<T> h2 = nn::relu(enc2_(h1));
    nn::Var<T> h3 = nn::relu(enc3_(h2));
    nn::Var<T> h4 = nn::relu(enc4_(h3));
    nn::Var<T> d3 = nn::relu(dec3_(nn::concat_ch(nn::upsample_nearest2x(h4), h3)));
    nn::Var<T> d2 = nn::relu(dec2_(nn::concat_ch(nn::upsample_nearest2x(d3), h2)));
    nn::Var<T> d1 = nn::relu(dec1_(nn::concat_ch(nn::upsample_nearest2x(d2), h1)));
    return nn::softplus(head_(d1));
}

template <typename T>
InstanceNet<T>::InstanceNet(int num_things, int base, Rng& rng) : k_(num_things) {
    b1_ = nn::Conv2d<T>(rng, params_, "inst.b1", 3, base, 3, 1, 1);
    b2_ = nn::Conv2d<T>(rng, params_, "inst.b2", base, base * 2, 4, 2, 1);
    b3_ = nn::Conv2d<T>(rng, params_, "inst.b3", base * 2, base * 2, 4, 2, 1);
    int feat = base * 2 * kRoiSize * kRoiSize;
    cls_ = nn::Linear<T>(rng, params_, "inst.cls", feat, num_things);
    box_ = nn::Linear<T>(rng, params_, "inst.box", feat, 4);
    mask1_ = nn::Conv2d<T>(rng, params_, "inst.mask1", base * 2, base, 3, 1, 1);
    mask2_ = nn::Conv2d<T>(rng, params_, "inst.mask2", base, 1, 3, 1, 1);
}

template <typename T>
std::vector<InstancePrediction<T>> InstanceNet<T>::heads(
    const nn::Var<T>& x, const std::vector<PixelBox>& boxes) const {
    const auto& s = x.shape();
    GT_REQUIRE(s.size() == 4 && s[0] == 1, "instance heads: single-sample batches only");
    nn::Var<T> f = nn::relu(b3_(nn::relu(b2_(nn::relu(b1_(x))))));
    int fh = f.shape()[2], fw = f.shape()[3];
    std::vector<InstancePrediction<T>> out;
    for (const auto& b : boxes) {
        GT_REQUIRE(b.x1 > b.x0 && b.y1 > b.y0, "instance heads: malformed box");
        // box in image pixels -> feature cells, at least one cell wide
        int fx0 = std::clamp(b.x0 / stride_, 0, fw - 1);
        int fy0 = std::clamp(b.y0 / stride_, 0, fh - 1);
        int fx1 = std::clamp((b.x1 + stride_ - 1) / stride_, fx0 + 1, fw);
        int fy1 = std::clamp((b.y1 + stride_ - 1) / stride_, fy0 + 1, fh);
        nn::Var<T> roi = nn::roi_nearest(f, 0, fx0, fy0, fx1, fy1, kRoiSize, kRoiSize);
        nn::Var<T> flat = nn::reshape(roi, {1, int(roi.numel())});
        InstancePrediction<T> p;
        p.class_logits = cls_(flat);
        p.box_deltas = box_(flat);
        nn::Var<T> m = nn::relu(mask1_(roi));
        m = nn::upsample_nearest2x(m);
        p.mask_probs = nn::sigmoid(mask2_(m));
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace gantruth
