#pragma once

#include <functional>

#include "gantruth/nn/loss_ops.hpp"
#include "gantruth/nn/modules.hpp"

// Every loss term of the translation objectives, built to be testable in
// isolation (double instantiations drive the finite-difference checks) and
// reusable by the trainers. Probabilities are clamped to [kProbEps, 1 -
// kProbEps] before any logarithm, which makes all losses finite on valid
// inputs.
namespace gantruth {

constexpr double kProbEps = 1e-7;

struct LossWeights {
    double gan = 10.0;
    double kl = 0.1;   // not stated by the method description; configurable
    double ll = 10.0;  // same
    double semseg = 40.0;
    double disp = 0.4;
    double instseg = 1.0;

    void validate() const {
        for (double v : {gan, kl, ll, semseg, disp, instseg})
            GT_REQUIRE(std::isfinite(v) && v >= 0, "loss weights must be finite and non-negative");
    }
};

template <typename T>
using NetFn = std::function<nn::Var<T>(const nn::Var<T>&)>;
template <typename T>
using DiscFn = std::function<std::vector<nn::Var<T>>(const nn::Var<T>&)>;

namespace detail {

template <typename T>
nn::Var<T> mean_log_prob(const nn::Var<T>& p) {
    return nn::mean(nn::vlog(nn::clamp(p, T(kProbEps), T(1.0 - kProbEps))));
}

template <typename T>
nn::Var<T> mean_log_one_minus(const nn::Var<T>& p) {
    nn::Var<T> q = nn::add_scalar(nn::neg(p), T(1));
    return nn::mean(nn::vlog(nn::clamp(q, T(kProbEps), T(1.0 - kProbEps))));
}

template <typename T>
void check_prob_grids(const std::vector<nn::Var<T>>& grids, const char* who) {
    GT_REQUIRE(!grids.empty(), who, ": empty probability input");
    for (const auto& g : grids) {
        GT_REQUIRE(g.numel() > 0, who, ": empty probability grid");
        for (T v : g.value())
            if (!(v >= T(0) && v <= T(1)))
                throw NumericError(cat(who, ": probability outside [0,1] (", v, ")"));
    }
}

} // namespace detail

// L_GAN^(D) = -1/2 E log D(x) - 1/2 E log(1 - D(G(z))), averaged uniformly
// over patches and scales.
template <typename T>
nn::Var<T> gan_loss_discriminator(const std::vector<nn::Var<T>>& d_real,
                                  const std::vector<nn::Var<T>>& d_fake) {
    detail::check_prob_grids(d_real, "gan_loss_discriminator");
    detail::check_prob_grids(d_fake, "gan_loss_discriminator");
    GT_REQUIRE(d_real.size() == d_fake.size(), "gan_loss_discriminator: scale count mismatch");
    nn::Var<T> total = nn::Var<T>::scalar(T(0));
    for (size_t s = 0; s < d_real.size(); ++s) {
        nn::Var<T> term = nn::add(nn::scale(detail::mean_log_prob(d_real[s]), T(-0.5)),
                                  nn::scale(detail::mean_log_one_minus(d_fake[s]), T(-0.5)));
        total = nn::add(total, term);
    }
    return nn::scale(total, T(1) / T(d_real.size()));
}

// L_GAN^(G) = -1/2 E log D(G(z)), non-saturating form.
template <typename T>
nn::Var<T> gan_loss_generator(const std::vector<nn::Var<T>>& d_fake) {
    detail::check_prob_grids(d_fake, "gan_loss_generator");
    nn::Var<T> total = nn::Var<T>::scalar(T(0));
    for (const auto& g : d_fake) total = nn::add(total, nn::scale(detail::mean_log_prob(g), T(-0.5)));
    return nn::scale(total, T(1) / T(d_fake.size()));
}

template <typename T>
nn::Var<T> gan_loss_discriminator(const nn::Var<T>& d_real, const nn::Var<T>& d_fake) {
    return gan_loss_discriminator(std::vector<nn::Var<T>>{d_real},
                                  std::vector<nn::Var<T>>{d_fake});
}

template <typename T>
nn::Var<T> gan_loss_generator(const nn::Var<T>& d_fake) {
    return gan_loss_generator(std::vector<nn::Var<T>>{d_fake});
}

// D_KL(N(mean, I) || N(0, I)) = 1/2 sum(mean^2), summed over latent entries
// and averaged over the batch (leading axis for rank >= 2).
template <typename T>
nn::Var<T> kl_to_standard_normal(const nn::Var<T>& mean_code) {
    for (T v : mean_code.value())
        if (!std::isfinite(double(v)))
            throw NumericError("kl_to_standard_normal: non-finite mean");
    int batch = mean_code.shape().size() >= 2 ? mean_code.shape()[0] : 1;
    return nn::scale(nn::sum(nn::square(mean_code)), T(0.5) / T(batch));
}

template <typename T>
struct VaeLossResult {
    nn::Var<T> total;       // lambda_kl * kl + lambda_ll * recon
    nn::Var<T> kl, recon;   // unweighted terms
    nn::Var<T> reconstruction_image;
};

// Reconstruction NLL is modeled as mean absolute error (unit-scale Laplacian
// likelihood, additive constants dropped).
template <typename T, typename Enc, typename Dec>
VaeLossResult<T> vae_loss(Enc&& enc, Dec&& dec, const nn::Var<T>& x, const nn::Var<T>& noise,
                          const LossWeights& w) {
    nn::Var<T> mean_code = enc(x);
    GT_REQUIRE(noise.defined() && noise.shape() == mean_code.shape(),
               "vae_loss: noise must match latent shape");
    nn::Var<T> recon_img = dec(nn::add(mean_code, noise));
    GT_REQUIRE(recon_img.shape() == x.shape(), "vae_loss: reconstruction shape mismatch");
    VaeLossResult<T> r;
    r.kl = kl_to_standard_normal(mean_code);
    r.recon = nn::mean(nn::vabs(nn::sub(recon_img, x)));
    r.total = nn::add(nn::scale(r.kl, T(w.kl)), nn::scale(r.recon, T(w.ll)));
    r.reconstruction_image = recon_img;
    return r;
}

template <typename T>
struct CycleLossResult {
    nn::Var<T> total;
    nn::Var<T> kl_first, kl_translated, recon;  // unweighted terms
    nn::Var<T> translated;                      // first-hop output, reusable by GAN terms
    nn::Var<T> round_trip;
};

// lambda_kl * KL(E_src(x)) + lambda_kl * KL(E_dst(translated)) +
// lambda_ll * MAE(round trip, x). noise_fwd/noise_back of zeros give the
// evaluation-mode deterministic round trip.
template <typename T, typename EncS, typename DecS, typename EncD, typename DecD>
CycleLossResult<T> cycle_consistency_loss(EncS&& enc_src, DecS&& dec_src, EncD&& enc_dst,
                                          DecD&& dec_dst, const nn::Var<T>& x,
                                          const nn::Var<T>& noise_fwd,
                                          const nn::Var<T>& noise_back, const LossWeights& w) {
    nn::Var<T> mean_a = enc_src(x);
    GT_REQUIRE(noise_fwd.defined() && noise_fwd.shape() == mean_a.shape(),
               "cycle_consistency_loss: forward noise shape mismatch");
    CycleLossResult<T> r;
    r.translated = dec_dst(nn::add(mean_a, noise_fwd));
    nn::Var<T> mean_b = enc_dst(r.translated);
    GT_REQUIRE(noise_back.defined() && noise_back.shape() == mean_b.shape(),
               "cycle_consistency_loss: backward noise shape mismatch");
    r.round_trip = dec_src(nn::add(mean_b, noise_back));
    GT_REQUIRE(r.round_trip.shape() == x.shape(), "cycle_consistency_loss: round trip shape");
    r.kl_first = kl_to_standard_normal(mean_a);
    r.kl_translated = kl_to_standard_normal(mean_b);
    r.recon = nn::mean(nn::vabs(nn::sub(r.round_trip, x)));
    r.total = nn::add(nn::add(nn::scale(r.kl_first, T(w.kl)), nn::scale(r.kl_translated, T(w.kl))),
                      nn::scale(r.recon, T(w.ll)));
    return r;
}

template <typename T>
struct SemsegLossResult {
    nn::Var<T> loss;
    bool all_ignored = false;
    long valid_count = 0;
};

// Cross entropy between estimator logits on the translated image and the
// remapped source labels. Labels must already be in the target taxonomy.
template <typename T>
SemsegLossResult<T> gt_semseg_loss(const nn::Var<T>& pred_logits, const std::vector<int>& labels,
                                   int ignore_index) {
    for (T v : pred_logits.value())
        if (!std::isfinite(double(v))) throw NumericError("gt_semseg_loss: non-finite logits");
    auto ce = nn::softmax_cross_entropy(pred_logits, labels, ignore_index);
    return {ce.loss, ce.valid_count == 0, ce.valid_count};
}

template <typename T>
struct DisparityLossResult {
    nn::Var<T> loss;
    long valid_count = 0;
};

// mean |scale_const * pred - gt| over valid pixels. scale_const compensates
// for camera-parameter differences between the estimator's training data and
// the scene at hand.
template <typename T>
DisparityLossResult<T> gt_disparity_loss(const nn::Var<T>& pred, const std::vector<T>& gt,
                                         const std::vector<uint8_t>& valid, T scale_const) {
    GT_REQUIRE(scale_const > T(0), "gt_disparity_loss: scale_const must be positive");
    GT_REQUIRE(pred.numel() == gt.size() && gt.size() == valid.size(),
               "gt_disparity_loss: shape mismatch, pred ", pred.numel(), " vs gt ", gt.size());
    long count = 0;
    for (uint8_t v : valid) count += v ? 1 : 0;
    if (count == 0) return {nn::Var<T>::scalar(T(0)), 0};
    std::vector<T> mask(valid.size()), gtv(gt.size());
    for (size_t i = 0; i < valid.size(); ++i) {
        mask[i] = valid[i] ? T(1) : T(0);
        gtv[i] = gt[i];
    }
    auto gt_const = nn::Var<T>::constant(pred.shape(), std::move(gtv));
    auto mask_const = nn::Var<T>::constant(pred.shape(), std::move(mask));
    nn::Var<T> diff = nn::vabs(nn::sub(nn::scale(pred, scale_const), gt_const));
    nn::Var<T> masked = nn::mul(diff, mask_const);
    return {nn::scale(nn::sum(masked), T(1) / T(count)), count};
}

// -- instance preservation -------------------------------------------------

template <typename T>
struct InstancePrediction {
    nn::Var<T> class_logits;  // (1, K_things)
    nn::Var<T> box_deltas;    // (1, 4), regressed against zero deltas on gt boxes
    nn::Var<T> mask_probs;    // (1, 1, m, m) in (0, 1)
};

struct InstanceTarget {
    int class_index = 0;               // index into the estimator's thing taxonomy
    std::array<double, 4> box = {0, 0, 1, 1};  // [x0,y0,x1,y1), for validation only
    std::vector<uint8_t> mask;         // m*m binary target, resampled into the gt box
    int mask_size = 0;
};

// Per kept instance: classification CE + box smooth-L1 + per-pixel mask BCE
// within the gt box, averaged over kept instances. Dropped (NULL-mapped)
// instances contribute exactly zero.
template <typename T>
nn::Var<T> gt_instance_loss(const std::vector<InstancePrediction<T>>& preds,
                            const std::vector<InstanceTarget>& targets,
                            const std::vector<bool>& keep) {
    GT_REQUIRE(preds.size() == targets.size() && targets.size() == keep.size(),
               "gt_instance_loss: size mismatch between predictions, targets and keep flags");
    nn::Var<T> total = nn::Var<T>::scalar(T(0));
    long kept = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const auto& tgt = targets[i];
        GT_REQUIRE(tgt.box[2] > tgt.box[0] && tgt.box[3] > tgt.box[1],
                   "gt_instance_loss: malformed box for instance ", i);
        if (!keep[i]) continue;
        ++kept;
        const auto& p = preds[i];
        nn::Var<T> cls = nn::cross_entropy_rows(p.class_logits, {tgt.class_index});
        nn::Var<T> box = nn::mean(nn::smooth_l1(p.box_deltas, std::vector<T>(4, T(0))));
        GT_REQUIRE(int(tgt.mask.size()) == tgt.mask_size * tgt.mask_size &&
                       p.mask_probs.numel() == tgt.mask.size(),
                   "gt_instance_loss: mask size mismatch for instance ", i);
        std::vector<T> pos(tgt.mask.size()), negv(tgt.mask.size());
        for (size_t k = 0; k < tgt.mask.size(); ++k) {
            pos[k] = tgt.mask[k] ? T(1) : T(0);
            negv[k] = tgt.mask[k] ? T(0) : T(1);
        }
        auto pos_c = nn::Var<T>::constant(p.mask_probs.shape(), std::move(pos));
        auto neg_c = nn::Var<T>::constant(p.mask_probs.shape(), std::move(negv));
        nn::Var<T> pc = nn::clamp(p.mask_probs, T(kProbEps), T(1.0 - kProbEps));
        nn::Var<T> one_minus = nn::add_scalar(nn::neg(pc), T(1));
        nn::Var<T> bce = nn::neg(nn::add(nn::mul(pos_c, nn::vlog(pc)),
                                         nn::mul(neg_c, nn::vlog(one_minus))));
        total = nn::add(total, nn::add(cls, nn::add(box, nn::mean(bce))));
    }
    if (kept == 0) return nn::Var<T>::scalar(T(0));
    return nn::scale(total, T(1) / T(kept));
}

// CyCADA-style comparison loss: cross entropy between the source estimator's
// hard labels on x_S and its logits on the translated image.
template <typename T, typename SrcEstimator>
nn::Var<T> semantic_consistency_loss(SrcEstimator&& f_s, const nn::Var<T>& x_s,
                                     const nn::Var<T>& translated) {
    std::vector<int> hard;
    {
        nn::NoGradGuard ng;
        nn::Var<T> ref = f_s(x_s);
        const auto& s = ref.shape();
        GT_REQUIRE(s.size() == 4, "semantic_consistency_loss: rank-4 logits required");
        int k = s[1];
        size_t plane = size_t(s[2]) * size_t(s[3]);
        hard.resize(size_t(s[0]) * plane);
        for (int i = 0; i < s[0]; ++i)
            for (size_t px = 0; px < plane; ++px) {
                size_t base = size_t(i) * k * plane + px;
                int best = 0;
                T bv = ref.value()[base];
                for (int c = 1; c < k; ++c) {
                    T v = ref.value()[base + size_t(c) * plane];
                    if (v > bv) {
                        bv = v;
                        best = c;
                    }
                }
                hard[size_t(i) * plane + px] = best;
            }
    }
    nn::Var<T> logits = f_s(translated);
    return nn::softmax_cross_entropy(logits, hard, /*ignore_index=*/-1).loss;
}

// -- whole objectives -------------------------------------------------------

enum class Phase { kDiscriminator, kGenerator, kFull };

template <typename T>
struct ObjectiveParts {
    nn::Var<T> generator_total;      // defined for kGenerator / kFull
    nn::Var<T> discriminator_total;  // defined for kDiscriminator / kFull
    std::vector<std::pair<std::string, double>> logged;  // weighted contributions

    void log(const std::string& name, const nn::Var<T>& v) {
        logged.emplace_back(name, double(v.item()));
    }
};

// Frozen-estimator views plus prepared targets for the enabled tasks.
template <typename T>
struct GtSupervision {
    bool use_semseg = false;
    NetFn<T> semseg_logits;
    std::vector<int> semseg_labels;  // already remapped to the target taxonomy
    int ignore_index = 255;

    bool use_disp = false;
    NetFn<T> disparity;
    std::vector<T> disp_gt;
    std::vector<uint8_t> disp_valid;
    T disp_scale_const = T(1);

    bool use_inst = false;
    std::function<std::vector<InstancePrediction<T>>(const nn::Var<T>&)> instance_heads;
    std::vector<InstanceTarget> instance_targets;
    std::vector<bool> instance_keep;

    bool any() const { return use_semseg || use_disp || use_inst; }
};

template <typename T>
struct GtLossResult {
    nn::Var<T> total;  // weighted sum of the enabled task terms
    std::vector<std::pair<std::string, nn::Var<T>>> terms;  // weighted, for logging
};

template <typename T>
GtLossResult<T> ground_truth_preservation(const GtSupervision<T>& gt, const nn::Var<T>& translated,
                                          const LossWeights& w) {
    GtLossResult<T> r;
    r.total = nn::Var<T>::scalar(T(0));
    if (gt.use_semseg) {
        auto s = gt_semseg_loss(gt.semseg_logits(translated), gt.semseg_labels, gt.ignore_index);
        nn::Var<T> term = nn::scale(s.loss, T(w.semseg));
        r.terms.emplace_back("gt_semseg", term);
        r.total = nn::add(r.total, term);
    }
    if (gt.use_disp) {
        auto d = gt_disparity_loss(gt.disparity(translated), gt.disp_gt, gt.disp_valid,
                                   gt.disp_scale_const);
        nn::Var<T> term = nn::scale(d.loss, T(w.disp));
        r.terms.emplace_back("gt_disp", term);
        r.total = nn::add(r.total, term);
    }
    if (gt.use_inst) {
        auto preds = gt.instance_heads(translated);
        nn::Var<T> term = nn::scale(
            gt_instance_loss(preds, gt.instance_targets, gt.instance_keep), T(w.instseg));
        r.terms.emplace_back("gt_inst", term);
        r.total = nn::add(r.total, term);
    }
    return r;
}

// GANtruth objective: lambda_GAN * L_GAN(E_S, G_T, D_T) + L_GT. With every
// ground-truth weight at zero this is exactly the simple-GAN baseline.
template <typename T, typename Enc, typename Dec>
ObjectiveParts<T> gantruth_objective(Enc&& enc_s, Dec&& dec_t, const DiscFn<T>& disc_t,
                                     const GtSupervision<T>& gt, const nn::Var<T>& x_s,
                                     const nn::Var<T>& x_t, const nn::Var<T>& noise_d,
                                     const nn::Var<T>& noise_g, const LossWeights& w,
                                     Phase phase) {
    ObjectiveParts<T> parts;
    if (phase == Phase::kDiscriminator || phase == Phase::kFull) {
        nn::Var<T> fake;
        {
            nn::NoGradGuard ng;
            fake = dec_t(nn::add(enc_s(x_s), noise_d));
        }
        nn::Var<T> d_loss = nn::scale(
            gan_loss_discriminator(disc_t(x_t), disc_t(nn::detach(fake))), T(w.gan));
        parts.discriminator_total = d_loss;
        parts.log("gan_t_d", d_loss);
        parts.log("d_total", d_loss);
    }
    if (phase == Phase::kGenerator || phase == Phase::kFull) {
        nn::Var<T> translated = dec_t(nn::add(enc_s(x_s), noise_g));
        nn::Var<T> g_gan = nn::scale(gan_loss_generator(disc_t(translated)), T(w.gan));
        parts.log("gan_t_g", g_gan);
        nn::Var<T> total = g_gan;
        auto gtr = ground_truth_preservation(gt, translated, w);
        for (auto& [name, term] : gtr.terms) parts.log(name, term);
        if (gt.any()) parts.log("gt_total", gtr.total);
        total = nn::add(total, gtr.total);
        parts.generator_total = total;
        parts.log("g_total", total);
    }
    return parts;
}

template <typename T>
struct UnitNets {
    NetFn<T> enc_s, enc_t, dec_s, dec_t;
    DiscFn<T> disc_s, disc_t;
};

template <typename T>
struct UnitNoise {
    nn::Var<T> d_trans_st, d_trans_ts;  // discriminator-phase translations
    nn::Var<T> recon_s, recon_t;        // VAE sampling
    nn::Var<T> trans_st, trans_ts;      // generator-phase translations / cycle first hop
    nn::Var<T> cyc_s, cyc_t;            // cycle second hop
};

// UNIT objective, optionally augmented with the ground-truth preservation
// loss on the sampled S->T translation. gt.any() == false gives the plain
// UNIT baseline; zero GT weights give a bitwise-identical total.
template <typename T>
ObjectiveParts<T> unit_gantruth_objective(const UnitNets<T>& nets, const GtSupervision<T>& gt,
                                          const nn::Var<T>& x_s, const nn::Var<T>& x_t,
                                          const UnitNoise<T>& noise, const LossWeights& w,
                                          Phase phase) {
    ObjectiveParts<T> parts;
    if (phase == Phase::kDiscriminator || phase == Phase::kFull) {
        nn::Var<T> fake_t, fake_s;
        {
            nn::NoGradGuard ng;
            fake_t = nets.dec_t(nn::add(nets.enc_s(x_s), noise.d_trans_st));
            fake_s = nets.dec_s(nn::add(nets.enc_t(x_t), noise.d_trans_ts));
        }
        nn::Var<T> d_t = nn::scale(
            gan_loss_discriminator(nets.disc_t(x_t), nets.disc_t(nn::detach(fake_t))), T(w.gan));
        nn::Var<T> d_s = nn::scale(
            gan_loss_discriminator(nets.disc_s(x_s), nets.disc_s(nn::detach(fake_s))), T(w.gan));
        parts.log("gan_t_d", d_t);
        parts.log("gan_s_d", d_s);
        parts.discriminator_total = nn::add(d_t, d_s);
        parts.log("d_total", parts.discriminator_total);
    }
    if (phase == Phase::kGenerator || phase == Phase::kFull) {
        auto vae_s = vae_loss<T>(nets.enc_s, nets.dec_s, x_s, noise.recon_s, w);
        auto vae_t = vae_loss<T>(nets.enc_t, nets.dec_t, x_t, noise.recon_t, w);
        auto cc_s = cycle_consistency_loss<T>(nets.enc_s, nets.dec_s, nets.enc_t, nets.dec_t, x_s,
                                              noise.trans_st, noise.cyc_s, w);
        auto cc_t = cycle_consistency_loss<T>(nets.enc_t, nets.dec_t, nets.enc_s, nets.dec_s, x_t,
                                              noise.trans_ts, noise.cyc_t, w);
        // translated images feed both the GAN terms and the GT preservation
        nn::Var<T> g_gan_t = nn::scale(gan_loss_generator(nets.disc_t(cc_s.translated)), T(w.gan));
        nn::Var<T> g_gan_s = nn::scale(gan_loss_generator(nets.disc_s(cc_t.translated)), T(w.gan));
        parts.log("vae_s", vae_s.total);
        parts.log("gan_s_g", g_gan_s);
        parts.log("cc_s", cc_s.total);
        parts.log("vae_t", vae_t.total);
        parts.log("gan_t_g", g_gan_t);
        parts.log("cc_t", cc_t.total);
        nn::Var<T> total = nn::add(
            nn::add(nn::add(vae_s.total, g_gan_t), cc_s.total),
            nn::add(nn::add(vae_t.total, g_gan_s), cc_t.total));
        auto gtr = ground_truth_preservation(gt, cc_s.translated, w);
        for (auto& [name, term] : gtr.terms) parts.log(name, term);
        if (gt.any()) {
            parts.log("gt_total", gtr.total);
            total = nn::add(total, gtr.total);
        }
        parts.generator_total = total;
        parts.log("g_total", total);
    }
    return parts;
}

template <typename T>
ObjectiveParts<T> unit_objective(const UnitNets<T>& nets, const nn::Var<T>& x_s,
                                 const nn::Var<T>& x_t, const UnitNoise<T>& noise,
                                 const LossWeights& w, Phase phase) {
    return unit_gantruth_objective(nets, GtSupervision<T>{}, x_s, x_t, noise, w, phase);
}

} // namespace gantruth
