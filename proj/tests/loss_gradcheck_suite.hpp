#pragma once

// Finite-difference checks for every loss in the bank, shared between the
// unit tests and the acceptance suite. Stub networks use smooth activations
// (conv / instance norm / tanh / sigmoid / softplus) so central differences
// are well posed; kinked losses (MAE, smooth-L1) get inputs sampled away
// from their kinks.

#include <functional>
#include <map>

#include "gantruth/loss_bank.hpp"
#include "gantruth/nn/norm.hpp"
#include "gantruth/translation_nets.hpp"
#include "gradcheck_util.hpp"

namespace gantruth::testutil {

struct LossCheckReport {
    std::map<std::string, GradCheckResult> per_loss;
    double worst = 0;
    std::string worst_loss;

    void note(const std::string& name, const GradCheckResult& r) {
        auto& slot = per_loss[name];
        if (r.worst_rel_error >= slot.worst_rel_error) {
            slot.worst_rel_error = r.worst_rel_error;
            slot.worst_location = r.worst_location;
        }
        slot.coords_checked += r.coords_checked;
        if (r.worst_rel_error > worst) {
            worst = r.worst_rel_error;
            worst_loss = name;
        }
    }
};

inline nn::Var<double> grad_leaf(Rng& rng, nn::Shape shape, double lo, double hi) {
    std::vector<double> data(nn::numel_of(shape));
    for (auto& v : data) v = rng.uniform(lo, hi);
    return nn::Var<double>::param(std::move(shape), std::move(data));
}

// smooth tiny translator stand-in: conv encoder, conv+tanh decoder
struct SmoothNets {
    nn::NamedParams<double> reg;
    nn::Conv2d<double> enc, dec;
    SmoothNets(Rng& rng, int ch, int latent) {
        enc = nn::Conv2d<double>(rng, reg, "enc", ch, latent, 3, 1, 1);
        dec = nn::Conv2d<double>(rng, reg, "dec", latent, ch, 3, 1, 1);
    }
    std::function<nn::Var<double>(const nn::Var<double>&)> enc_fn() const {
        return [this](const nn::Var<double>& x) { return enc(x); };
    }
    std::function<nn::Var<double>(const nn::Var<double>&)> dec_fn() const {
        return [this](const nn::Var<double>& z) { return nn::vtanh(dec(z)); };
    }
};

// one discriminator scale: sigmoid(conv), smooth everywhere
struct SmoothDisc {
    nn::NamedParams<double> reg;
    nn::Conv2d<double> conv;
    SmoothDisc(Rng& rng, int ch) { conv = nn::Conv2d<double>(rng, reg, "disc", ch, 1, 3, 2, 1); }
    DiscFn<double> fn() const {
        return [this](const nn::Var<double>& x) {
            return std::vector<nn::Var<double>>{nn::sigmoid(conv(x))};
        };
    }
};

inline LossCheckReport run_loss_gradchecks(int instances_per_loss, uint64_t seed) {
    LossCheckReport report;
    Rng rng(seed);

    for (int inst = 0; inst < instances_per_loss; ++inst) {
        // -- gan_loss_discriminator / generator: probabilities away from the clamp
        {
            auto d_real = grad_leaf(rng, {2, 3}, 0.05, 0.95);
            auto d_fake = grad_leaf(rng, {2, 3}, 0.05, 0.95);
            report.note("gan_loss_discriminator",
                        gradcheck({d_real, d_fake},
                                  [&] { return gan_loss_discriminator(d_real, d_fake); }, rng));
            report.note("gan_loss_generator",
                        gradcheck({d_fake}, [&] { return gan_loss_generator(d_fake); }, rng));
        }
        // -- kl_to_standard_normal
        {
            auto mean = grad_leaf(rng, {2, 3, 2, 2}, -1.5, 1.5);
            report.note("kl_to_standard_normal",
                        gradcheck({mean}, [&] { return kl_to_standard_normal(mean); }, rng));
        }
        // -- vae_loss w.r.t. input and both nets
        {
            SmoothNets nets(rng, 2, 3);
            auto x = grad_leaf(rng, {1, 2, 4, 4}, -0.9, 0.9);
            auto noise = gaussian_like<double>(rng, {1, 3, 4, 4});
            LossWeights w;
            w.kl = 0.3;
            w.ll = 4.0;
            std::vector<nn::Var<double>> inputs{x};
            for (auto& [n, v] : nets.reg.items) inputs.push_back(v);
            report.note("vae_loss", gradcheck(inputs,
                                              [&] {
                                                  return vae_loss<double>(nets.enc_fn(),
                                                                          nets.dec_fn(), x, noise,
                                                                          w)
                                                      .total;
                                              },
                                              rng));
        }
        // -- cycle_consistency_loss across two net pairs
        {
            SmoothNets a(rng, 2, 3), b(rng, 2, 3);
            auto x = grad_leaf(rng, {1, 2, 4, 4}, -0.9, 0.9);
            auto n1 = gaussian_like<double>(rng, {1, 3, 4, 4});
            auto n2 = gaussian_like<double>(rng, {1, 3, 4, 4});
            LossWeights w;
            w.kl = 0.2;
            w.ll = 3.0;
            std::vector<nn::Var<double>> inputs{x};
            for (auto& [n, v] : a.reg.items) inputs.push_back(v);
            for (auto& [n, v] : b.reg.items) inputs.push_back(v);
            report.note("cycle_consistency_loss",
                        gradcheck(inputs,
                                  [&] {
                                      return cycle_consistency_loss<double>(
                                                 a.enc_fn(), a.dec_fn(), b.enc_fn(), b.dec_fn(),
                                                 x, n1, n2, w)
                                          .total;
                                  },
                                  rng));
        }
        // -- gt_semseg_loss w.r.t. logits
        {
            auto logits = grad_leaf(rng, {1, 4, 3, 3}, -2, 2);
            std::vector<int> labels(9);
            for (auto& l : labels) l = rng.uniform() < 0.2 ? 255 : int(rng.uniform_int(0, 3));
            labels[0] = 1;  // at least one valid pixel
            report.note("gt_semseg_loss",
                        gradcheck({logits},
                                  [&] { return gt_semseg_loss(logits, labels, 255).loss; }, rng));
        }
        // -- gt_disparity_loss, sampled away from |pred*c - gt| = 0
        {
            auto pred = grad_leaf(rng, {1, 1, 3, 3}, 0.5, 4.0);
            double c = rng.uniform(0.5, 2.0);
            std::vector<double> gt;
            std::vector<uint8_t> valid;
            for (size_t i = 0; i < 9; ++i) {
                double offset = (rng.uniform() < 0.5 ? 1 : -1) * rng.uniform(0.05, 1.0);
                gt.push_back(pred.value()[i] * c + offset);
                valid.push_back(rng.uniform() < 0.8 ? 1 : 0);
            }
            valid[0] = 1;
            report.note("gt_disparity_loss",
                        gradcheck({pred},
                                  [&] {
                                      return gt_disparity_loss(pred, gt, valid, c).loss;
                                  },
                                  rng));
        }
        // -- gt_instance_loss w.r.t. head outputs (mask probs via sigmoid)
        {
            const int m = 4;
            auto cls = grad_leaf(rng, {1, 2}, -2, 2);
            auto box = grad_leaf(rng, {1, 4}, -0.8, 0.8);  // inside the smooth-L1 bowl
            auto mask_raw = grad_leaf(rng, {1, 1, m, m}, -2.5, 2.5);
            InstanceTarget tgt;
            tgt.class_index = int(rng.uniform_int(0, 1));
            tgt.box = {1, 1, 5, 5};
            tgt.mask_size = m;
            for (int i = 0; i < m * m; ++i) tgt.mask.push_back(rng.uniform() < 0.5 ? 1 : 0);
            report.note("gt_instance_loss",
                        gradcheck({cls, box, mask_raw},
                                  [&] {
                                      std::vector<InstancePrediction<double>> preds(1);
                                      preds[0].class_logits = cls;
                                      preds[0].box_deltas = box;
                                      preds[0].mask_probs = nn::sigmoid(mask_raw);
                                      return gt_instance_loss(preds, {tgt}, {true});
                                  },
                                  rng));
        }
        // -- semantic_consistency_loss w.r.t. the translated image (the
        //    argmax labels come from a frozen estimator and are constant)
        {
            nn::NamedParams<double> freg;
            nn::Conv2d<double> f(rng, freg, "f", 2, 3, 3, 1, 1);
            for (auto& [n, v] : freg.items) v.freeze();
            auto fs = [&](const nn::Var<double>& v) { return f(v); };
            auto x_s = grad_leaf(rng, {1, 2, 4, 4}, -0.9, 0.9);
            x_s.freeze();
            auto translated = grad_leaf(rng, {1, 2, 4, 4}, -0.9, 0.9);
            report.note("semantic_consistency_loss",
                        gradcheck({translated},
                                  [&] {
                                      return semantic_consistency_loss<double>(fs, x_s,
                                                                               translated);
                                  },
                                  rng));
        }
        // -- gantruth_objective: generator part w.r.t. enc/dec and x_s;
        //    discriminator part w.r.t. disc parameters (its update set)
        {
            SmoothNets nets(rng, 2, 3);
            SmoothDisc disc(rng, 2);
            auto x_s = grad_leaf(rng, {1, 2, 4, 4}, -0.9, 0.9);
            auto x_t = grad_leaf(rng, {1, 2, 4, 4}, -0.9, 0.9);
            x_t.freeze();
            auto nd = gaussian_like<double>(rng, {1, 3, 4, 4});
            auto ng = gaussian_like<double>(rng, {1, 3, 4, 4});
            LossWeights w;
            w.gan = 2.0;
            w.semseg = 3.0;
            GtSupervision<double> gt;
            gt.use_semseg = true;
            nn::NamedParams<double> freg;
            auto fseg = std::make_shared<nn::Conv2d<double>>(rng, freg, "fseg", 2, 4, 3, 1, 1);
            for (auto& [n, v] : freg.items) v.freeze();
            gt.semseg_logits = [fseg](const nn::Var<double>& v) { return (*fseg)(v); };
            gt.semseg_labels = std::vector<int>(16);
            for (auto& l : gt.semseg_labels) l = int(rng.uniform_int(0, 3));

            std::vector<nn::Var<double>> gen_inputs{x_s};
            for (auto& [n, v] : nets.reg.items) gen_inputs.push_back(v);
            report.note("gantruth_objective_generator",
                        gradcheck(gen_inputs,
                                  [&] {
                                      return gantruth_objective<double>(
                                                 nets.enc_fn(), nets.dec_fn(), disc.fn(), gt, x_s,
                                                 x_t, nd, ng, w, Phase::kGenerator)
                                          .generator_total;
                                  },
                                  rng));
            std::vector<nn::Var<double>> disc_inputs;
            for (auto& [n, v] : disc.reg.items) disc_inputs.push_back(v);
            report.note("gantruth_objective_discriminator",
                        gradcheck(disc_inputs,
                                  [&] {
                                      return gantruth_objective<double>(
                                                 nets.enc_fn(), nets.dec_fn(), disc.fn(), gt, x_s,
                                                 x_t, nd, ng, w, Phase::kDiscriminator)
                                          .discriminator_total;
                                  },
                                  rng));
        }
        // -- unit(+gantruth) objective, both parts
        {
            SmoothNets sa(rng, 2, 3), sb(rng, 2, 3);
            SmoothDisc da(rng, 2), db(rng, 2);
            UnitNets<double> nets;
            nets.enc_s = sa.enc_fn();
            nets.dec_s = sa.dec_fn();
            nets.enc_t = sb.enc_fn();
            nets.dec_t = sb.dec_fn();
            nets.disc_s = da.fn();
            nets.disc_t = db.fn();
            auto x_s = grad_leaf(rng, {1, 2, 4, 4}, -0.9, 0.9);
            auto x_t = grad_leaf(rng, {1, 2, 4, 4}, -0.9, 0.9);
            UnitNoise<double> noise;
            for (auto* n : {&noise.d_trans_st, &noise.d_trans_ts, &noise.recon_s, &noise.recon_t,
                            &noise.trans_st, &noise.trans_ts, &noise.cyc_s, &noise.cyc_t})
                *n = gaussian_like<double>(rng, {1, 3, 4, 4});
            LossWeights w;
            w.gan = 1.5;
            w.kl = 0.2;
            w.ll = 2.0;

            std::vector<nn::Var<double>> gen_inputs{x_s, x_t};
            for (auto& [n, v] : sa.reg.items) gen_inputs.push_back(v);
            for (auto& [n, v] : sb.reg.items) gen_inputs.push_back(v);
            report.note("unit_objective_generator",
                        gradcheck(gen_inputs,
                                  [&] {
                                      return unit_objective(nets, x_s, x_t, noise, w,
                                                            Phase::kGenerator)
                                          .generator_total;
                                  },
                                  rng, 1e-5, 4));
            std::vector<nn::Var<double>> disc_inputs;
            for (auto& [n, v] : da.reg.items) disc_inputs.push_back(v);
            for (auto& [n, v] : db.reg.items) disc_inputs.push_back(v);
            report.note("unit_objective_discriminator",
                        gradcheck(disc_inputs,
                                  [&] {
                                      return unit_objective(nets, x_s, x_t, noise, w,
                                                            Phase::kDiscriminator)
                                          .discriminator_total;
                                  },
                                  rng, 1e-5, 4));
        }
    }
    return report;
}

} // namespace gantruth::testutil
