#include "gantruth/estimators.hpp"

#include <algorithm>
#include <ostream>

#include "gantruth/checkpoint.hpp"
#include "gantruth/eval_suite.hpp"
#include "gantruth/nn/adam.hpp"

namespace gantruth {

const char* estimator_kind_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::kSemseg: return "semseg";
        case EstimatorKind::kDisparity: return "disparity";
        case EstimatorKind::kInstance: return "instance";
    }
    return "?";
}

EstimatorKind estimator_kind_from_name(const std::string& name) {
    if (name == "semseg") return EstimatorKind::kSemseg;
    if (name == "disparity") return EstimatorKind::kDisparity;
    if (name == "instance") return EstimatorKind::kInstance;
    throw UsageError(cat("unknown estimator kind '", name, "' (semseg|disparity|instance)"));
}

const nn::NamedParams<float>& EstimatorBundle::params() const {
    switch (kind) {
        case EstimatorKind::kSemseg: return seg.params();
        case EstimatorKind::kDisparity: return disp.params();
        case EstimatorKind::kInstance: return inst.params();
    }
    fail("estimator: bad kind");
}

nn::NamedParams<float>& EstimatorBundle::mutable_params() {
    return const_cast<nn::NamedParams<float>&>(params());
}

void EstimatorBundle::freeze() {
    if (frozen_) return;  // freezing twice is a no-op
    for (auto& [name, var] : mutable_params().items) var.freeze();
    frozen_ = true;
}

uint64_t params_checksum(const nn::NamedParams<float>& params) {
    std::vector<const std::pair<std::string, nn::Var<float>>*> sorted;
    for (const auto& item : params.items) sorted.push_back(&item);
    std::sort(sorted.begin(), sorted.end(),
              [](auto* a, auto* b) { return a->first < b->first; });
    uint64_t h = 0xcbf29ce484222325ull;
    for (auto* item : sorted) {
        h = fnv1a64(item->first.data(), item->first.size(), h);
        const auto& val = item->second.value();
        h = fnv1a64(val.data(), val.size() * sizeof(float), h);
    }
    return h;
}

uint64_t EstimatorBundle::checksum() const { return params_checksum(params()); }

nn::Var<float> EstimatorBundle::forward_semseg(const nn::Var<float>& x) const {
    GT_REQUIRE(kind == EstimatorKind::kSemseg, "estimator: not a semseg bundle");
    return seg(x);
}

nn::Var<float> EstimatorBundle::forward_disparity(const nn::Var<float>& x) const {
    GT_REQUIRE(kind == EstimatorKind::kDisparity, "estimator: not a disparity bundle");
    return disp(x);
}

std::vector<InstancePrediction<float>> EstimatorBundle::forward_instances(
    const nn::Var<float>& x, const std::vector<PixelBox>& boxes) const {
    GT_REQUIRE(kind == EstimatorKind::kInstance, "estimator: not an instance bundle");
    return inst.heads(x, boxes);
}

std::vector<float> EstimatorBundle::estimate_logits(const ImageBatch& x) const {
    nn::NoGradGuard ng;
    return forward_semseg(batch_to_var(x)).value();
}

std::vector<float> EstimatorBundle::estimate_disparity(const ImageBatch& x) const {
    nn::NoGradGuard ng;
    return forward_disparity(batch_to_var(x)).value();
}

LabelMap EstimatorBundle::predict_labels(const ImageU8& image) const {
    ImageBatch b = to_batch(image);
    std::vector<float> logits = estimate_logits(b);
    int k = seg.num_classes();
    size_t plane = size_t(b.h) * size_t(b.w);
    LabelMap out(b.h, b.w);
    for (size_t px = 0; px < plane; ++px) {
        int best = 0;
        float bv = logits[px];
        for (int c = 1; c < k; ++c) {
            float v = logits[size_t(c) * plane + px];
            if (v > bv) {
                bv = v;
                best = c;
            }
        }
        out.ids[px] = uint8_t(taxonomy[size_t(best)]);
    }
    return out;
}

std::vector<InstanceTarget> make_instance_targets(const SceneGroundTruth& gt,
                                                  const LabelMapping& mapping,
                                                  const std::vector<int>& thing_ids,
                                                  int mask_size) {
    std::vector<InstanceTarget> targets;
    for (const auto& inst : gt.instances) {
        InstanceTarget t;
        t.box = {double(inst.box.x0), double(inst.box.y0), double(inst.box.x1),
                 double(inst.box.y1)};
        t.mask_size = mask_size;
        t.mask.assign(size_t(mask_size) * mask_size, 0);
        auto mapped = mapping.target_of(inst.class_id);
        if (mapped.has_value()) {
            auto it = std::find(thing_ids.begin(), thing_ids.end(), *mapped);
            GT_REQUIRE(it != thing_ids.end(), "instance class ", *mapped,
                       " missing from the estimator's thing taxonomy");
            t.class_index = int(it - thing_ids.begin());
            int bw = inst.box.x1 - inst.box.x0, bh = inst.box.y1 - inst.box.y0;
            for (int i = 0; i < mask_size; ++i) {
                int sy = inst.box.y0 + std::min(bh - 1, int((double(i) + 0.5) * bh / mask_size));
                for (int j = 0; j < mask_size; ++j) {
                    int sx = inst.box.x0 +
                             std::min(bw - 1, int((double(j) + 0.5) * bw / mask_size));
                    t.mask[size_t(i) * mask_size + j] =
                        inst.mask[size_t(sy) * gt.semantic.w + sx];
                }
            }
        }
        targets.push_back(std::move(t));
    }
    return targets;
}

namespace {

ImageBatch gather_batch(const std::vector<ImageU8>& images, const std::vector<size_t>& idx) {
    GT_REQUIRE(!idx.empty(), "gather_batch: empty index list");
    ImageBatch b(int(idx.size()), 3, images[idx[0]].h, images[idx[0]].w);
    for (size_t i = 0; i < idx.size(); ++i) {
        const ImageU8& img = images[idx[i]];
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                for (int c = 0; c < 3; ++c)
                    b.at(int(i), c, y, x) = u8_to_signed(img.at(y, x, c));
    }
    return b;
}

struct LoadedSamples {
    std::vector<ImageU8> images;  // target-domain renders
    std::vector<LabelMap> labels;  // remapped into the target taxonomy
    std::vector<DisparityMap> disparity;
    std::vector<SceneGroundTruth> gt;
};

LoadedSamples load_samples(const Dataset& dataset, const LabelMapping& mapping) {
    GT_REQUIRE(dataset.size() > 0, "pretrain: dataset is empty");
    GT_REQUIRE(dataset.has_target(), "pretrain: dataset has no target-domain images");
    GT_REQUIRE(dataset.has_gt(), "pretrain: dataset has no ground truth");
    LoadedSamples s;
    for (size_t i = 0; i < dataset.size(); ++i) {
        s.images.push_back(dataset.load_target(i));
        SceneGroundTruth gt = dataset.load_gt(i);
        s.labels.push_back(remap(gt.semantic, mapping));
        s.disparity.push_back(gt.disparity);
        s.gt.push_back(std::move(gt));
    }
    return s;
}

} // namespace

std::vector<int> labels_to_taxonomy_indices(const LabelMap& labels,
                                            const std::vector<int>& taxonomy, int ignore_index) {
    std::array<int, 256> lut;
    lut.fill(-2);
    lut[size_t(ignore_index)] = ignore_index;
    for (size_t i = 0; i < taxonomy.size(); ++i) lut[size_t(taxonomy[i])] = int(i);
    std::vector<int> out(labels.ids.size());
    for (size_t i = 0; i < labels.ids.size(); ++i) {
        int v = lut[labels.ids[i]];
        GT_REQUIRE(v != -2, "label id ", int(labels.ids[i]), " outside the estimator taxonomy");
        out[i] = v;
    }
    return out;
}

EstimatorBundle pretrain_estimator(EstimatorKind kind, const Dataset& dataset,
                                   const PretrainConfig& config, std::ostream* log) {
    GT_REQUIRE(config.steps > 0 && config.batch_size > 0, "pretrain: bad step/batch config");
    LabelMapping mapping = load_mapping(config.mapping);
    LoadedSamples data = load_samples(dataset, mapping);

    size_t n = data.images.size();
    size_t val_count = std::max<size_t>(1, size_t(std::llround(config.val_fraction * double(n))));
    GT_REQUIRE(val_count < n, "pretrain: not enough samples for a train/val split (", n, ")");
    size_t train_count = n - val_count;

    EstimatorBundle bundle;
    bundle.kind = kind;
    bundle.ignore_index = mapping.ignore_index();
    bundle.base_channels = config.base_channels;
    Rng rng(config.seed ^ 0x5eed0e57113a70f5ull);
    std::vector<int> thing_ids = toy_target::thing_ids();
    if (kind == EstimatorKind::kSemseg) {
        bundle.taxonomy = mapping.target_ids();
        bundle.seg = SegNet<float>(int(bundle.taxonomy.size()), config.base_channels, rng);
    } else if (kind == EstimatorKind::kDisparity) {
        bundle.disp = DispNet<float>(config.base_channels, rng);
    } else {
        bundle.taxonomy = thing_ids;
        bundle.inst = InstanceNet<float>(int(thing_ids.size()), config.base_channels, rng);
    }

    nn::Adam<float> opt(bundle.params().vars(),
                        {config.lr, config.beta1, config.beta2, 1e-8});

    // indices of training samples usable for the instance task
    std::vector<size_t> inst_pool;
    if (kind == EstimatorKind::kInstance) {
        for (size_t i = 0; i < train_count; ++i) {
            auto keep = instance_keep_flags(
                [&] {
                    std::vector<int> ids;
                    for (const auto& in : data.gt[i].instances) ids.push_back(in.class_id);
                    return ids;
                }(),
                mapping);
            if (std::any_of(keep.begin(), keep.end(), [](bool b) { return b; }))
                inst_pool.push_back(i);
        }
        GT_REQUIRE(!inst_pool.empty(), "pretrain: no training sample carries a kept instance");
    }

    for (int step = 1; step <= config.steps; ++step) {
        opt.zero_grad();
        nn::Var<float> loss;
        if (kind == EstimatorKind::kInstance) {
            size_t pick = inst_pool[size_t(rng.uniform_int(0, int64_t(inst_pool.size()) - 1))];
            ImageBatch xb = gather_batch(data.images, {pick});
            const auto& gt = data.gt[pick];
            std::vector<PixelBox> boxes;
            std::vector<int> ids;
            for (const auto& in : gt.instances) {
                boxes.push_back(in.box);
                ids.push_back(in.class_id);
            }
            auto preds = bundle.inst.heads(batch_to_var(xb), boxes);
            auto targets = make_instance_targets(gt, mapping, thing_ids, InstanceNet<float>::kMaskSize);
            loss = gt_instance_loss(preds, targets, instance_keep_flags(ids, mapping));
        } else {
            std::vector<size_t> idx;
            for (int b = 0; b < config.batch_size; ++b)
                idx.push_back(size_t(rng.uniform_int(0, int64_t(train_count) - 1)));
            ImageBatch xb = gather_batch(data.images, idx);
            nn::Var<float> x = batch_to_var(xb);
            if (kind == EstimatorKind::kSemseg) {
                std::vector<int> labels;
                for (size_t i : idx) {
                    auto li = labels_to_taxonomy_indices(data.labels[i], bundle.taxonomy,
                                                bundle.ignore_index);
                    labels.insert(labels.end(), li.begin(), li.end());
                }
                loss = nn::softmax_cross_entropy(bundle.seg(x), labels, bundle.ignore_index).loss;
            } else {
                // relative-error weighting: the validation metric is abs-rel,
                // and near-horizon ground pixels carry disparities well below
                // one pixel where uniform MAE barely pulls
                std::vector<float> gt, wgt;
                for (size_t i : idx)
                    for (float v : data.disparity[i].d) {
                        gt.push_back(v);
                        wgt.push_back(1.f / (v + 0.25f));
                    }
                nn::Var<float> pred = bundle.disp(x);
                auto gt_const = nn::Var<float>::constant(pred.shape(), std::move(gt));
                auto w_const = nn::Var<float>::constant(pred.shape(), std::move(wgt));
                loss = nn::mean(nn::mul(nn::vabs(nn::sub(pred, gt_const)), w_const));
            }
        }
        GT_REQUIRE(std::isfinite(double(loss.item())), "pretrain: non-finite loss at step ", step);
        nn::backward(loss);
        opt.step();
        if (log && (step % config.log_every == 0 || step == 1))
            (*log) << "pretrain " << estimator_kind_name(kind) << " step " << step << " loss "
                   << loss.item() << "\n";
    }

    // held-out validation and floor check
    std::string metric_name;
    double metric = 0;
    bool ok = false;
    if (kind == EstimatorKind::kSemseg) {
        ConfusionMatrix cm(int(bundle.taxonomy.size()));
        for (size_t i = train_count; i < n; ++i) {
            LabelMap pred = bundle.predict_labels(data.images[i]);
            std::vector<int> p = labels_to_taxonomy_indices(pred, bundle.taxonomy, bundle.ignore_index);
            std::vector<int> t =
                labels_to_taxonomy_indices(data.labels[i], bundle.taxonomy, bundle.ignore_index);
            cm.accumulate(p, t, bundle.ignore_index);
        }
        auto r = miou(cm);
        GT_REQUIRE(r.miou.has_value(), "pretrain: validation mIOU undefined");
        metric_name = "miou";
        metric = *r.miou;
        ok = metric >= config.semseg_miou_floor;
    } else if (kind == EstimatorKind::kDisparity) {
        double acc = 0;
        long cnt = 0;
        for (size_t i = train_count; i < n; ++i) {
            ImageBatch xb = gather_batch(data.images, {i});
            std::vector<float> pred = bundle.estimate_disparity(xb);
            for (size_t px = 0; px < pred.size(); ++px) {
                float g = data.disparity[i].d[px];
                if (g <= 0.f) continue;
                acc += std::abs(double(pred[px]) - double(g)) / double(g);
                ++cnt;
            }
        }
        GT_REQUIRE(cnt > 0, "pretrain: no valid disparity pixels in validation split");
        metric_name = "abs_rel";
        metric = acc / double(cnt);
        ok = metric <= config.disp_abs_rel_ceiling;
    } else {
        double acc = 0;
        long cnt = 0;
        for (size_t i = train_count; i < n; ++i) {
            const auto& gt = data.gt[i];
            if (gt.instances.empty()) continue;
            std::vector<PixelBox> boxes;
            std::vector<int> ids;
            for (const auto& in : gt.instances) {
                boxes.push_back(in.box);
                ids.push_back(in.class_id);
            }
            auto keep = instance_keep_flags(ids, mapping);
            auto targets = make_instance_targets(gt, mapping, thing_ids, InstanceNet<float>::kMaskSize);
            nn::NoGradGuard ng;
            ImageBatch xb = gather_batch(data.images, {i});
            auto preds = bundle.inst.heads(batch_to_var(xb), boxes);
            for (size_t j = 0; j < preds.size(); ++j) {
                if (!keep[j]) continue;
                const auto& mp = preds[j].mask_probs.value();
                for (size_t px = 0; px < mp.size(); ++px) {
                    double p = std::clamp(double(mp[px]), kProbEps, 1.0 - kProbEps);
                    double t = targets[j].mask[px] ? 1.0 : 0.0;
                    acc += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
                    ++cnt;
                }
            }
        }
        GT_REQUIRE(cnt > 0, "pretrain: no kept instances in validation split");
        metric_name = "mask_bce";
        metric = acc / double(cnt);
        ok = metric <= config.instance_bce_ceiling;
    }
    GT_REQUIRE(ok, "pretrain: ", estimator_kind_name(kind), " validation ", metric_name, " = ",
               metric, " misses the configured floor within the step budget");

    bundle.provenance = {{"dataset_hash", hex64(dataset.manifest_hash())},
                         {"steps", config.steps},
                         {"seed", config.seed},
                         {"validation_metric", metric_name},
                         {"validation_value", metric},
                         {"mapping", mapping.name()}};
    if (log)
        (*log) << "pretrain " << estimator_kind_name(kind) << " done, " << metric_name << " = "
               << metric << "\n";
    bundle.freeze();
    return bundle;
}

void save_estimator(const EstimatorBundle& bundle, const std::string& path) {
    Archive archive;
    archive.manifest["format"] = "estimator";
    archive.manifest["kind"] = estimator_kind_name(bundle.kind);
    archive.manifest["taxonomy"] = bundle.taxonomy;
    archive.manifest["ignore_index"] = bundle.ignore_index;
    archive.manifest["base_channels"] = bundle.base_channels;
    archive.manifest["provenance"] = bundle.provenance;
    archive.manifest["checksum"] = hex64(bundle.checksum());
    for (const auto& [name, var] : bundle.params().items)
        archive.add(name, var.shape(), var.value());
    save_archive(path, archive);
}

EstimatorBundle load_estimator(const std::string& path) {
    Archive archive = load_archive(path);
    GT_REQUIRE(archive.manifest.value("format", "") == "estimator",
               "load_estimator: ", path, " is not an estimator checkpoint");
    EstimatorBundle bundle;
    bundle.kind = estimator_kind_from_name(archive.manifest.at("kind").get<std::string>());
    bundle.taxonomy = archive.manifest.at("taxonomy").get<std::vector<int>>();
    bundle.ignore_index = archive.manifest.at("ignore_index").get<int>();
    bundle.base_channels = archive.manifest.at("base_channels").get<int>();
    bundle.provenance = archive.manifest.at("provenance");
    Rng rng(0);
    if (bundle.kind == EstimatorKind::kSemseg)
        bundle.seg = SegNet<float>(int(bundle.taxonomy.size()), bundle.base_channels, rng);
    else if (bundle.kind == EstimatorKind::kDisparity)
        bundle.disp = DispNet<float>(bundle.base_channels, rng);
    else
        bundle.inst = InstanceNet<float>(int(bundle.taxonomy.size()), bundle.base_channels, rng);
    for (auto& [name, var] : bundle.mutable_params().items) {
        const ArchiveArray& a = archive.find(name);
        GT_REQUIRE(a.shape == var.shape(), "load_estimator: shape mismatch for ", name);
        var.value() = a.data;
    }
    bundle.freeze();
    GT_REQUIRE(hex64(bundle.checksum()) == archive.manifest.at("checksum").get<std::string>(),
               "load_estimator: checksum mismatch in ", path);
    return bundle;
}

} // namespace gantruth
