#include "gantruth/adaptation.hpp"

#include "gantruth/estimators.hpp"
#include "gantruth/nn/adam.hpp"

namespace gantruth {

AdaptationResult adaptation_run(const Dataset& train_data, TaskImageDomain train_domain,
                                const Dataset& target_val, const TaskTrainConfig& config,
                                std::ostream* log) {
    GT_REQUIRE(train_data.size() > 0 && target_val.size() > 0, "adaptation: empty dataset");
    GT_REQUIRE(train_data.has_gt(), "adaptation: training dataset has no ground truth");
    GT_REQUIRE(target_val.has_target() && target_val.has_gt(),
               "adaptation: validation dataset needs target images and ground truth");
    if (train_domain == TaskImageDomain::kSource)
        GT_REQUIRE(train_data.has_source(), "adaptation: training dataset has no source images");
    else
        GT_REQUIRE(train_data.has_target(), "adaptation: training dataset has no target images");

    LabelMapping mapping = load_mapping(config.mapping);
    std::vector<int> taxonomy = mapping.target_ids();

    std::vector<ImageU8> images;
    std::vector<std::vector<int>> labels;
    for (size_t i = 0; i < train_data.size(); ++i) {
        images.push_back(train_domain == TaskImageDomain::kSource ? train_data.load_source(i)
                                                                  : train_data.load_target(i));
        labels.push_back(labels_to_taxonomy_indices(remap(train_data.load_gt(i).semantic, mapping),
                                                    taxonomy, mapping.ignore_index()));
    }
    GT_REQUIRE(images[0].h % 4 == 0 && images[0].w % 4 == 0,
               "adaptation: image size must be divisible by 4");

    Rng rng(config.seed ^ 0xadab7a710aull);
    SegNet<float> net(int(taxonomy.size()), config.base_channels, rng);
    nn::Adam<float> opt(net.params().vars(), {config.lr, 0.9, 0.999, 1e-8});

    for (int step = 1; step <= config.steps; ++step) {
        std::vector<size_t> idx;
        for (int b = 0; b < config.batch_size; ++b)
            idx.push_back(size_t(rng.uniform_int(0, int64_t(images.size()) - 1)));
        ImageBatch xb(int(idx.size()), 3, images[0].h, images[0].w);
        std::vector<int> yb;
        for (size_t i = 0; i < idx.size(); ++i) {
            const ImageU8& img = images[idx[i]];
            for (int y = 0; y < img.h; ++y)
                for (int x = 0; x < img.w; ++x)
                    for (int c = 0; c < 3; ++c)
                        xb.at(int(i), c, y, x) = u8_to_signed(img.at(y, x, c));
            yb.insert(yb.end(), labels[idx[i]].begin(), labels[idx[i]].end());
        }
        opt.zero_grad();
        nn::Var<float> loss =
            nn::softmax_cross_entropy(net(batch_to_var(xb)), yb, mapping.ignore_index()).loss;
        GT_REQUIRE(std::isfinite(double(loss.item())), "adaptation: non-finite loss at step ",
                   step);
        nn::backward(loss);
        opt.step();
        if (log && (step % config.log_every == 0 || step == 1))
            (*log) << "task step " << step << " ce " << loss.item() << "\n";
    }

    // evaluate on held-out target-domain images
    ConfusionMatrix cm(int(taxonomy.size()));
    {
        nn::NoGradGuard ng;
        for (size_t i = 0; i < target_val.size(); ++i) {
            ImageU8 img = target_val.load_target(i);
            ImageBatch xb = to_batch(img);
            nn::Var<float> logits = net(batch_to_var(xb));
            int k = int(taxonomy.size());
            size_t plane = size_t(img.h) * size_t(img.w);
            std::vector<int> pred(plane);
            for (size_t px = 0; px < plane; ++px) {
                int best = 0;
                float bv = logits.value()[px];
                for (int c = 1; c < k; ++c) {
                    float v = logits.value()[size_t(c) * plane + px];
                    if (v > bv) {
                        bv = v;
                        best = c;
                    }
                }
                pred[px] = best;
            }
            std::vector<int> truth = labels_to_taxonomy_indices(
                remap(target_val.load_gt(i).semantic, mapping), taxonomy, mapping.ignore_index());
            cm.accumulate(pred, truth, mapping.ignore_index());
        }
    }
    MiouReport mr = miou(cm);
    AdaptationResult result;
    result.miou = mr.miou;
    result.report.dataset_hash = hex64(target_val.manifest_hash());
    result.report.checkpoint_hash = hex64(train_data.manifest_hash());
    result.report.miou = mr.miou;
    result.report.pixels = mr.evaluated_pixels;
    for (size_t c = 0; c < taxonomy.size(); ++c) {
        std::string name = cat("class_", taxonomy[c]);
        for (const auto& e : mapping.entries())
            if (e.target_id.has_value() && *e.target_id == taxonomy[c]) name = e.target_name;
        result.report.per_class_iou.emplace_back(name, mr.per_class[c]);
    }
    return result;
}

} // namespace gantruth
