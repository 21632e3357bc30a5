#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "gantruth/adaptation.hpp"
#include "gantruth/nn/alloc_tuning.hpp"
#include "gantruth/checkpoint.hpp"
#include "gantruth/config.hpp"
#include "gantruth/grid.hpp"
#include "gantruth/png_io.hpp"
#include "gantruth/trainers.hpp"
#include "gantruth/version.hpp"

namespace fs = std::filesystem;
using namespace gantruth;

namespace {

EstimatorSet load_estimators_for(const ExperimentConfig& cfg, const GtTasks& tasks) {
    EstimatorSet set;
    auto load_if = [&](bool enabled, EstimatorKind kind, std::optional<EstimatorBundle>& slot) {
        if (!enabled) return;
        std::string path = cfg.estimator_path(kind);
        if (path.empty())
            throw UsageError(cat("task ", estimator_kind_name(kind),
                                 " enabled but estimators.", estimator_kind_name(kind),
                                 " is not set in the config"));
        slot = load_estimator(path);
    };
    load_if(tasks.semseg, EstimatorKind::kSemseg, set.semseg);
    load_if(tasks.disparity, EstimatorKind::kDisparity, set.disparity);
    load_if(tasks.instance, EstimatorKind::kInstance, set.instance);
    return set;
}

int cmd_generate(const ExperimentConfig& cfg, const std::string& out, int count, uint64_t seed,
                 const std::string& domains) {
    DatasetDomains d;
    if (domains == "source")
        d = DatasetDomains::kSource;
    else if (domains == "target")
        d = DatasetDomains::kTarget;
    else if (domains == "both")
        d = DatasetDomains::kBoth;
    else
        throw UsageError(cat("--domains must be source|target|both, got '", domains, "'"));
    GT_REQUIRE(count >= 0, "--count must be non-negative");

    GenerateConfig gen = cfg.generate();
    std::vector<SceneSpec> specs;
    for (int i = 0; i < count; ++i) specs.push_back(generate_scene(seed + uint64_t(i), gen));
    DatasetManifest manifest = write_dataset(out, specs, d, cfg.style());
    cfg.echo(out, "generate-data");
    std::cout << "dataset: " << out << "\n"
              << "samples: " << manifest.samples.size() << "\n"
              << "domains: " << domains << "\n"
              << "image:   " << manifest.height << "x" << manifest.width << "\n"
              << "camera:  focal " << manifest.camera.focal_px << "px, baseline "
              << manifest.camera.baseline_m << "m\n";
    return 0;
}

int cmd_pretrain(const ExperimentConfig& cfg, const std::string& kind_name,
                 const std::string& data, const std::string& out) {
    EstimatorKind kind = estimator_kind_from_name(kind_name);
    Dataset dataset(data);
    EstimatorBundle bundle = pretrain_estimator(kind, dataset, cfg.pretrain(), &std::cout);
    fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    save_estimator(bundle, out);
    if (out_path.has_parent_path() && !out_path.parent_path().empty())
        cfg.echo(out_path.parent_path().string(), "pretrain-estimator");
    std::cout << "estimator: " << out << "\n"
              << "kind:      " << estimator_kind_name(kind) << "\n"
              << "metric:    " << bundle.provenance.at("validation_metric").get<std::string>()
              << " = " << bundle.provenance.at("validation_value").get<double>() << "\n"
              << "checksum:  " << hex64(bundle.checksum()) << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& out) {
    TrainerConfig tc = cfg.trainer();
    Dataset source(cfg.data_source());
    Dataset target(cfg.data_target());
    EstimatorSet estimators = load_estimators_for(cfg, tc.tasks);
    Trainer trainer(tc, source, target, std::move(estimators));
    cfg.echo(out, "train");
    size_t params = trainer.all_parameters().count_scalars();
    std::cout << "model:      " << model_family_name(tc.model) << "\n"
              << "tasks:      " << (tc.tasks.any() ? tc.tasks.to_string() : "(none)") << "\n"
              << "parameters: " << params << "\n";
    trainer.run(out, &std::cout);
    std::cout << "final checkpoint: " << out << "/checkpoint_final.ckpt\n";
    return 0;
}

int cmd_translate(const ExperimentConfig& cfg, const std::string& checkpoint,
                  const std::string& data, const std::string& out) {
    Dataset dataset(data);
    translate_dataset(checkpoint, dataset, out, &std::cout);
    cfg.echo(out, "translate");
    std::cout << "translated " << dataset.size() << " images into " << out << "\n";
    return 0;
}

LabelMap semantic_of(const Dataset& d, size_t i) { return d.load_gt(i).semantic; }

int cmd_eval_seg(const ExperimentConfig& cfg, const std::string& truth_dir,
                 const std::string& pred_dir, const std::string& estimator_path,
                 const std::string& domain, const std::string& out) {
    Dataset truth(truth_dir);
    LabelMapping mapping = load_mapping(cfg.mapping_name());
    std::vector<int> taxonomy = mapping.target_ids();
    ConfusionMatrix cm(int(taxonomy.size()));
    std::string pred_desc;

    if (!pred_dir.empty()) {
        Dataset pred(pred_dir);
        GT_REQUIRE(pred.size() == truth.size(), "evaluate-segmentation: sample count mismatch");
        pred_desc = hex64(pred.manifest_hash());
        for (size_t i = 0; i < truth.size(); ++i) {
            auto p = labels_to_taxonomy_indices(remap(semantic_of(pred, i), mapping), taxonomy,
                                                mapping.ignore_index());
            auto t = labels_to_taxonomy_indices(remap(semantic_of(truth, i), mapping), taxonomy,
                                                mapping.ignore_index());
            cm.accumulate(p, t, mapping.ignore_index());
        }
    } else if (!estimator_path.empty()) {
        EstimatorBundle bundle = load_estimator(estimator_path);
        GT_REQUIRE(bundle.kind == EstimatorKind::kSemseg,
                   "evaluate-segmentation: estimator is not a semseg bundle");
        pred_desc = hex64(bundle.checksum());
        for (size_t i = 0; i < truth.size(); ++i) {
            ImageU8 img = domain == "source" ? truth.load_source(i) : truth.load_target(i);
            LabelMap pred_ids = bundle.predict_labels(img);
            auto p = labels_to_taxonomy_indices(pred_ids, taxonomy, mapping.ignore_index());
            auto t = labels_to_taxonomy_indices(remap(semantic_of(truth, i), mapping), taxonomy,
                                                mapping.ignore_index());
            cm.accumulate(p, t, mapping.ignore_index());
        }
    } else {
        throw UsageError("evaluate-segmentation needs --pred or --estimator");
    }

    MiouReport mr = miou(cm);
    EvalReport report;
    report.dataset_hash = hex64(truth.manifest_hash());
    report.checkpoint_hash = pred_desc;
    report.miou = mr.miou;
    report.pixels = mr.evaluated_pixels;
    for (size_t c = 0; c < taxonomy.size(); ++c) {
        std::string name = cat("class_", taxonomy[c]);
        for (const auto& e : mapping.entries())
            if (e.target_id.has_value() && *e.target_id == taxonomy[c]) name = e.target_name;
        report.per_class_iou.emplace_back(name, mr.per_class[c]);
    }
    std::cout << report.to_text();
    if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream(out + "/segmentation_report.json") << report.to_json() << "\n";
        std::ofstream(out + "/segmentation_report.txt") << report.to_text();
        cfg.echo(out, "evaluate-segmentation");
    }
    return 0;
}

int cmd_eval_depth(const ExperimentConfig& cfg, const std::string& truth_dir,
                   const std::string& pred_dir, const std::string& estimator_path,
                   const std::string& domain, const std::string& out) {
    Dataset truth(truth_dir);
    std::vector<float> pred, gt;
    std::vector<uint8_t> valid;
    std::string pred_desc;
    auto push_gt = [&](const DisparityMap& d) {
        for (float v : d.d) {
            gt.push_back(v);
            valid.push_back(v > 0.f ? 1 : 0);
        }
    };
    if (!pred_dir.empty()) {
        Dataset predd(pred_dir);
        GT_REQUIRE(predd.size() == truth.size(), "evaluate-depth: sample count mismatch");
        pred_desc = hex64(predd.manifest_hash());
        for (size_t i = 0; i < truth.size(); ++i) {
            SceneGroundTruth tg = truth.load_gt(i);
            SceneGroundTruth pg = predd.load_gt(i);
            push_gt(tg.disparity);
            // disparity 0 in a prediction marks sky; it never enters the metric
            for (float v : pg.disparity.d) pred.push_back(v);
        }
    } else if (!estimator_path.empty()) {
        EstimatorBundle bundle = load_estimator(estimator_path);
        GT_REQUIRE(bundle.kind == EstimatorKind::kDisparity,
                   "evaluate-depth: estimator is not a disparity bundle");
        pred_desc = hex64(bundle.checksum());
        for (size_t i = 0; i < truth.size(); ++i) {
            ImageU8 img = domain == "source" ? truth.load_source(i) : truth.load_target(i);
            std::vector<float> p = bundle.estimate_disparity(to_batch(img));
            pred.insert(pred.end(), p.begin(), p.end());
            push_gt(truth.load_gt(i).disparity);
        }
    } else {
        throw UsageError("evaluate-depth needs --pred or --estimator");
    }
    double err = scale_aligned_abs_rel(pred, gt, valid, cfg.depth_alignment());
    nlohmann::json j;
    j["dataset_hash"] = hex64(truth.manifest_hash());
    j["prediction"] = pred_desc;
    j["scale_aligned_abs_rel"] = err;
    std::cout << "scale_aligned_abs_rel: " << err << "\n";
    if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream(out + "/depth_report.json") << j.dump(2) << "\n";
        cfg.echo(out, "evaluate-depth");
    }
    return 0;
}

int cmd_adapt_eval(const ExperimentConfig& cfg, const std::string& translated_dir,
                   const std::string& reference_dir, const std::string& val_dir,
                   const std::string& out) {
    Dataset translated(translated_dir);
    Dataset reference(reference_dir);
    Dataset val(val_dir);
    GT_REQUIRE(reference.has_target(),
               "adapt-eval: the reference dataset needs target images for the ceiling run");
    TaskTrainConfig task = cfg.task();

    auto row = [&](const char* name, const Dataset& data, TaskImageDomain domain) {
        AdaptationResult r = adaptation_run(data, domain, val, task, &std::cout);
        GT_REQUIRE(r.miou.has_value(), "adapt-eval: mIOU undefined for ", name);
        return *r.miou;
    };
    double source_only = row("source-only", reference, TaskImageDomain::kSource);
    double translated_miou = row("translated", translated, TaskImageDomain::kSource);
    double ceiling = row("target-ceiling", reference, TaskImageDomain::kTarget);

    nlohmann::json j;
    j["source_only"] = source_only;
    j["translated"] = translated_miou;
    j["target_ceiling"] = ceiling;
    std::cout << "mIOU source-only:    " << source_only << "\n"
              << "mIOU translated:     " << translated_miou << "\n"
              << "mIOU target-ceiling: " << ceiling << "\n";
    if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream(out + "/adaptation_report.json") << j.dump(2) << "\n";
        cfg.echo(out, "adapt-eval");
    }
    return 0;
}

int cmd_grid(const ExperimentConfig& cfg, const std::vector<std::string>& dataset_dirs,
             int samples, uint64_t seed, const std::string& out) {
    GT_REQUIRE(!dataset_dirs.empty(), "grid: at least one dataset required");
    GT_REQUIRE(samples >= 1, "grid: --samples must be positive");
    std::vector<Dataset> datasets;
    for (const auto& d : dataset_dirs) datasets.emplace_back(d);

    // sample ids from the first dataset; all others must carry the same ids
    Rng rng(seed ^ 0x617269d0ull);
    const auto& base = datasets[0].manifest().samples;
    GT_REQUIRE(!base.empty(), "grid: first dataset is empty");
    std::vector<size_t> picks;
    for (int i = 0; i < samples; ++i)
        picks.push_back(size_t(rng.uniform_int(0, int64_t(base.size()) - 1)));

    std::vector<std::pair<std::string, std::vector<ImageU8>>> rows;
    for (auto& ds : datasets) {
        std::vector<std::string> missing;
        std::vector<ImageU8> images;
        for (size_t p : picks) {
            const std::string& id = base[p].id;
            size_t found = ds.size();
            for (size_t i = 0; i < ds.size(); ++i)
                if (ds.manifest().samples[i].id == id) found = i;
            if (found == ds.size()) {
                missing.push_back(id);
                continue;
            }
            images.push_back(ds.has_source() ? ds.load_source(found) : ds.load_target(found));
        }
        if (!missing.empty()) {
            std::string list;
            for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
            fail("grid: dataset ", ds.root(), " is missing sample ids: ", list);
        }
        rows.emplace_back(fs::path(ds.root()).filename().string(), std::move(images));
    }
    ImageU8 sheet = compose_grid(rows);
    fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_png_rgb8(out, sheet);
    (void)cfg;
    std::cout << "grid: " << out << " (" << rows.size() << " rows x " << samples << " samples)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    nn::tune_allocator_for_training();
    CLI::App app{"gantruth: unpaired image translation with ground-truth preservation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "experiment config file (JSON)");
    app.add_option("--set", overrides, "override a config key, e.g. --set trainer.seed=7");
    app.fallthrough();  // lets --config / --set appear after the subcommand

    auto* gen = app.add_subcommand("generate-data", "render a procedural two-domain dataset");
    std::string gen_out, gen_domains = "both";
    int gen_count = 100;
    uint64_t gen_seed = 0;
    gen->add_option("--out", gen_out)->required();
    gen->add_option("--count", gen_count);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--domains", gen_domains);

    auto* pre = app.add_subcommand("pretrain-estimator", "train and freeze a label estimator");
    std::string pre_kind, pre_data, pre_out;
    pre->add_option("--kind", pre_kind)->required();
    pre->add_option("--data", pre_data)->required();
    pre->add_option("--out", pre_out)->required();

    auto* trn = app.add_subcommand("train", "train a translation model");
    std::string trn_out;
    trn->add_option("--out", trn_out)->required();

    auto* tra = app.add_subcommand("translate", "translate a source dataset with a checkpoint");
    std::string tra_ckpt, tra_data, tra_out;
    tra->add_option("--checkpoint", tra_ckpt)->required();
    tra->add_option("--data", tra_data)->required();
    tra->add_option("--out", tra_out)->required();

    auto* evs = app.add_subcommand("evaluate-segmentation", "mIOU of predictions against truth");
    std::string evs_truth, evs_pred, evs_est, evs_domain = "target", evs_out;
    evs->add_option("--truth", evs_truth)->required();
    evs->add_option("--pred", evs_pred);
    evs->add_option("--estimator", evs_est);
    evs->add_option("--domain", evs_domain);
    evs->add_option("--out", evs_out);

    auto* evd = app.add_subcommand("evaluate-depth", "scale-aligned absolute relative error");
    std::string evd_truth, evd_pred, evd_est, evd_domain = "target", evd_out;
    evd->add_option("--truth", evd_truth)->required();
    evd->add_option("--pred", evd_pred);
    evd->add_option("--estimator", evd_est);
    evd->add_option("--domain", evd_domain);
    evd->add_option("--out", evd_out);

    auto* ade = app.add_subcommand("adapt-eval", "two-step adaptation benchmark (three runs)");
    std::string ade_translated, ade_reference, ade_val, ade_out;
    ade->add_option("--translated", ade_translated)->required();
    ade->add_option("--reference-source", ade_reference)->required();
    ade->add_option("--target-val", ade_val)->required();
    ade->add_option("--out", ade_out);

    auto* grd = app.add_subcommand("grid", "compose a labeled qualitative image grid");
    std::vector<std::string> grd_datasets;
    int grd_samples = 4;
    uint64_t grd_seed = 0;
    std::string grd_out;
    grd->add_option("--datasets", grd_datasets)->required()->expected(-1);
    grd->add_option("--samples,--rows", grd_samples, "samples per dataset row");
    grd->add_option("--seed", grd_seed);
    grd->add_option("--out", grd_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = ExperimentConfig::load(config_path, overrides);
        if (gen->parsed()) return cmd_generate(cfg, gen_out, gen_count, gen_seed, gen_domains);
        if (pre->parsed()) return cmd_pretrain(cfg, pre_kind, pre_data, pre_out);
        if (trn->parsed()) return cmd_train(cfg, trn_out);
        if (tra->parsed()) return cmd_translate(cfg, tra_ckpt, tra_data, tra_out);
        if (evs->parsed())
            return cmd_eval_seg(cfg, evs_truth, evs_pred, evs_est, evs_domain, evs_out);
        if (evd->parsed())
            return cmd_eval_depth(cfg, evd_truth, evd_pred, evd_est, evd_domain, evd_out);
        if (ade->parsed()) return cmd_adapt_eval(cfg, ade_translated, ade_reference, ade_val, ade_out);
        if (grd->parsed()) return cmd_grid(cfg, grd_datasets, grd_samples, grd_seed, grd_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
