#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "gantruth/checkpoint.hpp"
#include "gantruth/trainers.hpp"

using namespace gantruth;
namespace fs = std::filesystem;

namespace {

const std::string& train_dataset() {
    static std::string root = [] {
        fs::path dir = fs::temp_directory_path() / "gantruth_test_trainer_data";
        fs::remove_all(dir);
        // every sample carries at least one instance so the tiny val splits
        // of the instance estimator stay non-degenerate
        std::vector<SceneSpec> specs;
        for (uint64_t s = 500; specs.size() < 16; ++s) {
            SceneSpec spec = generate_scene(s);
            auto [img, gt] = render_source(spec);
            if (!gt.instances.empty()) specs.push_back(spec);
        }
        write_dataset(dir.string(), specs, DatasetDomains::kBoth);
        return dir.string();
    }();
    return root;
}

EstimatorSet fast_estimators(bool semseg, bool disparity, bool instance) {
    static std::map<int, EstimatorBundle> cache;
    Dataset data(train_dataset());
    PretrainConfig cfg;
    cfg.steps = 40;
    cfg.batch_size = 2;
    cfg.base_channels = 8;
    cfg.log_every = 1000;
    cfg.semseg_miou_floor = 0.0;
    cfg.disp_abs_rel_ceiling = 100.0;
    cfg.instance_bce_ceiling = 100.0;
    EstimatorSet set;
    auto get = [&](EstimatorKind kind) -> EstimatorBundle {
        int key = int(kind);
        if (!cache.count(key)) cache.emplace(key, pretrain_estimator(kind, data, cfg));
        return cache.at(key);
    };
    if (semseg) set.semseg = get(EstimatorKind::kSemseg);
    if (disparity) set.disparity = get(EstimatorKind::kDisparity);
    if (instance) set.instance = get(EstimatorKind::kInstance);
    return set;
}

TrainerConfig small_config(ModelFamily model, const std::string& tasks, int steps) {
    TrainerConfig cfg;
    cfg.model = model;
    cfg.tasks = GtTasks::parse(tasks);
    cfg.steps = steps;
    cfg.seed = 7;
    cfg.log_every = 1;
    cfg.checkpoint_every = 1000;
    cfg.arch.base_channels = 8;
    cfg.arch.latent_channels = 24;
    cfg.arch.disc_base_channels = 8;
    return cfg;
}

std::vector<StepMetrics> run_steps(Trainer& t, int n) {
    std::vector<StepMetrics> all;
    for (int i = 0; i < n; ++i) all.push_back(t.train_step());
    return all;
}

std::map<std::string, std::vector<double>> trace_terms(const std::vector<StepMetrics>& steps) {
    std::map<std::string, std::vector<double>> out;
    for (const auto& m : steps)
        for (const auto& [name, value] : m.terms) out[name].push_back(value);
    return out;
}

} // namespace

TEST_CASE("simple gan updates exactly encoder-S, decoder-T and discriminator-T") {
    Dataset data(train_dataset());
    Trainer t(small_config(ModelFamily::kSimpleGan, "", 8), data, data, {});
    nn::NamedParams<float> params = t.all_parameters();
    std::map<std::string, std::vector<float>> before;
    for (auto& [name, var] : params.items) before[name] = var.value();
    run_steps(t, 8);
    for (auto& [name, var] : params.items) {
        INFO("tensor ", name);
        REQUIRE(before.at(name) != var.value());  // every named tensor moved
        bool in_scope = name.rfind("net.enc_s", 0) == 0 || name.rfind("net.dec_t", 0) == 0 ||
                        name.rfind("net.shared.", 0) == 0 || name.rfind("disc.disc_t", 0) == 0;
        REQUIRE(in_scope);  // and nothing else exists
    }
    CHECK_THROWS_AS(t.disc_s(), Error);
}

TEST_CASE("unit training updates every network of the bidirectional pair") {
    Dataset data(train_dataset());
    Trainer t(small_config(ModelFamily::kUnit, "", 6), data, data, {});
    nn::NamedParams<float> params = t.all_parameters();
    std::map<std::string, std::vector<float>> before;
    for (auto& [name, var] : params.items) before[name] = var.value();
    run_steps(t, 6);
    std::set<std::string> prefixes;
    for (auto& [name, var] : params.items) {
        REQUIRE(before.at(name) != var.value());
        prefixes.insert(name.substr(0, name.find('.', 4)));
    }
    CHECK(prefixes.count("net.enc_s"));
    CHECK(prefixes.count("net.enc_t"));
    CHECK(prefixes.count("net.dec_s"));
    CHECK(prefixes.count("net.dec_t"));
}

TEST_CASE("two runs at equal seed produce identical loss traces") {
    Dataset data(train_dataset());
    EstimatorSet est = fast_estimators(true, true, false);
    auto cfg = small_config(ModelFamily::kGantruth, "S+D", 12);
    Trainer a(cfg, data, data, est);
    Trainer b(cfg, data, data, est);
    auto ta = trace_terms(run_steps(a, 12));
    auto tb = trace_terms(run_steps(b, 12));
    REQUIRE(ta.size() == tb.size());
    for (auto& [name, va] : ta) REQUIRE(va == tb.at(name));  // bitwise
}

TEST_CASE("gantruth with zero GT weights matches the simple-gan baseline bitwise") {
    Dataset data(train_dataset());
    auto cfg0 = small_config(ModelFamily::kSimpleGan, "", 10);
    auto cfgz = small_config(ModelFamily::kGantruth, "S+D", 10);
    cfgz.weights.semseg = 0.0;
    cfgz.weights.disp = 0.0;
    cfgz.weights.instseg = 0.0;
    Trainer base(cfg0, data, data, {});
    Trainer zero(cfgz, data, data, fast_estimators(true, true, false));
    auto tb = trace_terms(run_steps(base, 10));
    auto tz = trace_terms(run_steps(zero, 10));
    for (auto& [name, vb] : tb) REQUIRE(tz.at(name) == vb);  // common terms bitwise equal
    // the zero-weight run also logs its (zero) GT terms
    for (double v : tz.at("gt_total")) REQUIRE(v == 0.0);
}

TEST_CASE("unit_gantruth with tasks disabled is the unit baseline (same code path)") {
    Dataset data(train_dataset());
    Trainer a(small_config(ModelFamily::kUnit, "", 6), data, data, {});
    Trainer b(small_config(ModelFamily::kUnitGantruth, "", 6), data, data, {});
    auto ta = trace_terms(run_steps(a, 6));
    auto tb = trace_terms(run_steps(b, 6));
    REQUIRE(ta.size() == tb.size());
    for (auto& [name, va] : ta) REQUIRE(va == tb.at(name));
}

TEST_CASE("pre-flight: missing or unfrozen estimators are rejected before training") {
    Dataset data(train_dataset());
    auto cfg = small_config(ModelFamily::kGantruth, "S", 5);
    CHECK_THROWS_WITH_AS(Trainer(cfg, data, data, {}), doctest::Contains("task S"), Error);
    auto cfg_i = small_config(ModelFamily::kGantruth, "I", 5);
    cfg_i.batch_size = 2;
    CHECK_THROWS_WITH_AS(Trainer(cfg_i, data, data, fast_estimators(false, false, true)),
                         doctest::Contains("batch_size"), Error);
    auto cfg_base = small_config(ModelFamily::kSimpleGan, "S", 5);
    CHECK_THROWS_AS(Trainer(cfg_base, data, data, fast_estimators(true, false, false)), Error);
}

TEST_CASE("frozen estimators keep their checksums through a training run") {
    Dataset data(train_dataset());
    EstimatorSet est = fast_estimators(true, true, true);
    uint64_t seg_before = est.semseg->checksum();
    uint64_t disp_before = est.disparity->checksum();
    uint64_t inst_before = est.instance->checksum();
    auto cfg = small_config(ModelFamily::kGantruth, "S+D+I", 10);
    Trainer t(cfg, data, data, est);
    run_steps(t, 10);
    CHECK(est.semseg->checksum() == seg_before);
    CHECK(est.disparity->checksum() == disp_before);
    CHECK(est.instance->checksum() == inst_before);
}

TEST_CASE("resume reproduces the uninterrupted run bitwise") {
    Dataset data(train_dataset());
    fs::path dir = fs::temp_directory_path() / "gantruth_test_resume";
    fs::remove_all(dir);
    auto cfg = small_config(ModelFamily::kUnit, "", 14);
    cfg.checkpoint_every = 7;
    cfg.log_every = 100;

    Trainer full(cfg, data, data, {});
    full.run((dir / "full").string());

    // resume from the mid checkpoint and run to the end
    Trainer resumed = Trainer::resume((dir / "full" / "checkpoint_step7.ckpt").string(), data,
                                      data, {});
    CHECK(resumed.step() == 7);
    resumed.run((dir / "resumed").string());

    CHECK(file_hash((dir / "full" / "checkpoint_final.ckpt").string()) ==
          file_hash((dir / "resumed" / "checkpoint_final.ckpt").string()));
}

TEST_CASE("non-finite losses abort with the term named and keep the last checkpoint") {
    Dataset data(train_dataset());
    fs::path dir = fs::temp_directory_path() / "gantruth_test_abort";
    fs::remove_all(dir);
    auto cfg = small_config(ModelFamily::kGantruth, "", 60);
    cfg.checkpoint_every = 2;
    Trainer t(cfg, data, data, {});
    run_steps(t, 2);
    fs::create_directories(dir);
    t.save_checkpoint((dir / "checkpoint_step2.ckpt").string());

    // poison the decoder output bias; the next translation is NaN end to end
    auto params = t.all_parameters();
    bool poisoned = false;
    for (auto& [name, var] : params.items)
        if (name == "net.dec_t.out.b") {
            var.value()[0] = std::numeric_limits<float>::quiet_NaN();
            poisoned = true;
        }
    REQUIRE(poisoned);
    bool aborted = false;
    try {
        t.run(dir.string());
    } catch (const TrainAbort& e) {
        aborted = true;
        CHECK_FALSE(e.term().empty());
    }
    CHECK(aborted);
    CHECK(fs::exists(dir / "checkpoint_step2.ckpt"));  // pre-abort checkpoint untouched
}

TEST_CASE("translate_dataset carries ground truth verbatim and is deterministic") {
    Dataset data(train_dataset());
    fs::path dir = fs::temp_directory_path() / "gantruth_test_translate";
    fs::remove_all(dir);
    auto cfg = small_config(ModelFamily::kSimpleGan, "", 4);
    Trainer t(cfg, data, data, {});
    run_steps(t, 4);
    fs::create_directories(dir);
    t.save_checkpoint((dir / "ckpt.ckpt").string());

    translate_dataset((dir / "ckpt.ckpt").string(), data, (dir / "out_a").string());
    translate_dataset((dir / "ckpt.ckpt").string(), data, (dir / "out_b").string());

    Dataset out((dir / "out_a").string());
    REQUIRE(out.size() == data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        const std::string& id = data.manifest().samples[i].id;
        for (const char* suffix : {".semantic.png", ".disparity.png", ".instances.json"}) {
            REQUIRE(file_hash(data.root() + "/gt/" + id + suffix) ==
                    file_hash((dir / "out_a" / "gt" / (id + suffix)).string()));
        }
        // byte-identical reruns
        REQUIRE(file_hash((dir / "out_a" / "source" / (id + ".png")).string()) ==
                file_hash((dir / "out_b" / "source" / (id + ".png")).string()));
        // translated image differs from the raw source
        REQUIRE(file_hash((dir / "out_a" / "source" / (id + ".png")).string()) !=
                file_hash(data.root() + "/source/" + id + ".png"));
    }
    // provenance recorded
    std::ifstream mf((dir / "out_a" / "manifest.json"));
    auto manifest = nlohmann::json::parse(mf);
    CHECK(manifest.contains("checkpoint_hash"));
    CHECK(manifest.at("translate_mode") == "deterministic");
}

TEST_CASE("run writes a metrics log with one named term per equation component") {
    Dataset data(train_dataset());
    fs::path dir = fs::temp_directory_path() / "gantruth_test_metrics";
    fs::remove_all(dir);
    EstimatorSet est = fast_estimators(true, true, false);
    auto cfg = small_config(ModelFamily::kUnitGantruth, "S+D", 3);
    Trainer t(cfg, data, data, est);
    t.run(dir.string());
    std::ifstream log(dir / "metrics.jsonl");
    REQUIRE(log.good());
    std::string line;
    REQUIRE(std::getline(log, line));
    auto j = nlohmann::json::parse(line);
    for (const char* term : {"vae_s", "gan_s_g", "cc_s", "vae_t", "gan_t_g", "cc_t", "gan_s_d",
                             "gan_t_d", "gt_semseg", "gt_disp", "gt_total", "g_total", "d_total"})
        REQUIRE_MESSAGE(j.at("terms").contains(term), "missing term ", term);
}
