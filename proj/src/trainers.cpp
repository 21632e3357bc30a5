#include "gantruth/trainers.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "gantruth/checkpoint.hpp"
#include "gantruth/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gantruth {

const char* model_family_name(ModelFamily m) {
    switch (m) {
        case ModelFamily::kSimpleGan: return "simple_gan";
        case ModelFamily::kGantruth: return "gantruth";
        case ModelFamily::kUnit: return "unit";
        case ModelFamily::kUnitGantruth: return "unit_gantruth";
    }
    return "?";
}

ModelFamily model_family_from_name(const std::string& name) {
    if (name == "simple_gan") return ModelFamily::kSimpleGan;
    if (name == "gantruth") return ModelFamily::kGantruth;
    if (name == "unit") return ModelFamily::kUnit;
    if (name == "unit_gantruth") return ModelFamily::kUnitGantruth;
    throw UsageError(cat("unknown model '", name,
                         "' (simple_gan|gantruth|unit|unit_gantruth)"));
}

std::string GtTasks::to_string() const {
    std::string s;
    if (semseg) s += "S";
    if (disparity) s += disparity && !s.empty() ? "+D" : "D";
    if (instance) s += s.empty() ? "I" : "+I";
    return s;
}

GtTasks GtTasks::parse(const std::string& spec) {
    GtTasks t;
    for (char c : spec) {
        switch (std::toupper(c)) {
            case 'S': t.semseg = true; break;
            case 'D': t.disparity = true; break;
            case 'I': t.instance = true; break;
            case '+': case ',': case ' ': break;
            default: throw UsageError(cat("bad task letter '", c, "' (use S, D, I)"));
        }
    }
    return t;
}

void TrainerConfig::validate() const {
    weights.validate();
    GT_REQUIRE(batch_size >= 1, "trainer: batch_size must be >= 1");
    GT_REQUIRE(steps >= 0, "trainer: negative step count");
    GT_REQUIRE(checkpoint_every >= 1 && log_every >= 1, "trainer: bad cadence");
    GT_REQUIRE(disp_scale_const > 0, "trainer: disp_scale_const must be positive");
    GT_REQUIRE(optimizer.lr > 0, "trainer: learning rate must be positive");
    if (model == ModelFamily::kSimpleGan || model == ModelFamily::kUnit)
        GT_REQUIRE(!tasks.any(), "trainer: ", model_family_name(model),
                   " is a baseline without ground-truth tasks");
    if (tasks.instance)
        GT_REQUIRE(batch_size == 1, "trainer: the instance task requires batch_size 1");
}

namespace {

ImageBatch gather(const std::vector<ImageU8>& images, const std::vector<size_t>& idx) {
    ImageBatch b(int(idx.size()), 3, images[idx[0]].h, images[idx[0]].w);
    for (size_t i = 0; i < idx.size(); ++i) {
        const ImageU8& img = images[idx[i]];
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                for (int c = 0; c < 3; ++c) b.at(int(i), c, y, x) = u8_to_signed(img.at(y, x, c));
    }
    return b;
}

json arch_to_json(const ArchConfig& a) {
    return {{"image_channels", a.image_channels},
            {"base_channels", a.base_channels},
            {"latent_channels", a.latent_channels},
            {"downsamples", a.downsamples},
            {"res_blocks", a.res_blocks},
            {"disc_base_channels", a.disc_base_channels},
            {"disc_layers", a.disc_layers},
            {"disc_scales", a.disc_scales}};
}

ArchConfig arch_from_json(const json& j) {
    ArchConfig a;
    a.image_channels = j.at("image_channels").get<int>();
    a.base_channels = j.at("base_channels").get<int>();
    a.latent_channels = j.at("latent_channels").get<int>();
    a.downsamples = j.at("downsamples").get<int>();
    a.res_blocks = j.at("res_blocks").get<int>();
    a.disc_base_channels = j.at("disc_base_channels").get<int>();
    a.disc_layers = j.at("disc_layers").get<int>();
    a.disc_scales = j.at("disc_scales").get<int>();
    return a;
}

} // namespace

Trainer::Trainer(TrainerConfig config, const Dataset& source, const Dataset& target,
                 EstimatorSet estimators)
    : config_(std::move(config)),
      source_(&source),
      target_(&target),
      estimators_(std::move(estimators)),
      mapping_(load_mapping(config_.mapping)),
      rng_(config_.seed) {
    config_.validate();
    GT_REQUIRE(source.size() > 0 && source.has_source() && source.has_gt(),
               "trainer: source dataset needs source images and ground truth");
    GT_REQUIRE(target.size() > 0 && target.has_target(),
               "trainer: target dataset needs target-domain images");

    // pre-flight: every enabled task needs its frozen estimator before any step runs
    if (config_.tasks.semseg) {
        GT_REQUIRE(estimators_.semseg.has_value(),
                   "trainer: task S enabled but no semseg estimator given");
        GT_REQUIRE(estimators_.semseg->frozen(), "trainer: semseg estimator is not frozen");
        for (int tid : mapping_.target_ids()) {
            const auto& tax = estimators_.semseg->taxonomy;
            GT_REQUIRE(std::find(tax.begin(), tax.end(), tid) != tax.end(),
                       "trainer: mapping target id ", tid,
                       " missing from the semseg estimator taxonomy");
        }
    }
    if (config_.tasks.disparity) {
        GT_REQUIRE(estimators_.disparity.has_value(),
                   "trainer: task D enabled but no disparity estimator given");
        GT_REQUIRE(estimators_.disparity->frozen(), "trainer: disparity estimator is not frozen");
    }
    if (config_.tasks.instance) {
        GT_REQUIRE(estimators_.instance.has_value(),
                   "trainer: task I enabled but no instance estimator given");
        GT_REQUIRE(estimators_.instance->frozen(), "trainer: instance estimator is not frozen");
    }

    for (size_t i = 0; i < source.size(); ++i) {
        src_images_.push_back(source.load_source(i));
        SceneGroundTruth gt = source.load_gt(i);
        src_labels_.push_back(remap(gt.semantic, mapping_));
        src_gt_.push_back(std::move(gt));
    }
    for (size_t i = 0; i < target.size(); ++i) tgt_images_.push_back(target.load_target(i));

    int h = src_images_[0].h, w = src_images_[0].w;
    int factor = config_.arch.downsample_factor();
    GT_REQUIRE(h % factor == 0 && w % factor == 0, "trainer: image size ", h, "x", w,
               " not divisible by the encoder factor ", factor);

    build_networks();
    initial_estimator_checksum_ = estimator_checksums();
}

void Trainer::build_networks() {
    bool bidir = is_bidirectional(config_.model);
    translator_ = TranslatorPair<float>(config_.arch, rng_, bidir);
    disc_t_ = MultiScaleDiscriminator<float>(config_.arch, rng_, "disc_t");
    if (bidir) disc_s_ = MultiScaleDiscriminator<float>(config_.arch, rng_, "disc_s");

    int h = src_images_[0].h, w = src_images_[0].w;
    GT_REQUIRE(h >= disc_t_.min_input_size() && w >= disc_t_.min_input_size(),
               "trainer: image size ", h, "x", w, " below the discriminator minimum ",
               disc_t_.min_input_size());

    gen_opt_.emplace(translator_.params().vars(), config_.optimizer);
    nn::NamedParams<float> disc_params = disc_t_.params();
    if (bidir) disc_params.merge(disc_s_.params());
    disc_opt_.emplace(disc_params.vars(), config_.optimizer);
}

const MultiScaleDiscriminator<float>& Trainer::disc_s() const {
    GT_REQUIRE(is_bidirectional(config_.model), "this model has no source-domain discriminator");
    return disc_s_;
}

nn::NamedParams<float> Trainer::all_parameters() const {
    nn::NamedParams<float> all;
    for (const auto& [name, var] : translator_.params().items) {
        bool dup = false;
        for (auto& mine : all.items)
            if (mine.second.id() == var.id()) dup = true;
        if (!dup) all.add("net." + name, var);
    }
    for (const auto& [name, var] : disc_t_.params().items) all.add("disc." + name, var);
    if (is_bidirectional(config_.model))
        for (const auto& [name, var] : disc_s_.params().items) all.add("disc." + name, var);
    return all;
}

uint64_t Trainer::estimator_checksums() const {
    uint64_t h = 0xcbf29ce484222325ull;
    if (estimators_.semseg) h ^= estimators_.semseg->checksum();
    if (estimators_.disparity) h ^= estimators_.disparity->checksum() * 0x9e3779b97f4a7c15ull;
    if (estimators_.instance) h ^= estimators_.instance->checksum() * 0xbf58476d1ce4e5b9ull;
    return h;
}

GtSupervision<float> Trainer::make_supervision(const std::vector<size_t>& src_idx) const {
    GtSupervision<float> gt;
    if (!config_.tasks.any()) return gt;
    gt.ignore_index = mapping_.ignore_index();
    if (config_.tasks.semseg) {
        const EstimatorBundle* bundle = &*estimators_.semseg;
        gt.use_semseg = true;
        gt.semseg_logits = [bundle](const nn::Var<float>& x) { return bundle->forward_semseg(x); };
        for (size_t i : src_idx) {
            auto li = labels_to_taxonomy_indices(src_labels_[i], bundle->taxonomy,
                                                 mapping_.ignore_index());
            gt.semseg_labels.insert(gt.semseg_labels.end(), li.begin(), li.end());
        }
    }
    if (config_.tasks.disparity) {
        const EstimatorBundle* bundle = &*estimators_.disparity;
        gt.use_disp = true;
        gt.disparity = [bundle](const nn::Var<float>& x) { return bundle->forward_disparity(x); };
        gt.disp_scale_const = float(config_.disp_scale_const);
        for (size_t i : src_idx) {
            const auto& d = src_gt_[i].disparity.d;
            gt.disp_gt.insert(gt.disp_gt.end(), d.begin(), d.end());
            for (float v : d) gt.disp_valid.push_back(v > 0.f ? 1 : 0);
        }
    }
    if (config_.tasks.instance) {
        const EstimatorBundle* bundle = &*estimators_.instance;
        gt.use_inst = true;
        size_t i = src_idx[0];
        std::vector<PixelBox> boxes;
        std::vector<int> ids;
        for (const auto& inst : src_gt_[i].instances) {
            boxes.push_back(inst.box);
            ids.push_back(inst.class_id);
        }
        gt.instance_heads = [bundle, boxes](const nn::Var<float>& x) {
            return bundle->forward_instances(x, boxes);
        };
        gt.instance_targets = make_instance_targets(src_gt_[i], mapping_, bundle->taxonomy,
                                                    InstanceNet<float>::kMaskSize);
        gt.instance_keep = instance_keep_flags(ids, mapping_);
    }
    return gt;
}

StepMetrics Trainer::train_step() {
    auto t0 = std::chrono::steady_clock::now();
    const int b = config_.batch_size;
    std::vector<size_t> src_idx, tgt_idx;
    for (int i = 0; i < b; ++i)
        src_idx.push_back(size_t(rng_.uniform_int(0, int64_t(src_images_.size()) - 1)));
    for (int i = 0; i < b; ++i)
        tgt_idx.push_back(size_t(rng_.uniform_int(0, int64_t(tgt_images_.size()) - 1)));

    nn::Var<float> x_s = batch_to_var(gather(src_images_, src_idx));
    nn::Var<float> x_t = batch_to_var(gather(tgt_images_, tgt_idx));
    int h = src_images_[0].h, w = src_images_[0].w;
    int factor = config_.arch.downsample_factor();
    nn::Shape latent{b, config_.arch.latent_channels, h / factor, w / factor};

    StepMetrics metrics;
    metrics.step = step_ + 1;
    auto record = [&](const ObjectiveParts<float>& parts) {
        for (const auto& [name, value] : parts.logged) {
            if (!std::isfinite(value)) throw TrainAbort(name, metrics.step);
            metrics.terms.emplace_back(name, value);
        }
    };
    auto guarded = [&](auto&& body) {
        try {
            body();
        } catch (const NumericError& e) {
            throw TrainAbort(e.what(), metrics.step);
        }
    };

    if (is_bidirectional(config_.model)) {
        UnitNets<float> nets;
        nets.enc_s = [this](const nn::Var<float>& x) { return translator_.enc_s()(x).mean; };
        nets.enc_t = [this](const nn::Var<float>& x) { return translator_.enc_t()(x).mean; };
        nets.dec_s = [this](const nn::Var<float>& z) { return translator_.dec_s()(z); };
        nets.dec_t = [this](const nn::Var<float>& z) { return translator_.dec_t()(z); };
        nets.disc_s = [this](const nn::Var<float>& x) { return disc_s_(x); };
        nets.disc_t = [this](const nn::Var<float>& x) { return disc_t_(x); };

        UnitNoise<float> noise;
        noise.d_trans_st = gaussian_like<float>(rng_, latent);
        noise.d_trans_ts = gaussian_like<float>(rng_, latent);
        noise.recon_s = gaussian_like<float>(rng_, latent);
        noise.recon_t = gaussian_like<float>(rng_, latent);
        noise.trans_st = gaussian_like<float>(rng_, latent);
        noise.trans_ts = gaussian_like<float>(rng_, latent);
        noise.cyc_s = gaussian_like<float>(rng_, latent);
        noise.cyc_t = gaussian_like<float>(rng_, latent);

        GtSupervision<float> gt = make_supervision(src_idx);

        guarded([&] {
            disc_opt_->zero_grad();
            auto parts_d = unit_gantruth_objective(nets, gt, x_s, x_t, noise, config_.weights,
                                                   Phase::kDiscriminator);
            record(parts_d);
            nn::backward(parts_d.discriminator_total);
            disc_opt_->step();

            gen_opt_->zero_grad();
            auto parts_g = unit_gantruth_objective(nets, gt, x_s, x_t, noise, config_.weights,
                                                   Phase::kGenerator);
            record(parts_g);
            nn::backward(parts_g.generator_total);
            gen_opt_->step();
        });
    } else {
        auto enc = [this](const nn::Var<float>& x) { return translator_.enc_s()(x).mean; };
        auto dec = [this](const nn::Var<float>& z) { return translator_.dec_t()(z); };
        DiscFn<float> disc = [this](const nn::Var<float>& x) { return disc_t_(x); };
        nn::Var<float> noise_d = gaussian_like<float>(rng_, latent);
        nn::Var<float> noise_g = gaussian_like<float>(rng_, latent);
        GtSupervision<float> gt = make_supervision(src_idx);

        guarded([&] {
            disc_opt_->zero_grad();
            auto parts_d = gantruth_objective<float>(enc, dec, disc, gt, x_s, x_t, noise_d,
                                                     noise_g, config_.weights,
                                                     Phase::kDiscriminator);
            record(parts_d);
            nn::backward(parts_d.discriminator_total);
            disc_opt_->step();

            gen_opt_->zero_grad();
            auto parts_g = gantruth_objective<float>(enc, dec, disc, gt, x_s, x_t, noise_d,
                                                     noise_g, config_.weights, Phase::kGenerator);
            record(parts_g);
            nn::backward(parts_g.generator_total);
            gen_opt_->step();
        });
    }

    ++step_;
    metrics.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                t0)
                          .count();
    last_metrics_ = metrics;
    return metrics;
}

void Trainer::run(const std::string& out_dir, std::ostream* log) {
    std::ofstream metrics_file;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        metrics_file.open(out_dir + "/metrics.jsonl", std::ios::app);
        GT_REQUIRE(metrics_file.good(), "trainer: cannot write metrics log in ", out_dir);
    }
    auto verify_invariants = [&] {
        GT_REQUIRE(estimator_checksums() == initial_estimator_checksum_,
                   "trainer: a frozen estimator changed during training");
        if (is_bidirectional(config_.model)) {
            GT_REQUIRE(&translator_.enc_s().shared_tail() == &translator_.enc_t().shared_tail(),
                       "trainer: encoder tails are no longer shared");
            GT_REQUIRE(&translator_.dec_s().shared_head() == &translator_.dec_t().shared_head(),
                       "trainer: decoder heads are no longer shared");
        }
    };
    while (step_ < config_.steps) {
        StepMetrics m = train_step();
        bool final_step = step_ == config_.steps;
        if (metrics_file.is_open() &&
            (m.step % config_.log_every == 0 || m.step == 1 || final_step)) {
            json j;
            j["step"] = m.step;
            j["wall_ms"] = m.wall_ms;
            j["terms"] = json::object();
            for (const auto& [name, value] : m.terms) j["terms"][name] = value;
            metrics_file << j.dump() << "\n";
            metrics_file.flush();
        }
        if (log && (m.step % (config_.log_every * 10) == 0 || final_step)) {
            (*log) << "step " << m.step;
            for (const auto& [name, value] : m.terms)
                if (name == "g_total" || name == "d_total") (*log) << " " << name << "=" << value;
            (*log) << "\n";
        }
        if (!out_dir.empty() && (step_ % config_.checkpoint_every == 0 || final_step)) {
            verify_invariants();
            save_checkpoint(out_dir + "/checkpoint_step" + std::to_string(step_) + ".ckpt");
            save_checkpoint(out_dir + "/checkpoint_final.ckpt");
        }
    }
    if (config_.steps == 0 && !out_dir.empty()) save_checkpoint(out_dir + "/checkpoint_final.ckpt");
}

void Trainer::save_checkpoint(const std::string& path) const {
    Archive archive;
    archive.manifest["format"] = "trainer";
    archive.manifest["model"] = model_family_name(config_.model);
    archive.manifest["tasks"] = config_.tasks.to_string();
    archive.manifest["arch"] = arch_to_json(config_.arch);
    archive.manifest["step"] = step_;
    archive.manifest["seed"] = config_.seed;
    archive.manifest["rng_state"] = rng_.state();
    archive.manifest["steps"] = config_.steps;
    archive.manifest["batch_size"] = config_.batch_size;
    archive.manifest["checkpoint_every"] = config_.checkpoint_every;
    archive.manifest["log_every"] = config_.log_every;
    archive.manifest["disp_scale_const"] = config_.disp_scale_const;
    archive.manifest["mapping"] = config_.mapping;
    archive.manifest["optimizer"] = {{"lr", config_.optimizer.lr},
                                     {"beta1", config_.optimizer.beta1},
                                     {"beta2", config_.optimizer.beta2},
                                     {"eps", config_.optimizer.eps}};
    archive.manifest["weights"] = {{"gan", config_.weights.gan},     {"kl", config_.weights.kl},
                                   {"ll", config_.weights.ll},       {"semseg", config_.weights.semseg},
                                   {"disp", config_.weights.disp},   {"instseg", config_.weights.instseg}};
    archive.manifest["gen_opt_steps"] = gen_opt_->steps_taken();
    archive.manifest["disc_opt_steps"] = disc_opt_->steps_taken();

    nn::NamedParams<float> all = all_parameters();
    for (const auto& [name, var] : all.items) archive.add(name, var.shape(), var.value());

    auto dump_moments = [&](const char* prefix, const nn::Adam<float>& opt) {
        auto& o = const_cast<nn::Adam<float>&>(opt);
        for (size_t i = 0; i < opt.params().size(); ++i) {
            const auto& p = opt.params()[i];
            // locate the registered name for this tensor
            std::string pname;
            for (const auto& [name, var] : all.items)
                if (var.id() == p.id()) pname = name;
            GT_REQUIRE(!pname.empty(), "checkpoint: optimizer parameter without a name");
            archive.add(cat(prefix, ".m.", pname), p.shape(), o.m_state(i));
            archive.add(cat(prefix, ".v.", pname), p.shape(), o.v_state(i));
        }
    };
    dump_moments("optg", *gen_opt_);
    dump_moments("optd", *disc_opt_);
    save_archive(path, archive);
}

Trainer Trainer::resume(const std::string& checkpoint_path, const Dataset& source,
                        const Dataset& target, EstimatorSet estimators) {
    Archive archive = load_archive(checkpoint_path);
    GT_REQUIRE(archive.manifest.value("format", "") == "trainer",
               "resume: ", checkpoint_path, " is not a trainer checkpoint");
    TrainerConfig config;
    config.model = model_family_from_name(archive.manifest.at("model").get<std::string>());
    config.tasks = GtTasks::parse(archive.manifest.at("tasks").get<std::string>());
    config.arch = arch_from_json(archive.manifest.at("arch"));
    config.seed = archive.manifest.at("seed").get<uint64_t>();
    config.steps = archive.manifest.at("steps").get<int>();
    config.batch_size = archive.manifest.at("batch_size").get<int>();
    config.checkpoint_every = archive.manifest.at("checkpoint_every").get<int>();
    config.log_every = archive.manifest.at("log_every").get<int>();
    config.disp_scale_const = archive.manifest.at("disp_scale_const").get<double>();
    config.mapping = archive.manifest.at("mapping").get<std::string>();
    config.optimizer.lr = archive.manifest.at("optimizer").at("lr").get<double>();
    config.optimizer.beta1 = archive.manifest.at("optimizer").at("beta1").get<double>();
    config.optimizer.beta2 = archive.manifest.at("optimizer").at("beta2").get<double>();
    config.optimizer.eps = archive.manifest.at("optimizer").at("eps").get<double>();
    config.weights.gan = archive.manifest.at("weights").at("gan").get<double>();
    config.weights.kl = archive.manifest.at("weights").at("kl").get<double>();
    config.weights.ll = archive.manifest.at("weights").at("ll").get<double>();
    config.weights.semseg = archive.manifest.at("weights").at("semseg").get<double>();
    config.weights.disp = archive.manifest.at("weights").at("disp").get<double>();
    config.weights.instseg = archive.manifest.at("weights").at("instseg").get<double>();

    Trainer t(config, source, target, std::move(estimators));
    nn::NamedParams<float> all = t.all_parameters();
    for (auto& [name, var] : all.items) {
        const ArchiveArray& a = archive.find(name);
        GT_REQUIRE(a.shape == var.shape(), "resume: shape mismatch for ", name);
        var.value() = a.data;
    }
    auto load_moments = [&](const char* prefix, nn::Adam<float>& opt) {
        for (size_t i = 0; i < opt.params().size(); ++i) {
            const auto& p = opt.params()[i];
            std::string pname;
            for (const auto& [name, var] : all.items)
                if (var.id() == p.id()) pname = name;
            opt.m_state(i) = archive.find(cat(prefix, ".m.", pname)).data;
            opt.v_state(i) = archive.find(cat(prefix, ".v.", pname)).data;
        }
    };
    load_moments("optg", *t.gen_opt_);
    load_moments("optd", *t.disc_opt_);
    t.gen_opt_->set_steps_taken(archive.manifest.at("gen_opt_steps").get<int64_t>());
    t.disc_opt_->set_steps_taken(archive.manifest.at("disc_opt_steps").get<int64_t>());
    t.step_ = archive.manifest.at("step").get<int64_t>();
    t.rng_.set_state(archive.manifest.at("rng_state").get<uint64_t>());
    return t;
}

Trainer load_trainer_checkpoint(const std::string& path, const Dataset& source,
                                const Dataset& target, EstimatorSet estimators) {
    return Trainer::resume(path, source, target, std::move(estimators));
}

ImageBatch Trainer::translate_deterministic(const ImageBatch& x) const {
    nn::NoGradGuard ng;
    nn::Var<float> out = translate(translator_.enc_s(), translator_.dec_t(), batch_to_var(x),
                                   TranslateMode::kDeterministic);
    return var_to_batch(out);
}

void translate_dataset(const std::string& checkpoint_path, const Dataset& data,
                       const std::string& out_dir, std::ostream* log) {
    Archive archive = load_archive(checkpoint_path);
    GT_REQUIRE(archive.manifest.value("format", "") == "trainer",
               "translate: ", checkpoint_path, " is not a trainer checkpoint");
    GT_REQUIRE(data.has_source() && data.has_gt(),
               "translate: dataset needs source images and ground truth");
    ArchConfig arch = arch_from_json(archive.manifest.at("arch"));
    bool bidir = is_bidirectional(
        model_family_from_name(archive.manifest.at("model").get<std::string>()));
    Rng scratch(0);
    TranslatorPair<float> translator(arch, scratch, bidir);
    for (auto& [name, var] : const_cast<nn::NamedParams<float>&>(translator.params()).items) {
        const ArchiveArray& a = archive.find("net." + name);
        GT_REQUIRE(a.shape == var.shape(), "translate: shape mismatch for ", name);
        var.value() = a.data;
    }
    int factor = arch.downsample_factor();
    GT_REQUIRE(data.manifest().height % factor == 0 && data.manifest().width % factor == 0,
               "translate: dataset image size ", data.manifest().height, "x",
               data.manifest().width, " incompatible with checkpoint downsampling factor ",
               factor);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    GT_REQUIRE(!ec, "translate: cannot create ", out_dir);
    {
        std::ofstream marker(out_dir + "/_INCOMPLETE", std::ios::trunc);
        GT_REQUIRE(marker.good(), "translate: output path not writable: ", out_dir);
        marker << "writing\n";
    }
    fs::create_directories(out_dir + "/source");
    fs::create_directories(out_dir + "/gt");

    nn::NoGradGuard ng;
    for (size_t i = 0; i < data.size(); ++i) {
        const std::string& id = data.manifest().samples[i].id;
        ImageBatch in = to_batch(data.load_source(i));
        nn::Var<float> out = translate(translator.enc_s(), translator.dec_t(), batch_to_var(in),
                                       TranslateMode::kDeterministic);
        write_png_rgb8(out_dir + "/source/" + id + ".png", from_batch(var_to_batch(out), 0));
        for (const char* suffix : {".semantic.png", ".disparity.png", ".instances.json"}) {
            fs::copy_file(data.root() + "/gt/" + id + suffix, out_dir + "/gt/" + id + suffix,
                          fs::copy_options::overwrite_existing);
        }
        if (log && (i + 1) % 500 == 0) (*log) << "translated " << (i + 1) << "/" << data.size() << "\n";
    }

    // carry the original manifest, annotated with provenance
    std::ifstream mf(data.root() + "/manifest.json");
    json manifest = json::parse(mf);
    manifest["domains"] = "source";
    manifest["translated_from"] = hex64(data.manifest_hash());
    manifest["checkpoint_hash"] = hex64(file_hash(checkpoint_path));
    manifest["translate_mode"] = "deterministic";
    {
        std::ofstream f(out_dir + "/manifest.json", std::ios::trunc);
        f << manifest.dump(2) << "\n";
    }
    fs::remove(out_dir + "/_INCOMPLETE");
}

} // namespace gantruth
