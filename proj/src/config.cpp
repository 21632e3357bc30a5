#include "gantruth/config.hpp"

#include <filesystem>
#include <fstream>

#include "gantruth/version.hpp"

using nlohmann::json;

namespace gantruth {

namespace {

json style_defaults() {
    StyleParams s;
    return json::parse(style_to_json_text(s));
}

void check_unknown_keys(const json& user, const json& tmpl, const std::string& path) {
    GT_REQUIRE(user.is_object(), "config: expected an object at '", path.empty() ? "." : path,
               "'");
    for (auto it = user.begin(); it != user.end(); ++it) {
        std::string child = path.empty() ? it.key() : path + "." + it.key();
        if (!tmpl.contains(it.key()))
            throw UsageError(cat("config: unknown key '", child, "'"));
        if (tmpl.at(it.key()).is_object() && !tmpl.at(it.key()).empty())
            check_unknown_keys(it.value(), tmpl.at(it.key()), child);
    }
}

void merge_over(json& base, const json& user) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        if (base.contains(it.key()) && base.at(it.key()).is_object() && it.value().is_object())
            merge_over(base.at(it.key()), it.value());
        else
            base[it.key()] = it.value();
    }
}

} // namespace

json ExperimentConfig::default_template() {
    json j;
    j["data"] = {{"source", ""}, {"target", ""}, {"val", ""}};
    j["mapping"] = {{"name", "toy-source-to-toy-target"}};
    j["generate"] = {{"count", 100},
                     {"seed", 0},
                     {"domains", "both"},
                     {"height", 64},
                     {"width", 64},
                     {"horizon_min", 0.28},
                     {"horizon_max", 0.42},
                     {"max_objects", 8},
                     {"focal_px", 64.0},
                     {"baseline_m", 0.5},
                     {"min_domain_gap", 0.05},
                     {"style", style_defaults()}};
    ArchConfig a;
    j["arch"] = {{"image_channels", a.image_channels},
                 {"base_channels", a.base_channels},
                 {"latent_channels", a.latent_channels},
                 {"downsamples", a.downsamples},
                 {"res_blocks", a.res_blocks},
                 {"disc_base_channels", a.disc_base_channels},
                 {"disc_layers", a.disc_layers},
                 {"disc_scales", a.disc_scales}};
    PretrainConfig p;
    j["estimators"] = {{"semseg", ""},
                       {"disparity", ""},
                       {"instance", ""},
                       {"pretrain",
                        {{"steps", p.steps},
                         {"batch_size", p.batch_size},
                         {"lr", p.lr},
                         {"beta1", p.beta1},
                         {"beta2", p.beta2},
                         {"seed", p.seed},
                         {"val_fraction", p.val_fraction},
                         {"base_channels", p.base_channels},
                         {"semseg_miou_floor", p.semseg_miou_floor},
                         {"disp_abs_rel_ceiling", p.disp_abs_rel_ceiling},
                         {"instance_bce_ceiling", p.instance_bce_ceiling},
                         {"log_every", p.log_every}}}};
    TrainerConfig t;
    j["trainer"] = {{"model", model_family_name(t.model)},
                    {"tasks", t.tasks.to_string()},
                    {"steps", t.steps},
                    {"seed", t.seed},
                    {"batch_size", t.batch_size},
                    {"checkpoint_every", t.checkpoint_every},
                    {"log_every", t.log_every},
                    {"disp_scale_const", t.disp_scale_const},
                    {"optimizer",
                     {{"lr", t.optimizer.lr},
                      {"beta1", t.optimizer.beta1},
                      {"beta2", t.optimizer.beta2},
                      {"eps", t.optimizer.eps}}},
                    {"weights",
                     {{"gan", t.weights.gan},
                      {"kl", t.weights.kl},
                      {"ll", t.weights.ll},
                      {"semseg", t.weights.semseg},
                      {"disp", t.weights.disp},
                      {"instseg", t.weights.instseg}}}};
    TaskTrainConfig k;
    j["eval"] = {{"alignment", "median"},
                 {"task_steps", k.steps},
                 {"task_batch_size", k.batch_size},
                 {"task_lr", k.lr},
                 {"task_seed", k.seed},
                 {"task_base_channels", k.base_channels},
                 {"task_log_every", k.log_every}};
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& user) {
    json tmpl = default_template();
    check_unknown_keys(user, tmpl, "");
    merge_over(tmpl, user);
    ExperimentConfig cfg;
    cfg.resolved_ = std::move(tmpl);
    return cfg;
}

void set_json_path(json& root, const std::string& dotted_path, const json& value) {
    json* cur = &root;
    size_t start = 0;
    while (true) {
        size_t dot = dotted_path.find('.', start);
        std::string key = dotted_path.substr(start, dot == std::string::npos ? dot : dot - start);
        GT_REQUIRE(!key.empty(), "config: empty key in path '", dotted_path, "'");
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        cur = &(*cur)[key];
        start = dot + 1;
    }
}

ExperimentConfig ExperimentConfig::load(const std::string& path,
                                        const std::vector<std::string>& overrides) {
    json user = json::object();
    if (!path.empty()) {
        std::ifstream f(path);
        if (!f.good()) throw UsageError(cat("config: cannot open ", path));
        try {
            user = json::parse(f);
        } catch (const json::exception& e) {
            throw UsageError(cat("config: parse error in ", path, ": ", e.what()));
        }
    }
    for (const std::string& ov : overrides) {
        size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw UsageError(cat("--set expects key.path=value, got '", ov, "'"));
        std::string key = ov.substr(0, eq);
        std::string raw = ov.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::exception&) {
            value = raw;  // plain string
        }
        set_json_path(user, key, value);
    }
    return from_json(user);
}

std::string ExperimentConfig::data_source() const { return resolved_["data"]["source"]; }
std::string ExperimentConfig::data_target() const { return resolved_["data"]["target"]; }
std::string ExperimentConfig::data_val() const { return resolved_["data"]["val"]; }
std::string ExperimentConfig::mapping_name() const { return resolved_["mapping"]["name"]; }

GenerateConfig ExperimentConfig::generate() const {
    const json& g = resolved_["generate"];
    GenerateConfig c;
    c.height = g["height"];
    c.width = g["width"];
    c.horizon_min = g["horizon_min"];
    c.horizon_max = g["horizon_max"];
    c.max_objects = g["max_objects"];
    c.camera.focal_px = g["focal_px"];
    c.camera.baseline_m = g["baseline_m"];
    c.min_domain_gap = g["min_domain_gap"];
    return c;
}

StyleParams ExperimentConfig::style() const {
    return style_from_json_text(resolved_["generate"]["style"].dump());
}

ArchConfig ExperimentConfig::arch() const {
    const json& a = resolved_["arch"];
    ArchConfig c;
    c.image_channels = a["image_channels"];
    c.base_channels = a["base_channels"];
    c.latent_channels = a["latent_channels"];
    c.downsamples = a["downsamples"];
    c.res_blocks = a["res_blocks"];
    c.disc_base_channels = a["disc_base_channels"];
    c.disc_layers = a["disc_layers"];
    c.disc_scales = a["disc_scales"];
    return c;
}

PretrainConfig ExperimentConfig::pretrain() const {
    const json& p = resolved_["estimators"]["pretrain"];
    PretrainConfig c;
    c.steps = p["steps"];
    c.batch_size = p["batch_size"];
    c.lr = p["lr"];
    c.beta1 = p["beta1"];
    c.beta2 = p["beta2"];
    c.seed = p["seed"];
    c.val_fraction = p["val_fraction"];
    c.base_channels = p["base_channels"];
    c.semseg_miou_floor = p["semseg_miou_floor"];
    c.disp_abs_rel_ceiling = p["disp_abs_rel_ceiling"];
    c.instance_bce_ceiling = p["instance_bce_ceiling"];
    c.log_every = p["log_every"];
    c.mapping = mapping_name();
    return c;
}

TrainerConfig ExperimentConfig::trainer() const {
    const json& t = resolved_["trainer"];
    TrainerConfig c;
    c.model = model_family_from_name(t["model"]);
    c.tasks = GtTasks::parse(t["tasks"]);
    c.steps = t["steps"];
    c.seed = t["seed"];
    c.batch_size = t["batch_size"];
    c.checkpoint_every = t["checkpoint_every"];
    c.log_every = t["log_every"];
    c.disp_scale_const = t["disp_scale_const"];
    c.optimizer.lr = t["optimizer"]["lr"];
    c.optimizer.beta1 = t["optimizer"]["beta1"];
    c.optimizer.beta2 = t["optimizer"]["beta2"];
    c.optimizer.eps = t["optimizer"]["eps"];
    c.weights.gan = t["weights"]["gan"];
    c.weights.kl = t["weights"]["kl"];
    c.weights.ll = t["weights"]["ll"];
    c.weights.semseg = t["weights"]["semseg"];
    c.weights.disp = t["weights"]["disp"];
    c.weights.instseg = t["weights"]["instseg"];
    c.arch = arch();
    c.mapping = mapping_name();
    c.validate();
    return c;
}

TaskTrainConfig ExperimentConfig::task() const {
    const json& e = resolved_["eval"];
    TaskTrainConfig c;
    c.steps = e["task_steps"];
    c.batch_size = e["task_batch_size"];
    c.lr = e["task_lr"];
    c.seed = e["task_seed"];
    c.base_channels = e["task_base_channels"];
    c.log_every = e["task_log_every"];
    c.mapping = mapping_name();
    return c;
}

ScaleAlignment ExperimentConfig::depth_alignment() const {
    std::string a = resolved_["eval"]["alignment"];
    if (a == "median") return ScaleAlignment::kMedianRatio;
    if (a == "least_squares") return ScaleAlignment::kLeastSquares;
    throw UsageError(cat("config: eval.alignment must be median or least_squares, got '", a, "'"));
}

std::string ExperimentConfig::estimator_path(EstimatorKind kind) const {
    return resolved_["estimators"][estimator_kind_name(kind)];
}

void ExperimentConfig::echo(const std::string& out_dir, const std::string& command) const {
    std::filesystem::create_directories(out_dir);
    json j;
    j["tool_version"] = kVersion;
    j["command"] = command;
    j["config"] = resolved_;
    std::ofstream f(out_dir + "/resolved_config.json", std::ios::trunc);
    GT_REQUIRE(f.good(), "config: cannot write resolved config into ", out_dir);
    f << j.dump(2) << "\n";
}

} // namespace gantruth
