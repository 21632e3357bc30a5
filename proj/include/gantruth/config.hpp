#pragma once

#include <json.hpp>

#include "gantruth/adaptation.hpp"
#include "gantruth/scene_forge.hpp"
#include "gantruth/trainers.hpp"

namespace gantruth {

// Nested experiment configuration with full defaults. Parsing is strict:
// any key missing from the default template is an error naming the key path.
// CLI flags override keys one-to-one via "--set section.key=value".
class ExperimentConfig {
public:
    static nlohmann::json default_template();

    // file may be empty (defaults only); overrides are "a.b.c=value" strings
    static ExperimentConfig load(const std::string& path,
                                 const std::vector<std::string>& overrides = {});
    static ExperimentConfig from_json(const nlohmann::json& user);

    const nlohmann::json& resolved() const { return resolved_; }

    std::string data_source() const;
    std::string data_target() const;
    std::string data_val() const;
    std::string mapping_name() const;

    GenerateConfig generate() const;
    StyleParams style() const;
    ArchConfig arch() const;
    PretrainConfig pretrain() const;
    TrainerConfig trainer() const;
    TaskTrainConfig task() const;
    ScaleAlignment depth_alignment() const;
    std::string estimator_path(EstimatorKind kind) const;

    // writes {version, resolved config} next to any command output
    void echo(const std::string& out_dir, const std::string& command) const;

private:
    nlohmann::json resolved_;
};

void set_json_path(nlohmann::json& root, const std::string& dotted_path,
                   const nlohmann::json& value);

} // namespace gantruth
