#pragma once

#include <optional>

#include "gantruth/estimators.hpp"
#include "gantruth/nn/adam.hpp"

namespace gantruth {

enum class ModelFamily { kSimpleGan, kGantruth, kUnit, kUnitGantruth };

const char* model_family_name(ModelFamily m);
ModelFamily model_family_from_name(const std::string& name);

inline bool is_bidirectional(ModelFamily m) {
    return m == ModelFamily::kUnit || m == ModelFamily::kUnitGantruth;
}

// S / D / I task switches
struct GtTasks {
    bool semseg = false;
    bool disparity = false;
    bool instance = false;

    bool any() const { return semseg || disparity || instance; }
    std::string to_string() const;
    static GtTasks parse(const std::string& spec);  // e.g. "S+D", "SDI", ""
};

struct TrainerConfig {
    ModelFamily model = ModelFamily::kGantruth;
    GtTasks tasks;
    LossWeights weights;
    nn::AdamConfig optimizer;  // lr 1e-4, beta1 0.5, beta2 0.999
    int batch_size = 1;
    int steps = 2000;
    uint64_t seed = 0;
    int checkpoint_every = 1000;
    int log_every = 10;
    double disp_scale_const = 1.0;
    ArchConfig arch;
    std::string mapping = "toy-source-to-toy-target";

    void validate() const;
};

struct EstimatorSet {
    std::optional<EstimatorBundle> semseg;
    std::optional<EstimatorBundle> disparity;
    std::optional<EstimatorBundle> instance;
};

struct StepMetrics {
    int64_t step = 0;
    double wall_ms = 0;
    std::vector<std::pair<std::string, double>> terms;
};

// Thrown when a loss term goes non-finite; the last on-disk checkpoint is
// left untouched.
class TrainAbort : public Error {
public:
    TrainAbort(const std::string& term, int64_t step)
        : Error(cat("non-finite loss term '", term, "' at step ", step)), term_(term) {}
    const std::string& term() const { return term_; }

private:
    std::string term_;
};

// One training run: owns the networks, both optimizers and the RNG stream.
// Everything random flows through the single seeded stream, so a run is
// bitwise reproducible and resume is an exact continuation.
class Trainer {
public:
    Trainer(TrainerConfig config, const Dataset& source, const Dataset& target,
            EstimatorSet estimators);

    // exact continuation from a checkpoint written by save_checkpoint
    static Trainer resume(const std::string& checkpoint_path, const Dataset& source,
                          const Dataset& target, EstimatorSet estimators);

    StepMetrics train_step();

    // runs until config.steps, writing checkpoints and metrics.jsonl under
    // out_dir (empty out_dir trains in memory only)
    void run(const std::string& out_dir, std::ostream* log = nullptr);

    void save_checkpoint(const std::string& path) const;

    int64_t step() const { return step_; }
    const TrainerConfig& config() const { return config_; }
    const TranslatorPair<float>& translator() const { return translator_; }
    const MultiScaleDiscriminator<float>& disc_t() const { return disc_t_; }
    const MultiScaleDiscriminator<float>& disc_s() const;
    nn::NamedParams<float> all_parameters() const;  // translator + discriminators
    uint64_t estimator_checksums() const;           // combined, for freeze audits
    const StepMetrics& last_metrics() const { return last_metrics_; }

    // deterministic-mode translation of one batch (epsilon = 0)
    ImageBatch translate_deterministic(const ImageBatch& x) const;

private:
    void build_networks();
    GtSupervision<float> make_supervision(const std::vector<size_t>& src_idx) const;

    TrainerConfig config_;
    const Dataset* source_ = nullptr;
    const Dataset* target_ = nullptr;
    EstimatorSet estimators_;
    LabelMapping mapping_;

    // preloaded samples
    std::vector<ImageU8> src_images_, tgt_images_;
    std::vector<LabelMap> src_labels_;  // remapped
    std::vector<SceneGroundTruth> src_gt_;

    Rng rng_{0};
    TranslatorPair<float> translator_;
    MultiScaleDiscriminator<float> disc_t_, disc_s_;
    std::optional<nn::Adam<float>> gen_opt_, disc_opt_;
    int64_t step_ = 0;
    StepMetrics last_metrics_;
    uint64_t initial_estimator_checksum_ = 0;
};

// Translates every source image of `data` in deterministic mode and writes a
// dataset with the same layout: translated images under source/, ground
// truth copied byte-identically, manifest annotated with the checkpoint hash.
void translate_dataset(const std::string& checkpoint_path, const Dataset& data,
                       const std::string& out_dir, std::ostream* log = nullptr);

// loads a checkpoint into a fresh trainer (requires matching datasets/estimators)
Trainer load_trainer_checkpoint(const std::string& path, const Dataset& source,
                                const Dataset& target, EstimatorSet estimators);

} // namespace gantruth
