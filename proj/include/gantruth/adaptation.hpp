#pragma once

#include <ostream>

#include "gantruth/eval_suite.hpp"
#include "gantruth/scene_forge.hpp"

namespace gantruth {

// Two-step adaptation: the task network is trained on an already-translated
// (or raw) dataset and never learned jointly with translation.
struct TaskTrainConfig {
    int steps = 3000;
    int batch_size = 2;
    double lr = 1e-3;
    uint64_t seed = 0;
    int base_channels = 8;
    std::string mapping = "toy-source-to-toy-target";
    int log_every = 500;
};

enum class TaskImageDomain { kSource, kTarget };

struct AdaptationResult {
    std::optional<double> miou;
    EvalReport report;
};

// Trains a fresh semantic-segmentation task net (same family as the frozen
// estimator, fresh initialization) on (train_data, train_domain) and reports
// mIOU against the target-domain validation set.
AdaptationResult adaptation_run(const Dataset& train_data, TaskImageDomain train_domain,
                                const Dataset& target_val, const TaskTrainConfig& config,
                                std::ostream* log = nullptr);

} // namespace gantruth
