#pragma once

#include <optional>
#include <string>

#include "gantruth/image.hpp"

namespace gantruth {

// K x K pixel counts; entry (true, predicted). Ignored pixels never enter.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes);

    int num_classes() const { return k_; }
    int64_t at(int true_class, int pred_class) const;
    int64_t total() const;

    void accumulate(const std::vector<int>& pred, const std::vector<int>& truth,
                    int ignore_index);
    void accumulate(const LabelMap& pred, const LabelMap& truth, int ignore_index);
    void merge(const ConfusionMatrix& other);

    const std::vector<int64_t>& counts() const { return counts_; }

private:
    int k_;
    std::vector<int64_t> counts_;
};

struct MiouReport {
    // IoU per class; nullopt when the class is absent from both prediction
    // and truth (such classes are excluded from the mean, not scored 0)
    std::vector<std::optional<double>> per_class;
    std::optional<double> miou;  // nullopt when every class is absent
    int64_t evaluated_pixels = 0;
};

MiouReport miou(const ConfusionMatrix& cm);

enum class ScaleAlignment { kMedianRatio, kLeastSquares };

// Absolute relative error after aligning predictions to the ground truth by
// one global constant. The default constant is the median of gt/pred over
// the valid mask, which makes the global-scale invariance exact.
double scale_aligned_abs_rel(const std::vector<float>& pred, const std::vector<float>& gt,
                             const std::vector<uint8_t>& valid,
                             ScaleAlignment alignment = ScaleAlignment::kMedianRatio);

struct EvalReport {
    std::string dataset_hash;
    std::string checkpoint_hash;
    std::vector<std::pair<std::string, std::optional<double>>> per_class_iou;
    std::optional<double> miou;
    int64_t pixels = 0;

    std::string to_text() const;
    std::string to_json() const;
};

} // namespace gantruth
