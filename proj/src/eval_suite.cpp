#include "gantruth/eval_suite.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace gantruth {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : k_(num_classes), counts_(size_t(num_classes) * size_t(num_classes), 0) {
    GT_REQUIRE(num_classes >= 1, "confusion matrix needs at least one class");
}

int64_t ConfusionMatrix::at(int t, int p) const {
    GT_REQUIRE(t >= 0 && t < k_ && p >= 0 && p < k_, "confusion matrix index out of range");
    return counts_[size_t(t) * k_ + p];
}

int64_t ConfusionMatrix::total() const {
    int64_t s = 0;
    for (int64_t v : counts_) s += v;
    return s;
}

void ConfusionMatrix::accumulate(const std::vector<int>& pred, const std::vector<int>& truth,
                                 int ignore_index) {
    GT_REQUIRE(pred.size() == truth.size(), "confusion: prediction/truth size mismatch");
    for (size_t i = 0; i < pred.size(); ++i) {
        int t = truth[i];
        if (t == ignore_index) continue;
        int p = pred[i];
        GT_REQUIRE(t >= 0 && t < k_, "confusion: true id ", t, " out of range for K=", k_);
        GT_REQUIRE(p >= 0 && p < k_, "confusion: predicted id ", p, " out of range for K=", k_);
        ++counts_[size_t(t) * k_ + p];
    }
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& truth, int ignore_index) {
    GT_REQUIRE(pred.h == truth.h && pred.w == truth.w, "confusion: label map shape mismatch");
    std::vector<int> p(pred.ids.begin(), pred.ids.end());
    std::vector<int> t(truth.ids.begin(), truth.ids.end());
    accumulate(p, t, ignore_index);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    GT_REQUIRE(other.k_ == k_, "confusion: merge with different class count");
    for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

MiouReport miou(const ConfusionMatrix& cm) {
    MiouReport r;
    int k = cm.num_classes();
    r.per_class.resize(size_t(k));
    double sum = 0;
    int present = 0;
    for (int c = 0; c < k; ++c) {
        int64_t diag = cm.at(c, c);
        int64_t row = 0, col = 0;
        for (int j = 0; j < k; ++j) {
            row += cm.at(c, j);
            col += cm.at(j, c);
        }
        int64_t denom = row + col - diag;
        if (denom == 0) {
            r.per_class[size_t(c)] = std::nullopt;  // absent from both pred and truth
            continue;
        }
        double iou = double(diag) / double(denom);
        r.per_class[size_t(c)] = iou;
        sum += iou;
        ++present;
    }
    r.evaluated_pixels = cm.total();
    if (present > 0) r.miou = sum / present;
    return r;
}

double scale_aligned_abs_rel(const std::vector<float>& pred, const std::vector<float>& gt,
                             const std::vector<uint8_t>& valid, ScaleAlignment alignment) {
    GT_REQUIRE(pred.size() == gt.size() && gt.size() == valid.size(),
               "scale_aligned_abs_rel: size mismatch");
    std::vector<double> ratios;
    double sp = 0, spp = 0;  // least-squares accumulators
    size_t n_valid = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (!valid[i]) continue;
        ++n_valid;
        GT_REQUIRE(gt[i] > 0.f, "scale_aligned_abs_rel: ground truth must be positive on the mask");
        GT_REQUIRE(pred[i] > 0.f, "scale_aligned_abs_rel: prediction ", pred[i],
                   " is not positive on the mask");
        ratios.push_back(double(gt[i]) / double(pred[i]));
        sp += double(pred[i]) * double(gt[i]);
        spp += double(pred[i]) * double(pred[i]);
    }
    GT_REQUIRE(n_valid > 0, "scale_aligned_abs_rel: empty valid mask");

    double c;
    if (alignment == ScaleAlignment::kMedianRatio) {
        // lower median; scales exactly with 1/k under pred -> k*pred
        size_t mid = (ratios.size() - 1) / 2;
        std::nth_element(ratios.begin(), ratios.begin() + long(mid), ratios.end());
        c = ratios[mid];
    } else {
        c = sp / spp;
    }

    double acc = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (!valid[i]) continue;
        acc += std::abs(c * double(pred[i]) - double(gt[i])) / double(gt[i]);
    }
    return acc / double(n_valid);
}

std::string EvalReport::to_text() const {
    std::string s;
    s += "dataset_hash:    " + dataset_hash + "\n";
    s += "checkpoint_hash: " + checkpoint_hash + "\n";
    s += "pixels:          " + std::to_string(pixels) + "\n";
    for (const auto& [name, iou] : per_class_iou)
        s += cat("iou ", name, ": ", iou.has_value() ? cat(*iou) : std::string("absent"), "\n");
    s += cat("miou: ", miou.has_value() ? cat(*miou) : std::string("undefined"), "\n");
    return s;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["dataset_hash"] = dataset_hash;
    j["checkpoint_hash"] = checkpoint_hash;
    j["pixels"] = pixels;
    j["per_class_iou"] = nlohmann::json::object();
    for (const auto& [name, iou] : per_class_iou) {
        if (iou.has_value())
            j["per_class_iou"][name] = *iou;
        else
            j["per_class_iou"][name] = nullptr;
    }
    if (miou.has_value())
        j["miou"] = *miou;
    else
        j["miou"] = nullptr;
    return j.dump(2);
}

} // namespace gantruth
