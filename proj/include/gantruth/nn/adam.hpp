#pragma once

#include "gantruth/nn/graph.hpp"

namespace gantruth::nn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam over an explicit parameter list. Rejects frozen tensors outright:
// a frozen estimator must never be able to sneak into an update.
template <typename T>
class Adam {
public:
    Adam(std::vector<Var<T>> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
        for (size_t i = 0; i < params_.size(); ++i) {
            GT_REQUIRE(params_[i].trainable(),
                       "Adam: parameter ", i, " is frozen or not a trainable leaf");
            for (size_t j = 0; j < i; ++j)
                GT_REQUIRE(params_[j].id() != params_[i].id(),
                           "Adam: parameter ", i, " aliases parameter ", j);
        }
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i].numel(), T(0));
            v_[i].assign(params_[i].numel(), T(0));
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
        for (size_t i = 0; i < params_.size(); ++i) {
            auto& val = params_[i].value();
            auto& g = params_[i].grad();
            auto& m = m_[i];
            auto& v = v_[i];
            for (size_t k = 0; k < val.size(); ++k) {
                m[k] = T(cfg_.beta1) * m[k] + T(1.0 - cfg_.beta1) * g[k];
                v[k] = T(cfg_.beta2) * v[k] + T(1.0 - cfg_.beta2) * g[k] * g[k];
                T mhat = m[k] / T(bc1);
                T vhat = v[k] / T(bc2);
                val[k] -= T(cfg_.lr) * mhat / (std::sqrt(vhat) + T(cfg_.eps));
            }
        }
    }

    int64_t steps_taken() const { return t_; }
    const std::vector<Var<T>>& params() const { return params_; }

    // moment access for checkpointing
    std::vector<T>& m_state(size_t i) { return m_[i]; }
    std::vector<T>& v_state(size_t i) { return v_[i]; }
    void set_steps_taken(int64_t t) { t_ = t; }

private:
    std::vector<Var<T>> params_;
    AdamConfig cfg_;
    std::vector<std::vector<T>> m_, v_;
    int64_t t_ = 0;
};

} // namespace gantruth::nn
