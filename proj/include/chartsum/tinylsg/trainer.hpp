#pragma once

#include "chartsum/tinylsg/model.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace chartsum::tinylsg {

/// Adam with a linearly decayed step size: step t of T uses
/// initial_lr * (1 - t / T), so the last update is initial_lr / T.
struct TrainConfig {
    double initial_lr = 5e-5;
    std::size_t epochs = 20;
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    bool shuffle = true;

    void validate() const;
};

struct TrainResult {
    /// Token-weighted mean cross-entropy per epoch, measured before each
    /// batch's update.
    std::vector<double> loss_history;
    std::size_t steps = 0;
    double initial_lr = 0.0;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Trains in place. Throws EmptyTrainingSet, NonFiniteLoss (subject = epoch).
TrainResult train(TinyModel& model, const std::vector<Example>& data, const TrainConfig& tc, const LsgConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Text-level convenience: encodes pairs with `vocab` (rouge tokenization).
TrainResult train(TinyModel& model, const Vocab& vocab, const std::vector<std::pair<std::string, std::string>>& pairs,
                  const TrainConfig& tc, const LsgConfig& cfg, const EpochCallback& on_epoch = {});

/// Greedy decoding from BOS; stops at EOS (not emitted) or after `max_len`
/// tokens. Argmax ties go to the lowest token id.
std::vector<TokenId> generate(const TinyModel& model, const std::vector<TokenId>& src, std::size_t max_len,
                              const LsgConfig& cfg);

struct ParamCheck {
    std::string tensor;
    std::size_t offset = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double error = 0.0;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::vector<ParamCheck> checks;
};

/// Compares the analytic gradient of the mean token cross-entropy with the
/// central difference (L(θ+ε) − L(θ−ε)) / 2ε on `n_sampled` scalar
/// parameters drawn without replacement (all of them if n_sampled exceeds
/// the parameter count). Error is |a − n| / max(|a|, |n|), or |a − n| when
/// both magnitudes are below 1e-8.
GradCheckResult grad_check(const TinyModel& model, const Example& example, const LsgConfig& cfg, double epsilon,
                           std::size_t n_sampled, std::uint64_t seed = 0);

}  // namespace chartsum::tinylsg
