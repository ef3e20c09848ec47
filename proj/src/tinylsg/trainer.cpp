#include "chartsum/tinylsg/trainer.hpp"

#include "chartsum/error.hpp"
#include "chartsum/util.hpp"

#include <cmath>

namespace chartsum::tinylsg {

void TrainConfig::validate() const {
    if (!(initial_lr >= 0.0) || !std::isfinite(initial_lr)) {
        throw Error(ErrorKind::InvalidArgument, "learning rate must be finite and non-negative", "lr");
    }
    if (epochs < 1) {
        throw Error(ErrorKind::InvalidArgument, "epochs must be >= 1", "epochs");
    }
    if (batch_size < 1) {
        throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1", "batch_size");
    }
}

TrainResult train(TinyModel& model, const std::vector<Example>& data, const TrainConfig& tc, const LsgConfig& cfg,
                  const EpochCallback& on_epoch) {
    tc.validate();
    cfg.validate();
    if (data.empty()) {
        throw Error(ErrorKind::EmptyTrainingSet, "no training examples");
    }

    const std::size_t batches_per_epoch = (data.size() + tc.batch_size - 1) / tc.batch_size;
    const std::size_t total_steps = batches_per_epoch * tc.epochs;

    TinyModel grad = zeros_like(model);
    TinyModel m1 = zeros_like(model);
    TinyModel m2 = zeros_like(model);
    auto params = parameters(model);
    auto grads = parameters(grad);
    auto first = parameters(m1);
    auto second = parameters(m2);

    Rng rng(tc.seed);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    TrainResult result;
    result.initial_lr = tc.initial_lr;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        if (tc.shuffle) {
            seeded_shuffle(order, rng);
        }
        double epoch_loss = 0.0;
        std::size_t epoch_tokens = 0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const std::size_t begin = b * tc.batch_size;
            const std::size_t end = std::min(begin + tc.batch_size, data.size());
            std::size_t batch_tokens = 0;
            for (std::size_t i = begin; i < end; ++i) {
                batch_tokens += data[order[i]].tgt.size() + 1;
            }
            for (auto& g : grads) {
                g.value->setZero();
            }
            double batch_loss = 0.0;
            const double scale = 1.0 / static_cast<double>(batch_tokens);
            for (std::size_t i = begin; i < end; ++i) {
                batch_loss += accumulate_gradient(model, data[order[i]], cfg, &grad, scale);
            }
            if (!std::isfinite(batch_loss)) {
                throw Error(ErrorKind::NonFiniteLoss, "loss diverged in epoch " + std::to_string(epoch + 1),
                            std::to_string(epoch + 1));
            }
            epoch_loss += batch_loss;
            epoch_tokens += batch_tokens;

            const double lr = tc.initial_lr * (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
            ++step;
            const double bias1 = 1.0 - std::pow(tc.beta1, static_cast<double>(step));
            const double bias2 = 1.0 - std::pow(tc.beta2, static_cast<double>(step));
            for (std::size_t p = 0; p < params.size(); ++p) {
                Matrix& w = *params[p].value;
                const Matrix& g = *grads[p].value;
                Matrix& mean = *first[p].value;
                Matrix& var = *second[p].value;
                mean = tc.beta1 * mean + (1.0 - tc.beta1) * g;
                var = tc.beta2 * var + (1.0 - tc.beta2) * g.cwiseProduct(g);
                w.array() -= lr * (mean.array() / bias1) / ((var.array() / bias2).sqrt() + tc.adam_epsilon);
            }
        }
        const double mean_loss = epoch_loss / static_cast<double>(epoch_tokens);
        result.loss_history.push_back(mean_loss);
        if (on_epoch) {
            on_epoch(epoch + 1, mean_loss);
        }
    }
    result.steps = step;
    return result;
}

TrainResult train(TinyModel& model, const Vocab& vocab, const std::vector<std::pair<std::string, std::string>>& pairs,
                  const TrainConfig& tc, const LsgConfig& cfg, const EpochCallback& on_epoch) {
    std::vector<Example> data;
    data.reserve(pairs.size());
    for (const auto& [src, tgt] : pairs) {
        data.push_back(Example{vocab.encode_text(src), vocab.encode_text(tgt)});
    }
    return train(model, data, tc, cfg, on_epoch);
}

std::vector<TokenId> generate(const TinyModel& model, const std::vector<TokenId>& src, std::size_t max_len,
                              const LsgConfig& cfg) {
    if (max_len < 1) {
        throw Error(ErrorKind::InvalidArgument, "max_len must be >= 1", "max_len");
    }
    const Matrix enc_out = encode(model, src, cfg);
    std::vector<TokenId> prefix{Vocab::kBos};
    std::vector<TokenId> out;
    while (out.size() < max_len) {
        Matrix logits = decode(model, enc_out, prefix);
        const auto last = logits.rows() - 1;
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(last, c) > logits(last, best)) {
                best = c;
            }
        }
        const auto id = static_cast<TokenId>(best);
        if (id == Vocab::kEos) {
            break;
        }
        out.push_back(id);
        prefix.push_back(id);
    }
    return out;
}

GradCheckResult grad_check(const TinyModel& model, const Example& example, const LsgConfig& cfg, double epsilon,
                           std::size_t n_sampled, std::uint64_t seed) {
    if (!(epsilon > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "epsilon must be positive", "epsilon");
    }
    const double tokens = static_cast<double>(example.tgt.size() + 1);
    TinyModel grad = zeros_like(model);
    accumulate_gradient(model, example, cfg, &grad, 1.0 / tokens);

    TinyModel probe = model;
    auto probe_params = parameters(probe);
    auto grad_params = parameters(grad);

    // Flat index -> (tensor, offset).
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t t = 0; t < probe_params.size(); ++t) {
        for (Eigen::Index i = 0; i < probe_params[t].value->size(); ++i) {
            slots.emplace_back(t, static_cast<std::size_t>(i));
        }
    }
    Rng rng(seed);
    const std::size_t n = std::min(n_sampled, slots.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::swap(slots[i], slots[i + uniform_index(rng, slots.size() - i)]);
    }

    GradCheckResult result;
    for (std::size_t s = 0; s < n; ++s) {
        const auto [t, offset] = slots[s];
        double* value = probe_params[t].value->data() + offset;
        const double original = *value;
        *value = original + epsilon;
        const double plus = example_loss(probe, example, cfg);
        *value = original - epsilon;
        const double minus = example_loss(probe, example, cfg);
        *value = original;

        ParamCheck check;
        check.tensor = probe_params[t].name;
        check.offset = offset;
        check.analytic = grad_params[t].value->data()[offset];
        check.numeric = (plus - minus) / (2.0 * epsilon);
        const double diff = std::abs(check.analytic - check.numeric);
        const double scale = std::max(std::abs(check.analytic), std::abs(check.numeric));
        check.error = scale < 1e-8 ? diff : diff / scale;
        result.max_relative_error = std::max(result.max_relative_error, check.error);
        result.checks.push_back(std::move(check));
    }
    return result;
}

}  // namespace chartsum::tinylsg
