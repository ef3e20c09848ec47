#pragma once

#include "chartsum/tinylsg/attention.hpp"
#include "chartsum/tinylsg/checkpoint.hpp"
#include "chartsum/tinylsg/model.hpp"
#include "chartsum/tinylsg/trainer.hpp"
#include "chartsum/tinylsg/vocab.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace chartsum {

struct SummaryInput {
    std::string id;
    std::string text;
};

struct TrainingPair {
    SummaryInput input;
    std::string target;
};

/// The pluggable model slot shared by all three approaches. `fit` is called
/// once; `summarize` must be deterministic and safe to call concurrently.
class Summarizer {
public:
    virtual ~Summarizer() = default;
    virtual void fit(const std::vector<TrainingPair>& pairs) = 0;
    virtual std::string summarize(const SummaryInput& input) const = 0;
    /// Identifies the fitted state; equal fingerprints mean equal models.
    virtual std::string fingerprint() const = 0;
};

enum class BackendKind { TinyLsg, Extractive, Oracle, Identity };

std::string to_string(BackendKind kind);
BackendKind backend_from_string(const std::string& name);

struct TinyLsgSettings {
    tinylsg::ModelShape shape;  // vocab_size is filled in by fit()
    tinylsg::LsgConfig lsg;
    tinylsg::TrainConfig train;
    std::size_t min_freq = 1;
    std::size_t max_output_tokens = 128;
    std::size_t max_target_tokens = 256;
};

struct BackendConfig {
    BackendKind kind = BackendKind::Extractive;
    std::size_t extractive_k = 3;
    TinyLsgSettings tiny;
};

/// id -> reference text, used only by the oracle backend.
using ReferenceLookup = std::function<std::optional<std::string>(const std::string& id)>;
using ProgressSink = std::function<void(const std::string& line)>;

/// `seed` overrides backend.tiny.train.seed.
std::unique_ptr<Summarizer> make_summarizer(const BackendConfig& backend, std::uint64_t seed,
                                            ReferenceLookup oracle_lookup = {}, ProgressSink progress = {},
                                            std::string progress_tag = {});

/// Lines, further split after '.', '?' or '!' followed by whitespace.
/// Pieces are trimmed; empty ones dropped.
std::vector<std::string> split_sentences(std::string_view text);

/// Picks the k sentences with the highest centroid score, emitted in source
/// order and joined by single spaces. A sentence scores the sum, over its
/// distinct tokens, of that token's count in the whole input. After fit()
/// only tokens seen in training targets contribute, which is what lets one
/// instance per section specialize. Zero-score sentences are never chosen;
/// ties go to the earlier sentence.
class ExtractiveSummarizer final : public Summarizer {
public:
    explicit ExtractiveSummarizer(std::size_t k) : k_(k) {}
    void fit(const std::vector<TrainingPair>& pairs) override;
    std::string summarize(const SummaryInput& input) const override;
    std::string fingerprint() const override;

    /// Scores in sentence order, for inspection and tests.
    std::vector<std::size_t> sentence_scores(std::string_view text) const;
    const std::set<std::string>& profile() const noexcept { return profile_; }

private:
    std::size_t k_;
    bool fitted_ = false;
    std::set<std::string> profile_;
};

/// Returns the reference text for the input's id; empty when there is none.
class OracleSummarizer final : public Summarizer {
public:
    explicit OracleSummarizer(ReferenceLookup lookup) : lookup_(std::move(lookup)) {}
    void fit(const std::vector<TrainingPair>&) override {}
    std::string summarize(const SummaryInput& input) const override;
    std::string fingerprint() const override { return "oracle"; }

private:
    ReferenceLookup lookup_;
};

class IdentitySummarizer final : public Summarizer {
public:
    void fit(const std::vector<TrainingPair>&) override {}
    std::string summarize(const SummaryInput& input) const override { return input.text; }
    std::string fingerprint() const override { return "identity"; }
};

/// Line-aware codec: rouge tokenization per line, with kLineBreak between
/// non-empty lines, so generated notes keep their header lines.
inline constexpr std::string_view kLineBreak = "<nl>";
std::vector<std::string> encode_lines(std::string_view text);
std::string decode_lines(const std::vector<std::string>& tokens);

class TinyLsgSummarizer final : public Summarizer {
public:
    TinyLsgSummarizer(TinyLsgSettings settings, ProgressSink progress = {}, std::string tag = {});
    void fit(const std::vector<TrainingPair>& pairs) override;
    std::string summarize(const SummaryInput& input) const override;
    std::string fingerprint() const override;

    /// Adopts a trained model instead of fitting one.
    void restore(tinylsg::Checkpoint ckpt);
    tinylsg::Checkpoint checkpoint() const;

    const tinylsg::TinyModel& model() const { return model_; }
    const tinylsg::Vocab& vocab() const { return vocab_; }
    const std::vector<double>& loss_history() const { return loss_history_; }

private:
    std::vector<tinylsg::TokenId> encode_source(std::string_view text) const;

    TinyLsgSettings settings_;
    ProgressSink progress_;
    std::string tag_;
    bool fitted_ = false;
    tinylsg::Vocab vocab_;
    tinylsg::TinyModel model_;
    std::vector<double> loss_history_;
};

}  // namespace chartsum
