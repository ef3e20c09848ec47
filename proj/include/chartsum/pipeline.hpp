#pragma once

#include "chartsum/corpus.hpp"
#include "chartsum/section_parser.hpp"
#include "chartsum/summarizer.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace chartsum {

struct ApproachConfig {
    Approach approach = Approach::Single;
    BackendConfig backend;
    /// Sections that get their own model. Empty means every canonical
    /// section observed in the training notes.
    std::vector<SectionKind> sections;
    std::optional<BackendConfig> stage2;
    std::uint64_t seed = 0;
    /// Train stage 2 on a held-out half of the training corpus instead of
    /// the stage-1 training encounters themselves.
    bool stage2_split = false;
    /// Stage-2 input keeps the canonical section headers.
    bool stage2_headers = true;

    // Execution knobs; not part of the config hash.
    std::size_t jobs = 1;
    ProgressSink progress;

    void validate() const;
};

/// Canonical JSON (sorted keys, no whitespace) of everything that affects
/// predictions.
std::string config_json(const ApproachConfig& cfg);
std::string config_hash(const ApproachConfig& cfg);
/// Reads the keys written by config_json on top of `base`; unknown keys are
/// ignored so a run file can carry paths next to the model settings.
ApproachConfig config_from_json(const std::string& text, ApproachConfig base = {});

struct RunLog {
    std::vector<SectionKind> trained_sections;
    std::size_t unknown_sections_in_training = 0;
    std::size_t stage2_empty_inputs = 0;
    /// Stage-1 ensemble fingerprints when applied to training and eval
    /// encounters; equal unless the models were retrained in between.
    std::string stage1_train_fingerprint;
    std::string stage1_eval_fingerprint;
    std::vector<std::string> lines;
};

/// One summarizer per section, each trained on (dialogue -> section body).
class SectionEnsemble {
public:
    static SectionEnsemble train(const Corpus& train, const ApproachConfig& cfg, const ReferenceLookup& notes,
                                 RunLog* log = nullptr);

    /// Assembled note in canonical order; sections with empty output are left out.
    std::string apply(const Encounter& e) const;
    /// Assembled outputs for every encounter, in corpus order.
    std::vector<std::string> apply_all(const Corpus& c, std::size_t jobs) const;
    std::string fingerprint() const;
    const std::vector<SectionKind>& sections() const noexcept { return kinds_; }

private:
    std::vector<SectionKind> kinds_;
    std::vector<std::unique_ptr<Summarizer>> models_;
};

/// Canonical sections present in the training notes, in canonical order.
std::vector<SectionKind> observed_sections(const Corpus& train, std::size_t* unknown_count = nullptr);

/// Body text of `kind` in `note` (repeated sections newline-joined).
std::optional<std::string> section_text(const ChartNote& note, SectionKind kind);

PredictionSet run_approach1(const Corpus& train, const Corpus& eval, const ApproachConfig& cfg, RunLog* log = nullptr);
PredictionSet run_approach2(const Corpus& train, const Corpus& eval, const ApproachConfig& cfg, RunLog* log = nullptr);
PredictionSet run_approach3(const Corpus& train, const Corpus& eval, const ApproachConfig& cfg, RunLog* log = nullptr);
/// Dispatches on cfg.approach.
PredictionSet run_approach(const Corpus& train, const Corpus& eval, const ApproachConfig& cfg, RunLog* log = nullptr);

}  // namespace chartsum
