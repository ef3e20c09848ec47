#include "chartsum/pipeline.hpp"

#include "chartsum/error.hpp"
#include "chartsum/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace chartsum {

namespace {

using json = nlohmann::json;

json backend_json(const BackendConfig& b) {
    const auto& t = b.tiny;
    return json{{"kind", to_string(b.kind)},
                {"extractive_k", b.extractive_k},
                {"tinylsg",
                 {{"d_model", t.shape.d_model},
                  {"n_heads", t.shape.n_heads},
                  {"n_encoder_layers", t.shape.n_encoder_layers},
                  {"n_decoder_layers", t.shape.n_decoder_layers},
                  {"d_ff", t.shape.d_ff},
                  {"block_size", t.lsg.block_size},
                  {"sparsity_stride", t.lsg.sparsity_stride},
                  {"num_global", t.lsg.num_global},
                  {"max_input_tokens", t.lsg.max_input_tokens},
                  {"local_radius", t.lsg.local_radius},
                  {"initial_lr", t.train.initial_lr},
                  {"epochs", t.train.epochs},
                  {"batch_size", t.train.batch_size},
                  {"shuffle", t.train.shuffle},
                  {"min_freq", t.min_freq},
                  {"max_output_tokens", t.max_output_tokens},
                  {"max_target_tokens", t.max_target_tokens}}}};
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

BackendConfig backend_from_json(const json& j, BackendConfig b) {
    if (j.is_string()) {
        b.kind = backend_from_string(j.get<std::string>());
        return b;
    }
    if (j.contains("kind")) {
        b.kind = backend_from_string(j.at("kind").get<std::string>());
    }
    read_opt(j, "extractive_k", b.extractive_k);
    if (j.contains("tinylsg")) {
        const auto& t = j.at("tinylsg");
        auto& s = b.tiny;
        read_opt(t, "d_model", s.shape.d_model);
        read_opt(t, "n_heads", s.shape.n_heads);
        read_opt(t, "n_encoder_layers", s.shape.n_encoder_layers);
        read_opt(t, "n_decoder_layers", s.shape.n_decoder_layers);
        read_opt(t, "d_ff", s.shape.d_ff);
        read_opt(t, "block_size", s.lsg.block_size);
        read_opt(t, "sparsity_stride", s.lsg.sparsity_stride);
        read_opt(t, "num_global", s.lsg.num_global);
        read_opt(t, "max_input_tokens", s.lsg.max_input_tokens);
        read_opt(t, "local_radius", s.lsg.local_radius);
        read_opt(t, "initial_lr", s.train.initial_lr);
        read_opt(t, "epochs", s.train.epochs);
        read_opt(t, "batch_size", s.train.batch_size);
        read_opt(t, "shuffle", s.train.shuffle);
        read_opt(t, "min_freq", s.min_freq);
        read_opt(t, "max_output_tokens", s.max_output_tokens);
        read_opt(t, "max_target_tokens", s.max_target_tokens);
    }
    return b;
}

void validate_backend(const BackendConfig& b) {
    if (b.kind == BackendKind::Extractive && b.extractive_k == 0) {
        throw Error(ErrorKind::InvalidArgument, "extractive_k must be at least 1", "extractive_k");
    }
    if (b.kind == BackendKind::TinyLsg) {
        tinylsg::ModelShape shape = b.tiny.shape;
        shape.vocab_size = std::max<std::size_t>(shape.vocab_size, 1);
        shape.validate();
        b.tiny.lsg.validate();
        b.tiny.train.validate();
        if (b.tiny.min_freq == 0) {
            throw Error(ErrorKind::InvalidArgument, "min_freq must be at least 1", "min_freq");
        }
    }
}

ReferenceLookup note_lookup(const Corpus& train, const Corpus& eval) {
    auto notes = std::make_shared<std::map<std::string, std::string>>();
    for (const auto* c : {&eval, &train}) {
        for (const auto& e : c->encounters) {
            if (e.note) {
                notes->emplace(e.id, *e.note);
            }
        }
    }
    return [notes](const std::string& id) -> std::optional<std::string> {
        auto it = notes->find(id);
        if (it == notes->end()) {
            return std::nullopt;
        }
        return it->second;
    };
}

void check_approach(const ApproachConfig& cfg, Approach expected) {
    if (cfg.approach != expected) {
        throw Error(ErrorKind::InvalidArgument,
                    "config approach is " + to_string(cfg.approach) + ", expected " + to_string(expected),
                    to_string(cfg.approach));
    }
    cfg.validate();
}

PredictionSet make_predictions(const ApproachConfig& cfg, const Corpus& eval, const std::vector<std::string>& texts) {
    PredictionSet out;
    out.approach = cfg.approach;
    out.seed = cfg.seed;
    out.config_hash = config_hash(cfg);
    for (std::size_t i = 0; i < eval.encounters.size(); ++i) {
        out.entries[eval.encounters[i].id] = texts[i];
    }
    return out;
}

std::vector<std::string> summarize_all(const Summarizer& s, const Corpus& c, std::size_t jobs) {
    std::vector<std::string> out(c.encounters.size());
    parallel_for(out.size(), jobs, [&](std::size_t i) {
        const auto& e = c.encounters[i];
        out[i] = s.summarize(SummaryInput{e.id, e.dialogue});
    });
    return out;
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string strip_headers(const std::string& assembled) {
    ChartNote note = segment_note(assembled);
    std::string out;
    for (const auto& s : note.sections) {
        if (s.body.empty()) {
            continue;
        }
        if (!out.empty()) {
            out += "\n\n";
        }
        out += s.body;
    }
    return out;
}

constexpr std::uint64_t kStage2SeedOffset = 1000;

}  // namespace

void ApproachConfig::validate() const {
    if (approach != Approach::Single && approach != Approach::SectionWise && approach != Approach::MultiLayer) {
        throw Error(ErrorKind::InvalidArgument, "approach must be single, section-wise or multi-layer",
                    to_string(approach));
    }
    validate_backend(backend);
    if (approach == Approach::MultiLayer) {
        if (!stage2) {
            throw Error(ErrorKind::InvalidArgument, "multi-layer approach needs a stage-2 backend", "stage2");
        }
        validate_backend(*stage2);
    }
    for (auto k : sections) {
        if (k == SectionKind::UNKNOWN) {
            throw Error(ErrorKind::InvalidArgument, "UNKNOWN cannot be configured as a section", "sections");
        }
    }
    if (jobs == 0) {
        throw Error(ErrorKind::InvalidArgument, "jobs must be at least 1", "jobs");
    }
}

std::string config_json(const ApproachConfig& cfg) {
    json j;
    j["approach"] = to_string(cfg.approach);
    j["backend"] = backend_json(cfg.backend);
    json sections = json::array();
    for (auto k : cfg.sections) {
        sections.push_back(std::string(to_string(k)));
    }
    j["sections"] = sections;
    j["stage2"] = cfg.stage2 ? backend_json(*cfg.stage2) : json(nullptr);
    j["seed"] = cfg.seed;
    j["stage2_split"] = cfg.stage2_split;
    j["stage2_headers"] = cfg.stage2_headers;
    return j.dump();
}

std::string config_hash(const ApproachConfig& cfg) { return hex64(fnv1a64(config_json(cfg))); }

ApproachConfig config_from_json(const std::string& text, ApproachConfig base) {
    try {
        const json j = json::parse(text);
        if (!j.is_object()) {
            throw Error(ErrorKind::MalformedFile, "run config must be a JSON object");
        }
        if (j.contains("approach")) {
            base.approach = approach_from_string(j.at("approach").get<std::string>());
        }
        if (j.contains("backend")) {
            base.backend = backend_from_json(j.at("backend"), base.backend);
        }
        if (j.contains("sections")) {
            base.sections.clear();
            for (const auto& s : j.at("sections")) {
                base.sections.push_back(section_kind_from_string(s.get<std::string>()));
            }
        }
        if (j.contains("stage2")) {
            if (j.at("stage2").is_null()) {
                base.stage2.reset();
            } else {
                base.stage2 = backend_from_json(j.at("stage2"), base.stage2.value_or(BackendConfig{}));
            }
        }
        read_opt(j, "seed", base.seed);
        read_opt(j, "stage2_split", base.stage2_split);
        read_opt(j, "stage2_headers", base.stage2_headers);
        read_opt(j, "jobs", base.jobs);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedFile, std::string("run config: ") + e.what());
    }
    return base;
}

// ---------------------------------------------------------------------------
// Sections
// ---------------------------------------------------------------------------

std::optional<std::string> section_text(const ChartNote& note, SectionKind kind) {
    std::optional<std::string> out;
    for (const auto& s : note.sections) {
        if (s.id.kind != kind) {
            continue;
        }
        if (!out) {
            out = s.body;
        } else {
            *out += "\n" + s.body;
        }
    }
    return out;
}

std::vector<SectionKind> observed_sections(const Corpus& train, std::size_t* unknown_count) {
    std::set<SectionKind> seen;
    std::size_t unknown = 0;
    for (const auto& e : train.encounters) {
        if (!e.note) {
            continue;
        }
        for (const auto& s : segment_note(*e.note).sections) {
            if (s.id.is_unknown()) {
                ++unknown;
            } else {
                seen.insert(s.id.kind);
            }
        }
    }
    if (unknown_count) {
        *unknown_count = unknown;
    }
    std::vector<SectionKind> out;
    for (auto k : kCanonicalOrder) {
        if (seen.count(k)) {
            out.push_back(k);
        }
    }
    return out;
}

SectionEnsemble SectionEnsemble::train(const Corpus& train, const ApproachConfig& cfg, const ReferenceLookup& notes,
                                       RunLog* log) {
    std::size_t unknown = 0;
    auto observed = observed_sections(train, &unknown);
    std::vector<SectionKind> kinds = cfg.sections.empty() ? observed : cfg.sections;
    std::sort(kinds.begin(), kinds.end(),
              [](SectionKind a, SectionKind b) { return canonical_rank(a) < canonical_rank(b); });
    kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());
    if (kinds.empty()) {
        throw Error(ErrorKind::EmptyTrainingSet, "no canonical sections found in the training notes");
    }

    // Segment every training note once.
    std::vector<std::optional<ChartNote>> segmented(train.encounters.size());
    for (std::size_t i = 0; i < train.encounters.size(); ++i) {
        if (train.encounters[i].note) {
            segmented[i] = segment_note(*train.encounters[i].note);
        }
    }

    std::vector<std::vector<TrainingPair>> pairs(kinds.size());
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        for (std::size_t i = 0; i < train.encounters.size(); ++i) {
            if (!segmented[i]) {
                continue;
            }
            if (auto text = section_text(*segmented[i], kinds[k])) {
                const auto& e = train.encounters[i];
                pairs[k].push_back(TrainingPair{SummaryInput{e.id, e.dialogue}, *text});
            }
        }
        if (pairs[k].empty()) {
            const std::string name(to_string(kinds[k]));
            throw Error(ErrorKind::SectionNeverObserved, "section " + name + " has no training instances", name);
        }
    }

    SectionEnsemble ens;
    ens.kinds_ = kinds;
    ens.models_.resize(kinds.size());
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        const SectionKind kind = kinds[k];
        ReferenceLookup section_lookup = [notes, kind](const std::string& id) -> std::optional<std::string> {
            auto note = notes(id);
            if (!note) {
                return std::nullopt;
            }
            return section_text(segment_note(*note), kind);
        };
        ens.models_[k] = make_summarizer(cfg.backend, cfg.seed + canonical_rank(kind), std::move(section_lookup),
                                         cfg.progress, std::string(to_string(kind)));
    }
    parallel_for(kinds.size(), cfg.jobs, [&](std::size_t k) { ens.models_[k]->fit(pairs[k]); });

    if (log) {
        log->trained_sections = kinds;
        log->unknown_sections_in_training = unknown;
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            log->lines.push_back("section " + std::string(to_string(kinds[k])) + ": " +
                                 std::to_string(pairs[k].size()) + " training pairs, model " +
                                 ens.models_[k]->fingerprint());
        }
    }
    return ens;
}

std::string SectionEnsemble::apply(const Encounter& e) const {
    ChartNote note;
    const SummaryInput input{e.id, e.dialogue};
    for (std::size_t k = 0; k < kinds_.size(); ++k) {
        std::string text = models_[k]->summarize(input);
        if (blank(text)) {
            continue;
        }
        note.sections.push_back(Section{kinds_[k], std::string(display_header(kinds_[k])), std::move(text)});
    }
    if (note.sections.empty()) {
        return {};
    }
    return assemble_note(note, HeaderStyle::Canonical, true);
}

std::vector<std::string> SectionEnsemble::apply_all(const Corpus& c, std::size_t jobs) const {
    std::vector<std::string> out(c.encounters.size());
    parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = apply(c.encounters[i]); });
    return out;
}

std::string SectionEnsemble::fingerprint() const {
    std::string bytes;
    for (std::size_t k = 0; k < kinds_.size(); ++k) {
        bytes += std::string(to_string(kinds_[k])) + "=" + models_[k]->fingerprint() + ";";
    }
    return hex64(fnv1a64(bytes));
}

// ---------------------------------------------------------------------------
// Approaches
// ---------------------------------------------------------------------------

PredictionSet run_approach1(const Corpus& train, const Corpus& eval, const ApproachConfig& cfg, RunLog* log) {
    check_approach(cfg, Approach::Single);
    std::vector<TrainingPair> pairs;
    for (const auto& e : train.encounters) {
        if (e.note) {
            pairs.push_back(TrainingPair{SummaryInput{e.id, e.dialogue}, *e.note});
        }
    }
    auto model = make_summarizer(cfg.backend, cfg.seed, note_lookup(train, eval), cfg.progress, "single");
    model->fit(pairs);
    if (log) {
        log->lines.push_back("single: " + std::to_string(pairs.size()) + " training pairs, model " + model->fingerprint());
    }
    return make_predictions(cfg, eval, summarize_all(*model, eval, cfg.jobs));
}

PredictionSet run_approach2(const Corpus& train, const Corpus& eval, const ApproachConfig& cfg, RunLog* log) {
    check_approach(cfg, Approach::SectionWise);
    auto ens = SectionEnsemble::train(train, cfg, note_lookup(train, eval), log);
    return make_predictions(cfg, eval, ens.apply_all(eval, cfg.jobs));
}

PredictionSet run_approach3(const Corpus& train, const Corpus& eval, const ApproachConfig& cfg, RunLog* log) {
    check_approach(cfg, Approach::MultiLayer);
    const auto notes = note_lookup(train, eval);

    Corpus stage1_train = train;
    Corpus stage2_train = train;
    if (cfg.stage2_split) {
        auto halves = split_corpus(train, 0.5, cfg.seed);
        stage1_train = std::move(halves.first);
        stage2_train = std::move(halves.second);
    }

    auto ens = SectionEnsemble::train(stage1_train, cfg, notes, log);
    const std::string train_fp = ens.fingerprint();
    auto stage1_on_train = ens.apply_all(stage2_train, cfg.jobs);
    auto stage1_on_eval = ens.apply_all(eval, cfg.jobs);
    const std::string eval_fp = ens.fingerprint();

    auto stage2_input = [&](const std::string& assembled) {
        return cfg.stage2_headers ? assembled : strip_headers(assembled);
    };

    std::size_t empty_inputs = 0;
    std::vector<TrainingPair> pairs;
    for (std::size_t i = 0; i < stage2_train.encounters.size(); ++i) {
        const auto& e = stage2_train.encounters[i];
        if (stage1_on_train[i].empty()) {
            ++empty_inputs;
        }
        if (e.note) {
            pairs.push_back(TrainingPair{SummaryInput{e.id, stage2_input(stage1_on_train[i])}, *e.note});
        }
    }
    for (const auto& s : stage1_on_eval) {
        if (s.empty()) {
            ++empty_inputs;
        }
    }

    auto stage2 = make_summarizer(*cfg.stage2, cfg.seed + kStage2SeedOffset, notes, cfg.progress, "stage2");
    stage2->fit(pairs);

    std::vector<std::string> out(eval.encounters.size());
    parallel_for(out.size(), cfg.jobs, [&](std::size_t i) {
        out[i] = stage2->summarize(SummaryInput{eval.encounters[i].id, stage2_input(stage1_on_eval[i])});
    });

    if (log) {
        log->stage1_train_fingerprint = train_fp;
        log->stage1_eval_fingerprint = eval_fp;
        log->stage2_empty_inputs = empty_inputs;
        log->lines.push_back("stage1 ensemble " + train_fp + " (train) / " + eval_fp + " (eval)");
        log->lines.push_back("stage2: " + std::to_string(pairs.size()) + " training pairs, " +
                             std::to_string(empty_inputs) + " empty stage-1 outputs, model " + stage2->fingerprint());
    }
    return make_predictions(cfg, eval, out);
}

PredictionSet run_approach(const Corpus& train, const Corpus& eval, const ApproachConfig& cfg, RunLog* log) {
    switch (cfg.approach) {
        case Approach::Single: return run_approach1(train, eval, cfg, log);
        case Approach::SectionWise: return run_approach2(train, eval, cfg, log);
        case Approach::MultiLayer: return run_approach3(train, eval, cfg, log);
        default: break;
    }
    cfg.validate();
    throw Error(ErrorKind::InvalidArgument, "unsupported approach", to_string(cfg.approach));
}

}  // namespace chartsum
