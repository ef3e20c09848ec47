#include "cli.hpp"

#include "chartsum/corpus.hpp"
#include "chartsum/error.hpp"
#include "chartsum/pipeline.hpp"
#include "chartsum/report.hpp"
#include "chartsum/section_parser.hpp"
#include "chartsum/summarizer.hpp"
#include "chartsum/tinylsg/attention.hpp"
#include "chartsum/tinylsg/checkpoint.hpp"
#include "chartsum/tinylsg/trainer.hpp"
#include "chartsum/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <functional>
#include <mutex>
#include <ostream>
#include <sstream>

namespace chartsum::cli {

namespace {

using json = nlohmann::json;

/// Model hyperparameter flags. Values land in `flags`; apply() copies only
/// the ones given on the command line, so a run config file can supply the
/// rest.
struct ModelFlags {
    TinyLsgSettings flags;
    std::vector<std::pair<CLI::Option*, std::function<void(TinyLsgSettings&)>>> setters;

    void apply(TinyLsgSettings& target) const {
        for (const auto& [opt, set] : setters) {
            if (opt->count() > 0) {
                set(target);
            }
        }
    }
};

template <class Get>
CLI::Option* model_flag(CLI::App* cmd, ModelFlags& mf, const std::string& name, const std::string& help, Get get) {
    auto* opt = cmd->add_option(name, get(mf.flags), help)->capture_default_str();
    mf.setters.emplace_back(opt, [get, &mf](TinyLsgSettings& t) { get(t) = get(mf.flags); });
    return opt;
}

void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
    model_flag(cmd, mf, "--lr", "Initial learning rate (decays linearly to 0)",
               [](TinyLsgSettings& s) -> double& { return s.train.initial_lr; })
        ->default_str("5e-5");
    model_flag(cmd, mf, "--epochs", "Training epochs", [](TinyLsgSettings& s) -> std::size_t& { return s.train.epochs; });
    model_flag(cmd, mf, "--batch-size", "Examples per optimizer step",
               [](TinyLsgSettings& s) -> std::size_t& { return s.train.batch_size; });
    model_flag(cmd, mf, "--block", "LSG block size", [](TinyLsgSettings& s) -> std::size_t& { return s.lsg.block_size; });
    model_flag(cmd, mf, "--stride", "LSG sparse stride (0 disables sparse links)",
               [](TinyLsgSettings& s) -> std::size_t& { return s.lsg.sparsity_stride; });
    model_flag(cmd, mf, "--global", "Number of global tokens",
               [](TinyLsgSettings& s) -> std::size_t& { return s.lsg.num_global; });
    model_flag(cmd, mf, "--radius", "Neighbouring blocks each query sees on either side",
               [](TinyLsgSettings& s) -> std::size_t& { return s.lsg.local_radius; });
    model_flag(cmd, mf, "--max-input", "Source tokens kept per input",
               [](TinyLsgSettings& s) -> std::size_t& { return s.lsg.max_input_tokens; });
    model_flag(cmd, mf, "--max-output", "Decoding length limit",
               [](TinyLsgSettings& s) -> std::size_t& { return s.max_output_tokens; });
    model_flag(cmd, mf, "--max-target", "Target tokens kept per training pair",
               [](TinyLsgSettings& s) -> std::size_t& { return s.max_target_tokens; });
    model_flag(cmd, mf, "--d-model", "Model width", [](TinyLsgSettings& s) -> std::size_t& { return s.shape.d_model; });
    model_flag(cmd, mf, "--heads", "Attention heads", [](TinyLsgSettings& s) -> std::size_t& { return s.shape.n_heads; });
    model_flag(cmd, mf, "--enc-layers", "Encoder layers",
               [](TinyLsgSettings& s) -> std::size_t& { return s.shape.n_encoder_layers; });
    model_flag(cmd, mf, "--dec-layers", "Decoder layers",
               [](TinyLsgSettings& s) -> std::size_t& { return s.shape.n_decoder_layers; });
    model_flag(cmd, mf, "--d-ff", "Feed-forward width", [](TinyLsgSettings& s) -> std::size_t& { return s.shape.d_ff; });
    model_flag(cmd, mf, "--min-freq", "Minimum token count for the vocabulary",
               [](TinyLsgSettings& s) -> std::size_t& { return s.min_freq; });
}

const std::vector<std::string> kFormats = {"table", "csv", "json"};
const std::vector<std::string> kApproaches = {"single", "section-wise", "multi-layer"};
const std::vector<std::string> kBackends = {"tinylsg", "extractive", "oracle", "identity"};

std::vector<SectionKind> parse_sections(const std::string& list) {
    std::vector<SectionKind> out;
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(section_kind_from_string(item));
        }
    }
    return out;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
    } else {
        write_file(path, text);
    }
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Io:
        case ErrorKind::MissingColumn:
        case ErrorKind::DuplicateId:
        case ErrorKind::EmptyDialogue:
        case ErrorKind::CorpusTooSmall:
        case ErrorKind::MalformedFile:
        case ErrorKind::InvalidArgument:
        case ErrorKind::AliasConflict: return kExitValidation;
        default: return kExitRuntime;
    }
}

/// Serializes progress lines coming from parallel training.
ProgressSink locked_sink(std::ostream& err) {
    auto mu = std::make_shared<std::mutex>();
    return [mu, &err](const std::string& line) {
        std::lock_guard lock(*mu);
        err << line << '\n';
    };
}

Corpus load_any_corpus(const std::string& path, const std::string& columns) {
    return load_corpus(path, format_from_path(path), ColumnMap::parse(columns));
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct SplitArgs {
    std::string input, columns, aliases, out;
};

void cmd_split(const SplitArgs& a, std::ostream& out, std::ostream& err) {
    const Corpus corpus = load_any_corpus(a.input, a.columns);
    const AliasTable aliases = a.aliases.empty() ? default_aliases() : AliasTable::load(a.aliases);
    std::string text;
    std::size_t notes = 0, sections = 0, unknown = 0, skipped = 0;
    for (const auto& e : corpus.encounters) {
        if (!e.note) {
            ++skipped;
            continue;
        }
        const ChartNote note = segment_note(*e.note, aliases);
        json row;
        row["id"] = e.id;
        row["preamble"] = note.preamble;
        json list = json::array();
        for (const auto& s : note.sections) {
            list.push_back({{"section", to_string(s.id)}, {"header", s.header}, {"body", s.body}});
            unknown += s.id.is_unknown() ? 1 : 0;
        }
        row["sections"] = list;
        text += row.dump() + "\n";
        ++notes;
        sections += note.sections.size();
    }
    emit(text, a.out, out);
    err << "segmented " << notes << " notes into " << sections << " sections (" << unknown << " unknown headers, "
        << skipped << " unlabeled rows skipped)\n";
}

struct TrainArgs {
    std::string train, columns, out, section;
    std::uint64_t seed = 0;
};

void cmd_train(const TrainArgs& a, const ModelFlags& mf, std::ostream& out, std::ostream& err) {
    TinyLsgSettings settings;
    mf.apply(settings);
    settings.train.seed = a.seed;
    std::optional<SectionKind> section;
    if (!a.section.empty()) {
        section = section_kind_from_string(a.section);
    }
    const Corpus corpus = load_any_corpus(a.train, a.columns);
    std::vector<TrainingPair> pairs;
    for (const auto& e : corpus.encounters) {
        if (!e.note) {
            continue;
        }
        if (section) {
            if (auto text = section_text(segment_note(*e.note), *section)) {
                pairs.push_back({{e.id, e.dialogue}, *text});
            }
        } else {
            pairs.push_back({{e.id, e.dialogue}, *e.note});
        }
    }
    if (pairs.empty() && section) {
        throw Error(ErrorKind::SectionNeverObserved, "section " + a.section + " never appears in " + a.train, a.section);
    }
    TinyLsgSummarizer model(settings, locked_sink(err), section ? a.section : "tinylsg");
    model.fit(pairs);
    tinylsg::save_checkpoint(model.checkpoint(), a.out);
    const auto& hist = model.loss_history();
    out << "trained on " << pairs.size() << " pairs, lr0 " << settings.train.initial_lr << ", final loss "
        << (hist.empty() ? 0.0 : hist.back()) << "\n"
        << "checkpoint " << a.out << " (" << tinylsg::parameter_count(model.model()) << " parameters)\n";
}

struct PredictArgs {
    std::string checkpoint, input, columns, out;
    std::size_t jobs = 1;
};

void cmd_predict(const PredictArgs& a, const ModelFlags& mf, std::ostream& out) {
    TinyLsgSettings settings = mf.flags;
    const std::string bytes = read_file(a.checkpoint);
    TinyLsgSummarizer model(settings);
    model.restore(tinylsg::parse_checkpoint(bytes));
    const Corpus corpus = load_any_corpus(a.input, a.columns);
    std::vector<std::string> texts(corpus.size());
    parallel_for(texts.size(), a.jobs, [&](std::size_t i) {
        const auto& e = corpus.encounters[i];
        texts[i] = model.summarize({e.id, e.dialogue});
    });
    PredictionSet preds;
    preds.approach = Approach::Single;
    preds.config_hash = hex64(fnv1a64(bytes));
    for (std::size_t i = 0; i < texts.size(); ++i) {
        preds.entries[corpus.encounters[i].id] = texts[i];
    }
    emit(serialize_predictions(preds), a.out, out);
}

struct ScoreArgs {
    std::string candidates, references, candidate_column = "note", reference_column = "note", format = "table",
                                                                                               label, out_report;
    bool stem = false, stopwords = false;
    std::size_t jobs = 1;
};

void cmd_score(const ScoreArgs& a, std::ostream& out) {
    PredictionSet preds;
    std::string label = "candidates";
    if (std::filesystem::path(a.candidates).extension() == ".json") {
        preds = load_predictions(a.candidates);
        label = to_string(preds.approach);
    } else {
        for (auto& [id, text] : load_texts(a.candidates, a.candidate_column)) {
            preds.entries[id] = text;
        }
    }
    Corpus refs;
    for (auto& [id, text] : load_texts(a.references, a.reference_column)) {
        Encounter e{id, std::string(), std::nullopt};
        if (!text.empty()) {
            e.note = text;
        }
        refs.encounters.push_back(std::move(e));
    }
    rouge::TokenizeOptions opts;
    opts.stem = a.stem;
    opts.remove_stopwords = a.stopwords;
    RunReport r = evaluate(preds, refs, opts, a.jobs);
    r.label = a.label.empty() ? label : a.label;
    if (!a.out_report.empty()) {
        write_file(a.out_report, run_report_to_json(r));
    }
    out << report({r}, report_format_from_string(a.format));
}

struct RunArgs {
    std::string config, approach, backend, stage2_backend, sections, train, eval, data, columns, label, out,
        out_predictions, out_report, format = "table";
    double train_fraction = 0.8;
    std::size_t k = 3;
    std::size_t jobs = 1;
    std::uint64_t seed = 0;
    bool stage2_split = false;
    bool no_stage2_headers = false;
};

struct RunOptions {
    CLI::Option* approach = nullptr;
    CLI::Option* backend = nullptr;
    CLI::Option* stage2_backend = nullptr;
    CLI::Option* sections = nullptr;
    CLI::Option* k = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* train = nullptr;
    CLI::Option* eval = nullptr;
    CLI::Option* data = nullptr;
    CLI::Option* train_fraction = nullptr;
    CLI::Option* label = nullptr;
    CLI::Option* out_predictions = nullptr;
    CLI::Option* out_report = nullptr;
    CLI::Option* stage2_split = nullptr;
    CLI::Option* no_stage2_headers = nullptr;
    CLI::Option* jobs = nullptr;
};

void cmd_run(RunArgs a, const RunOptions& o, const ModelFlags& mf, std::ostream& out, std::ostream& err) {
    ApproachConfig cfg;
    bool seed_given = o.seed->count() > 0;
    if (!a.config.empty()) {
        const std::string text = read_file(a.config);
        cfg = config_from_json(text);
        const json j = json::parse(text);
        seed_given = seed_given || j.contains("seed");
        auto take = [&](const char* key, CLI::Option* opt, std::string& field) {
            if (opt->count() == 0 && j.contains(key)) {
                field = j.at(key).get<std::string>();
            }
        };
        take("train", o.train, a.train);
        take("eval", o.eval, a.eval);
        take("data", o.data, a.data);
        take("label", o.label, a.label);
        take("out_predictions", o.out_predictions, a.out_predictions);
        take("out_report", o.out_report, a.out_report);
        if (o.train_fraction->count() == 0 && j.contains("train_fraction")) {
            a.train_fraction = j.at("train_fraction").get<double>();
        }
    }
    if (!seed_given) {
        throw Error(ErrorKind::InvalidArgument, "--seed is required for run", "--seed");
    }
    if (o.seed->count()) {
        cfg.seed = a.seed;
    }
    if (o.approach->count()) {
        cfg.approach = approach_from_string(a.approach);
    }
    if (o.backend->count()) {
        cfg.backend.kind = backend_from_string(a.backend);
    }
    if (o.k->count()) {
        cfg.backend.extractive_k = a.k;
    }
    mf.apply(cfg.backend.tiny);
    if (o.stage2_backend->count()) {
        BackendConfig s2 = cfg.stage2.value_or(cfg.backend);
        s2.kind = backend_from_string(a.stage2_backend);
        cfg.stage2 = s2;
    }
    if (cfg.approach == Approach::MultiLayer && !cfg.stage2) {
        cfg.stage2 = cfg.backend;
    }
    if (cfg.stage2) {
        mf.apply(cfg.stage2->tiny);
        if (o.k->count()) {
            cfg.stage2->extractive_k = a.k;
        }
    }
    if (o.sections->count()) {
        cfg.sections = parse_sections(a.sections);
    }
    if (o.stage2_split->count()) {
        cfg.stage2_split = a.stage2_split;
    }
    if (o.no_stage2_headers->count()) {
        cfg.stage2_headers = !a.no_stage2_headers;
    }
    if (o.jobs->count()) {
        cfg.jobs = a.jobs;
    }
    cfg.validate();

    Corpus train, eval;
    if (!a.data.empty()) {
        if (!a.train.empty() || !a.eval.empty()) {
            throw Error(ErrorKind::InvalidArgument, "--data cannot be combined with --train/--eval", "--data");
        }
        std::tie(train, eval) = split_corpus(load_any_corpus(a.data, a.columns), a.train_fraction, cfg.seed);
    } else {
        if (a.train.empty() || a.eval.empty()) {
            throw Error(ErrorKind::InvalidArgument, "run needs --train and --eval, or --data", "--train");
        }
        train = load_any_corpus(a.train, a.columns);
        eval = load_any_corpus(a.eval, a.columns);
    }

    cfg.progress = locked_sink(err);
    RunLog log;
    const PredictionSet preds = run_approach(train, eval, cfg, &log);
    for (const auto& line : log.lines) {
        err << line << '\n';
    }
    RunReport r = evaluate(preds, eval, {}, cfg.jobs);
    r.label = a.label.empty() ? to_string(cfg.approach) : a.label;
    r.stage2_empty_inputs = log.stage2_empty_inputs;

    if (!a.out_predictions.empty()) {
        save_predictions(preds, a.out_predictions);
    }
    if (!a.out_report.empty()) {
        write_file(a.out_report, run_report_to_json(r));
    }
    emit(report({r}, report_format_from_string(a.format)), a.out, out);
}

struct ReportArgs {
    std::vector<std::string> runs;
    std::string format = "table", out;
};

void cmd_report(const ReportArgs& a, std::ostream& out) {
    std::vector<RunReport> runs;
    for (const auto& path : a.runs) {
        runs.push_back(run_report_from_json(read_file(path)));
    }
    emit(report(runs, report_format_from_string(a.format)), a.out, out);
}

struct GradCheckArgs {
    std::uint64_t seed = 0;
    std::size_t params = 200;
    double epsilon = 1e-5;
    double tolerance = 1e-4;
    std::size_t d_model = 8, heads = 1, layers = 1, d_ff = 16, vocab = 12, src_len = 10, tgt_len = 6;
    std::size_t block = 4, stride = 2, global = 1;
};

int cmd_grad_check(const GradCheckArgs& a, std::ostream& out) {
    tinylsg::ModelShape shape;
    shape.vocab_size = a.vocab;
    shape.d_model = a.d_model;
    shape.n_heads = a.heads;
    shape.n_encoder_layers = a.layers;
    shape.n_decoder_layers = a.layers;
    shape.d_ff = a.d_ff;
    tinylsg::LsgConfig lsg;
    lsg.block_size = a.block;
    lsg.sparsity_stride = a.stride;
    lsg.num_global = a.global;
    lsg.max_input_tokens = std::max(a.src_len, a.block);
    lsg.validate();
    if (a.vocab <= tinylsg::Vocab::kNumReserved) {
        throw Error(ErrorKind::InvalidArgument, "--vocab must exceed the reserved token count", "--vocab");
    }
    const auto model = tinylsg::init_model(shape, a.seed);
    Rng rng(a.seed ^ 0x9e3779b97f4a7c15ULL);
    auto draw = [&](std::size_t n) {
        std::vector<tinylsg::TokenId> ids;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back(static_cast<tinylsg::TokenId>(tinylsg::Vocab::kNumReserved +
                                                        uniform_index(rng, a.vocab - tinylsg::Vocab::kNumReserved)));
        }
        return ids;
    };
    tinylsg::Example ex{draw(a.src_len), draw(a.tgt_len)};
    const auto result = tinylsg::grad_check(model, ex, lsg, a.epsilon, a.params, a.seed);
    const bool ok = result.max_relative_error < a.tolerance;
    out << "checked " << result.checks.size() << " of " << tinylsg::parameter_count(model)
        << " parameters, max relative error " << result.max_relative_error << " (tolerance " << a.tolerance << "): "
        << (ok ? "ok" : "FAILED") << "\n";
    return ok ? kExitOk : kExitRuntime;
}

struct MaskArgs {
    std::size_t seq_len = 0;
    tinylsg::LsgConfig lsg;
};

void cmd_mask_dump(const MaskArgs& a, std::ostream& out) {
    tinylsg::LsgConfig cfg = a.lsg;
    cfg.max_input_tokens = std::max({cfg.max_input_tokens, a.seq_len, cfg.block_size});
    cfg.validate();
    const auto mask = tinylsg::lsg_mask(a.seq_len, cfg);
    out << mask.render() << "allowed " << mask.allowed_count() << " of " << a.seq_len * a.seq_len
        << " pairs, density " << round_half_up(mask.density(), 4) << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Chart-note summarization toolkit: section parsing, TinyLSG training, ROUGE scoring"};
    app.name("chartsum");
    app.require_subcommand(1);

    auto existing = CLI::ExistingFile;

    SplitArgs split;
    auto* c_split = app.add_subcommand("split-sections", "Segment reference notes into sections (JSON lines)");
    c_split->add_option("--input", split.input, "Corpus file (CSV or JSONL)")->required()->check(existing);
    c_split->add_option("--columns", split.columns, "Column remap, e.g. id=encounter_id,note=summary");
    c_split->add_option("--aliases", split.aliases, "Header alias table (TSV)")->check(existing);
    c_split->add_option("--out", split.out, "Output path (default: stdout)");

    TrainArgs train;
    ModelFlags train_flags;
    auto* c_train = app.add_subcommand("train", "Train a TinyLSG model and save a checkpoint");
    c_train->add_option("--train", train.train, "Training corpus")->required()->check(existing);
    c_train->add_option("--seed", train.seed, "Random seed")->required();
    c_train->add_option("--out", train.out, "Checkpoint path")->required();
    c_train->add_option("--section", train.section, "Train on one section's text (e.g. HPI) instead of the full note");
    c_train->add_option("--columns", train.columns, "Column remap, e.g. id=encounter_id,note=summary");
    add_model_flags(c_train, train_flags);

    PredictArgs predict;
    ModelFlags predict_flags;
    auto* c_predict = app.add_subcommand("predict", "Generate notes with a trained checkpoint");
    c_predict->add_option("--checkpoint", predict.checkpoint, "Checkpoint from `train`")->required()->check(existing);
    c_predict->add_option("--input", predict.input, "Corpus whose dialogues are summarized")->required()->check(existing);
    c_predict->add_option("--columns", predict.columns, "Column remap");
    c_predict->add_option("--out", predict.out, "Prediction file (default: stdout)");
    c_predict->add_option("--jobs", predict.jobs, "Parallel width")->capture_default_str()->check(CLI::PositiveNumber);
    c_predict->add_option("--max-output", predict_flags.flags.max_output_tokens, "Decoding length limit")
        ->capture_default_str();

    ScoreArgs score;
    auto* c_score = app.add_subcommand("score", "ROUGE-score candidate notes against references");
    c_score->add_option("--candidates", score.candidates, "CSV/JSONL with id + text, or a prediction file")
        ->required()
        ->check(existing);
    c_score->add_option("--references", score.references, "CSV/JSONL with id + reference note")
        ->required()
        ->check(existing);
    c_score->add_option("--candidate-column", score.candidate_column, "Candidate text column")->capture_default_str();
    c_score->add_option("--reference-column", score.reference_column, "Reference text column")->capture_default_str();
    c_score->add_option("--format", score.format, "Output format")->capture_default_str()->check(CLI::IsMember(kFormats));
    c_score->add_option("--label", score.label, "Row label in the report");
    c_score->add_option("--out-report", score.out_report, "Also write the full report as JSON");
    c_score->add_flag("--stem", score.stem, "Porter-stem tokens before matching");
    c_score->add_flag("--stopwords", score.stopwords, "Drop stopwords before matching");
    c_score->add_option("--jobs", score.jobs, "Parallel width")->capture_default_str()->check(CLI::PositiveNumber);

    RunArgs run;
    RunOptions ro;
    ModelFlags run_flags;
    auto* c_run = app.add_subcommand("run", "Train, predict and evaluate one approach end to end");
    c_run->add_option("--config", run.config, "Run config (JSON); flags given here override it")->check(existing);
    ro.approach = c_run->add_option("--approach", run.approach, "single | section-wise | multi-layer")
                      ->default_str("single")
                      ->check(CLI::IsMember(kApproaches));
    ro.backend = c_run->add_option("--backend", run.backend, "Summarizer backend")
                     ->default_str("extractive")
                     ->check(CLI::IsMember(kBackends));
    ro.stage2_backend = c_run->add_option("--stage2-backend", run.stage2_backend,
                                          "Stage-2 backend for multi-layer (default: same as --backend)")
                            ->check(CLI::IsMember(kBackends));
    ro.sections = c_run->add_option("--sections", run.sections,
                                    "Comma-separated sections (default: all seen in training notes)");
    ro.k = c_run->add_option("--k", run.k, "Sentences kept by the extractive backend")->capture_default_str();
    ro.seed = c_run->add_option("--seed", run.seed, "Random seed (required here or in --config)");
    ro.train = c_run->add_option("--train", run.train, "Training corpus")->check(existing);
    ro.eval = c_run->add_option("--eval", run.eval, "Evaluation corpus")->check(existing);
    ro.data = c_run->add_option("--data", run.data, "Single corpus to split into train/eval")->check(existing);
    ro.train_fraction = c_run->add_option("--train-fraction", run.train_fraction, "Train share when using --data")
                            ->capture_default_str()
                            ->check(CLI::Range(0.0, 1.0));
    c_run->add_option("--columns", run.columns, "Column remap");
    ro.label = c_run->add_option("--label", run.label, "Row label in the report (default: approach name)");
    c_run->add_option("--out", run.out, "Report path (default: stdout)");
    ro.out_predictions = c_run->add_option("--out-predictions", run.out_predictions, "Prediction file");
    ro.out_report = c_run->add_option("--out-report", run.out_report, "Run report JSON, input to `report`");
    c_run->add_option("--format", run.format, "Output format")->capture_default_str()->check(CLI::IsMember(kFormats));
    ro.stage2_split = c_run->add_flag("--stage2-split", run.stage2_split,
                                      "Train stage 2 on a held-out half of the training set");
    ro.no_stage2_headers = c_run->add_flag("--no-stage2-headers", run.no_stage2_headers,
                                           "Strip section headers from stage-2 input");
    ro.jobs = c_run->add_option("--jobs", run.jobs, "Parallel width")->capture_default_str()->check(CLI::PositiveNumber);
    add_model_flags(c_run, run_flags);

    ReportArgs rep;
    auto* c_report = app.add_subcommand("report", "Combine run reports into comparison tables");
    c_report->add_option("--runs", rep.runs, "Run report JSON files, one row each")->required()->check(existing);
    c_report->add_option("--format", rep.format, "Output format")->capture_default_str()->check(CLI::IsMember(kFormats));
    c_report->add_option("--out", rep.out, "Output path (default: stdout)");

    GradCheckArgs gc;
    auto* c_grad = app.add_subcommand("grad-check", "Compare analytic and finite-difference gradients");
    c_grad->add_option("--seed", gc.seed, "Seed for weights, data and sampling")->capture_default_str();
    c_grad->add_option("--params", gc.params, "Parameters to sample")->capture_default_str();
    c_grad->add_option("--epsilon", gc.epsilon, "Finite-difference step")->capture_default_str();
    c_grad->add_option("--tolerance", gc.tolerance, "Maximum accepted relative error")->capture_default_str();
    c_grad->add_option("--d-model", gc.d_model, "Model width")->capture_default_str();
    c_grad->add_option("--heads", gc.heads, "Attention heads")->capture_default_str();
    c_grad->add_option("--layers", gc.layers, "Encoder and decoder layers")->capture_default_str();
    c_grad->add_option("--d-ff", gc.d_ff, "Feed-forward width")->capture_default_str();
    c_grad->add_option("--vocab", gc.vocab, "Vocabulary size")->capture_default_str();
    c_grad->add_option("--src-len", gc.src_len, "Source length")->capture_default_str();
    c_grad->add_option("--tgt-len", gc.tgt_len, "Target length")->capture_default_str();
    c_grad->add_option("--block", gc.block, "LSG block size")->capture_default_str();
    c_grad->add_option("--stride", gc.stride, "LSG sparse stride")->capture_default_str();
    c_grad->add_option("--global", gc.global, "Global tokens")->capture_default_str();

    MaskArgs mask;
    auto* c_mask = app.add_subcommand("mask-dump", "Print an LSG attention mask ('#' allowed, '.' blocked)");
    c_mask->add_option("--seq-len", mask.seq_len, "Sequence length including global tokens")
        ->required()
        ->check(CLI::PositiveNumber);
    c_mask->add_option("--block", mask.lsg.block_size, "Block size")->capture_default_str()->check(CLI::PositiveNumber);
    c_mask->add_option("--stride", mask.lsg.sparsity_stride, "Sparse stride (0 disables)")->capture_default_str();
    c_mask->add_option("--global", mask.lsg.num_global, "Global tokens")->capture_default_str();
    c_mask->add_option("--radius", mask.lsg.local_radius, "Neighbouring blocks on each side")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (c_split->parsed()) {
            cmd_split(split, out, err);
        } else if (c_train->parsed()) {
            cmd_train(train, train_flags, out, err);
        } else if (c_predict->parsed()) {
            cmd_predict(predict, predict_flags, out);
        } else if (c_score->parsed()) {
            cmd_score(score, out);
        } else if (c_run->parsed()) {
            cmd_run(run, ro, run_flags, out, err);
        } else if (c_report->parsed()) {
            cmd_report(rep, out);
        } else if (c_grad->parsed()) {
            return cmd_grad_check(gc, out);
        } else if (c_mask->parsed()) {
            cmd_mask_dump(mask, out);
        }
    } catch (const Error& e) {
        err << "chartsum: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const json::exception& e) {
        err << "chartsum: malformed JSON: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "chartsum: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace chartsum::cli
