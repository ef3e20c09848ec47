#include "chartsum/summarizer.hpp"

#include "chartsum/error.hpp"
#include "chartsum/rouge.hpp"
#include "chartsum/tinylsg/checkpoint.hpp"
#include "chartsum/util.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace chartsum {

namespace {

std::string_view trim(std::string_view s) {
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && ws(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

std::string to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::TinyLsg: return "tinylsg";
        case BackendKind::Extractive: return "extractive";
        case BackendKind::Oracle: return "oracle";
        case BackendKind::Identity: return "identity";
    }
    return "extractive";
}

BackendKind backend_from_string(const std::string& name) {
    for (auto k : {BackendKind::TinyLsg, BackendKind::Extractive, BackendKind::Oracle, BackendKind::Identity}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown backend \"" + name + "\"", name);
}

std::unique_ptr<Summarizer> make_summarizer(const BackendConfig& backend, std::uint64_t seed,
                                            ReferenceLookup oracle_lookup, ProgressSink progress,
                                            std::string progress_tag) {
    switch (backend.kind) {
        case BackendKind::Extractive: return std::make_unique<ExtractiveSummarizer>(backend.extractive_k);
        case BackendKind::Oracle:
            if (!oracle_lookup) {
                throw Error(ErrorKind::InvalidArgument, "oracle backend needs a reference lookup");
            }
            return std::make_unique<OracleSummarizer>(std::move(oracle_lookup));
        case BackendKind::Identity: return std::make_unique<IdentitySummarizer>();
        case BackendKind::TinyLsg: {
            TinyLsgSettings settings = backend.tiny;
            settings.train.seed = seed;
            return std::make_unique<TinyLsgSummarizer>(settings, std::move(progress), std::move(progress_tag));
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unhandled backend");
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    auto emit = [&](std::string_view piece) {
        piece = trim(piece);
        if (!piece.empty()) {
            out.emplace_back(piece);
        }
    };
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        auto nl = text.find('\n', line_start);
        auto line = text.substr(line_start, nl == std::string_view::npos ? std::string_view::npos : nl - line_start);
        std::size_t start = 0;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if ((c == '.' || c == '?' || c == '!') && i + 1 < line.size() && (line[i + 1] == ' ' || line[i + 1] == '\t')) {
                emit(line.substr(start, i + 1 - start));
                start = i + 1;
            }
        }
        emit(line.substr(start));
        if (nl == std::string_view::npos) {
            break;
        }
        line_start = nl + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Extractive
// ---------------------------------------------------------------------------

void ExtractiveSummarizer::fit(const std::vector<TrainingPair>& pairs) {
    profile_.clear();
    for (const auto& p : pairs) {
        for (auto& tok : rouge::tokenize(p.target)) {
            profile_.insert(std::move(tok));
        }
    }
    fitted_ = !pairs.empty();
}

std::vector<std::size_t> ExtractiveSummarizer::sentence_scores(std::string_view text) const {
    std::map<std::string, std::size_t> centroid;
    for (auto& tok : rouge::tokenize(text)) {
        ++centroid[tok];
    }
    std::vector<std::size_t> scores;
    for (const auto& sentence : split_sentences(text)) {
        auto toks = rouge::tokenize(sentence);
        std::set<std::string> distinct(toks.begin(), toks.end());
        std::size_t score = 0;
        for (const auto& t : distinct) {
            if (!fitted_ || profile_.count(t) > 0) {
                score += centroid[t];
            }
        }
        scores.push_back(score);
    }
    return scores;
}

std::string ExtractiveSummarizer::summarize(const SummaryInput& input) const {
    auto sentences = split_sentences(input.text);
    auto scores = sentence_scores(input.text);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (scores[i] > 0) {
            order.push_back(i);
        }
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    if (order.size() > k_) {
        order.resize(k_);
    }
    std::sort(order.begin(), order.end());
    std::string out;
    for (std::size_t i : order) {
        if (!out.empty()) {
            out += ' ';
        }
        out += sentences[i];
    }
    return out;
}

std::string ExtractiveSummarizer::fingerprint() const {
    std::string bytes = "extractive:" + std::to_string(k_) + (fitted_ ? ":fitted" : ":raw");
    for (const auto& t : profile_) {
        bytes += '\0';
        bytes += t;
    }
    return "extractive-" + hex64(fnv1a64(bytes));
}

std::string OracleSummarizer::summarize(const SummaryInput& input) const {
    auto text = lookup_(input.id);
    return text ? *text : std::string();
}

// ---------------------------------------------------------------------------
// TinyLsg
// ---------------------------------------------------------------------------

std::vector<std::string> encode_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        auto toks = rouge::tokenize(line);
        if (!toks.empty()) {
            if (!out.empty()) {
                out.emplace_back(kLineBreak);
            }
            for (auto& t : toks) {
                out.push_back(std::move(t));
            }
        }
        if (nl == std::string_view::npos) {
            break;
        }
        start = nl + 1;
    }
    return out;
}

std::string decode_lines(const std::vector<std::string>& tokens) {
    std::string out;
    bool line_start = true;
    for (const auto& t : tokens) {
        if (t == kLineBreak) {
            if (!out.empty() && !line_start) {
                out += '\n';
                line_start = true;
            }
            continue;
        }
        if (!line_start) {
            out += ' ';
        }
        out += t;
        line_start = false;
    }
    while (!out.empty() && out.back() == '\n') {
        out.pop_back();
    }
    return out;
}

TinyLsgSummarizer::TinyLsgSummarizer(TinyLsgSettings settings, ProgressSink progress, std::string tag)
    : settings_(std::move(settings)), progress_(std::move(progress)), tag_(std::move(tag)) {}

std::vector<tinylsg::TokenId> TinyLsgSummarizer::encode_source(std::string_view text) const {
    auto ids = vocab_.encode(encode_lines(text));
    if (ids.size() > settings_.lsg.max_input_tokens) {
        ids.resize(settings_.lsg.max_input_tokens);
    }
    if (ids.empty()) {
        ids.push_back(tinylsg::Vocab::kUnk);
    }
    return ids;
}

void TinyLsgSummarizer::fit(const std::vector<TrainingPair>& pairs) {
    if (pairs.empty()) {
        throw Error(ErrorKind::EmptyTrainingSet, "no training pairs" + (tag_.empty() ? "" : " for " + tag_), tag_);
    }
    std::vector<std::vector<std::string>> sources;
    std::vector<std::vector<std::string>> targets;
    for (const auto& p : pairs) {
        sources.push_back(encode_lines(p.input.text));
        targets.push_back(encode_lines(p.target));
        if (targets.back().size() > settings_.max_target_tokens) {
            targets.back().resize(settings_.max_target_tokens);
        }
    }
    auto all = sources;
    all.insert(all.end(), targets.begin(), targets.end());
    vocab_ = tinylsg::Vocab::build_from_tokens(all, settings_.min_freq);

    tinylsg::ModelShape shape = settings_.shape;
    shape.vocab_size = vocab_.size();
    model_ = tinylsg::init_model(shape, settings_.train.seed);
    fitted_ = true;

    std::vector<tinylsg::Example> data;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        data.push_back(tinylsg::Example{encode_source(pairs[i].input.text), vocab_.encode(targets[i])});
    }
    tinylsg::EpochCallback on_epoch;
    if (progress_) {
        on_epoch = [this](std::size_t epoch, double loss) {
            std::ostringstream line;
            line << (tag_.empty() ? "tinylsg" : tag_) << " epoch " << epoch << "/" << settings_.train.epochs
                 << " loss " << loss;
            progress_(line.str());
        };
    }
    auto result = tinylsg::train(model_, data, settings_.train, settings_.lsg, on_epoch);
    loss_history_ = std::move(result.loss_history);
}

std::string TinyLsgSummarizer::summarize(const SummaryInput& input) const {
    if (!fitted_) {
        throw Error(ErrorKind::InvalidArgument, "tinylsg summarizer used before fit");
    }
    auto ids = tinylsg::generate(model_, encode_source(input.text), settings_.max_output_tokens, settings_.lsg);
    return decode_lines(vocab_.decode(ids));
}

void TinyLsgSummarizer::restore(tinylsg::Checkpoint ckpt) {
    settings_.shape = ckpt.model.shape;
    settings_.lsg = ckpt.lsg;
    model_ = std::move(ckpt.model);
    vocab_ = std::move(ckpt.vocab);
    loss_history_.clear();
    fitted_ = true;
}

tinylsg::Checkpoint TinyLsgSummarizer::checkpoint() const {
    if (!fitted_) {
        throw Error(ErrorKind::InvalidArgument, "tinylsg summarizer has no trained model");
    }
    return tinylsg::Checkpoint{model_, vocab_, settings_.lsg};
}

std::string TinyLsgSummarizer::fingerprint() const {
    if (!fitted_) {
        return "tinylsg-unfitted";
    }
    return "tinylsg-" + hex64(fnv1a64(tinylsg::serialize_checkpoint(checkpoint())));
}

}  // namespace chartsum
