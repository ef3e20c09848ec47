#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace chartsum {

/// One conversation/note pair. `note` is empty for unlabeled rows.
struct Encounter {
    std::string id;
    std::string dialogue;
    std::optional<std::string> note;

    bool labeled() const noexcept { return note.has_value(); }
    friend bool operator==(const Encounter&, const Encounter&) = default;
};

enum class CorpusFormat { Csv, Jsonl };

struct Corpus {
    std::vector<Encounter> encounters;
    std::string source_path;
    CorpusFormat format = CorpusFormat::Csv;

    std::size_t size() const noexcept { return encounters.size(); }
    std::size_t unlabeled_count() const noexcept;
    const Encounter* find(const std::string& id) const noexcept;
};

/// Maps the canonical field names (id, dialogue, note) onto the header names
/// found in the file. Missing entries mean "same name".
struct ColumnMap {
    std::string id = "id";
    std::string dialogue = "dialogue";
    std::string note = "note";

    /// Parses "id=encounter_id,note=summary"; unknown keys are rejected.
    static ColumnMap parse(const std::string& text);
};

/// Throws DuplicateId / EmptyDialogue if `c` violates the corpus invariants.
void validate_corpus(const Corpus& c);

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, const ColumnMap& columns = {});
CorpusFormat format_from_path(const std::filesystem::path& path);

/// Writes `id,dialogue,note` CSV with RFC-4180 quoting.
void save_corpus_csv(const Corpus& c, const std::filesystem::path& path);
std::string to_csv(const Corpus& c);

/// Parses `text` as a corpus CSV. `origin` only feeds error messages.
Corpus parse_corpus_csv(const std::string& text, const ColumnMap& columns = {}, const std::string& origin = "<memory>");

/// Seeded shuffle split. Train size is floor(train_fraction * n); both
/// halves keep file order.
std::pair<Corpus, Corpus> split_corpus(const Corpus& c, double train_fraction, std::uint64_t seed);

/// Reads (id, text) rows from a CSV/JSONL file that only needs `id` and the
/// named text column; used to score arbitrary candidate/reference files.
std::vector<std::pair<std::string, std::string>> load_texts(const std::filesystem::path& path,
                                                            const std::string& text_column = "note");

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

enum class Approach { Single, SectionWise, MultiLayer, Oracle, Extractive };

std::string to_string(Approach a);
Approach approach_from_string(const std::string& name);

struct PredictionSet {
    Approach approach = Approach::Single;
    std::map<std::string, std::string> entries;
    std::string config_hash;
    std::uint64_t seed = 0;
    /// Left empty unless the caller supplies one; byte-identical reruns
    /// depend on it.
    std::string timestamp;

    friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

std::string serialize_predictions(const PredictionSet& p);
PredictionSet parse_predictions(const std::string& text);
void save_predictions(const PredictionSet& p, const std::filesystem::path& path);
PredictionSet load_predictions(const std::filesystem::path& path);

// Shared file helpers.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace chartsum
