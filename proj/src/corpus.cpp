#include "chartsum/corpus.hpp"

#include "chartsum/error.hpp"
#include "chartsum/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace chartsum {

namespace {

using json = nlohmann::json;

struct CsvRecord {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line where the record starts
};

// RFC-4180 reader. Quoted fields keep embedded CR/LF verbatim; unquoted
// records end at LF or CRLF. Blank lines between records are skipped.
std::vector<CsvRecord> parse_csv_records(const std::string& text, const std::string& origin) {
    std::vector<CsvRecord> records;
    CsvRecord current;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool record_has_content = false;
    std::size_t line = 1;
    current.line = 1;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        bool blank = current.fields.size() == 1 && current.fields[0].empty() && !record_has_content;
        if (!blank) {
            records.push_back(std::move(current));
        }
        current = CsvRecord{};
        record_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted) {
                    throw Error(ErrorKind::MalformedFile,
                                origin + ": stray quote at line " + std::to_string(line));
                }
                in_quotes = true;
                field_was_quoted = true;
                record_has_content = true;
                break;
            case ',':
                end_field();
                record_has_content = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') {
                    break;  // CRLF: handled by the LF
                }
                field += c;
                break;
            case '\n':
                end_record();
                ++line;
                current.line = line;
                break;
            default:
                if (field_was_quoted) {
                    throw Error(ErrorKind::MalformedFile,
                                origin + ": text after closing quote at line " + std::to_string(line));
                }
                field += c;
                record_has_content = true;
        }
    }
    if (in_quotes) {
        throw Error(ErrorKind::MalformedFile,
                    origin + ": unterminated quoted field starting in record at line " + std::to_string(current.line));
    }
    if (!field.empty() || record_has_content || !current.fields.empty()) {
        end_record();
    }
    return records;
}

std::string csv_quote(const std::string& s) {
    bool needs = s.find_first_of(",\"\r\n") != std::string::npos || s.empty();
    if (!needs) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string row_label(std::size_t row) { return "row " + std::to_string(row); }

std::optional<std::size_t> column_index(const std::vector<std::string>& header, const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
}

Encounter make_encounter(std::string id, std::string dialogue, std::optional<std::string> note, std::size_t row,
                         const std::string& origin) {
    if (id.empty()) {
        throw Error(ErrorKind::MalformedFile, origin + ": empty id in " + row_label(row), row_label(row));
    }
    if (dialogue.empty()) {
        throw Error(ErrorKind::EmptyDialogue, origin + ": empty dialogue in " + row_label(row) + " (id " + id + ")",
                    row_label(row));
    }
    if (note && note->empty()) {
        note.reset();
    }
    return Encounter{std::move(id), std::move(dialogue), std::move(note)};
}

void check_duplicates(const Corpus& c) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < c.encounters.size(); ++i) {
        const auto& id = c.encounters[i].id;
        if (!seen.insert(id).second) {
            throw Error(ErrorKind::DuplicateId,
                        "duplicate id \"" + id + "\" at " + row_label(i + 1) + " of " + c.source_path, id);
        }
    }
}

Corpus parse_corpus_jsonl(const std::string& text, const ColumnMap& columns, const std::string& origin) {
    Corpus c;
    std::istringstream in(text);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        ++row;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::MalformedFile, origin + ": " + row_label(row) + ": " + e.what(), row_label(row));
        }
        if (!obj.is_object()) {
            throw Error(ErrorKind::MalformedFile, origin + ": " + row_label(row) + " is not an object", row_label(row));
        }
        for (const auto* key : {&columns.id, &columns.dialogue}) {
            if (!obj.contains(*key) || !obj[*key].is_string()) {
                throw Error(ErrorKind::MissingColumn, origin + ": " + row_label(row) + " lacks string field \"" + *key + "\"",
                            *key);
            }
        }
        std::optional<std::string> note;
        if (obj.contains(columns.note) && obj[columns.note].is_string()) {
            note = obj[columns.note].get<std::string>();
        }
        c.encounters.push_back(make_encounter(obj[columns.id].get<std::string>(),
                                              obj[columns.dialogue].get<std::string>(), std::move(note), row, origin));
    }
    c.source_path = origin;
    c.format = CorpusFormat::Jsonl;
    check_duplicates(c);
    return c;
}

}  // namespace

std::size_t Corpus::unlabeled_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(encounters.begin(), encounters.end(), [](const Encounter& e) { return !e.labeled(); }));
}

const Encounter* Corpus::find(const std::string& id) const noexcept {
    for (const auto& e : encounters) {
        if (e.id == id) {
            return &e;
        }
    }
    return nullptr;
}

ColumnMap ColumnMap::parse(const std::string& text) {
    ColumnMap map;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
            throw Error(ErrorKind::InvalidArgument, "column remap entry \"" + item + "\" is not key=column", item);
        }
        std::string key = item.substr(0, eq);
        std::string value = item.substr(eq + 1);
        if (key == "id") {
            map.id = value;
        } else if (key == "dialogue") {
            map.dialogue = value;
        } else if (key == "note") {
            map.note = value;
        } else {
            throw Error(ErrorKind::InvalidArgument, "unknown column key \"" + key + "\"", key);
        }
    }
    return map;
}

void validate_corpus(const Corpus& c) {
    for (std::size_t i = 0; i < c.encounters.size(); ++i) {
        const auto& e = c.encounters[i];
        if (e.dialogue.empty()) {
            throw Error(ErrorKind::EmptyDialogue, "empty dialogue at " + row_label(i + 1), row_label(i + 1));
        }
    }
    check_duplicates(c);
}

Corpus parse_corpus_csv(const std::string& text, const ColumnMap& columns, const std::string& origin) {
    auto records = parse_csv_records(text, origin);
    if (records.empty()) {
        throw Error(ErrorKind::MissingColumn, origin + ": no header row", columns.id);
    }
    const auto& header = records.front().fields;
    auto id_col = column_index(header, columns.id);
    auto dialogue_col = column_index(header, columns.dialogue);
    auto note_col = column_index(header, columns.note);
    if (!id_col) {
        throw Error(ErrorKind::MissingColumn, origin + ": header lacks column \"" + columns.id + "\"", columns.id);
    }
    if (!dialogue_col) {
        throw Error(ErrorKind::MissingColumn, origin + ": header lacks column \"" + columns.dialogue + "\"",
                    columns.dialogue);
    }

    Corpus c;
    c.source_path = origin;
    c.format = CorpusFormat::Csv;
    for (std::size_t r = 1; r < records.size(); ++r) {
        auto& fields = records[r].fields;
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::MalformedFile,
                        origin + ": " + row_label(r) + " (line " + std::to_string(records[r].line) + ") has " +
                            std::to_string(fields.size()) + " fields, header has " + std::to_string(header.size()),
                        row_label(r));
        }
        std::optional<std::string> note;
        if (note_col) {
            note = std::move(fields[*note_col]);
        }
        c.encounters.push_back(
            make_encounter(std::move(fields[*id_col]), std::move(fields[*dialogue_col]), std::move(note), r, origin));
    }
    check_duplicates(c);
    return c;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string(), path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw Error(ErrorKind::Io, "read failed for " + path.string(), path.string());
    }
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing", path.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw Error(ErrorKind::Io, "write failed for " + path.string(), path.string());
    }
}

CorpusFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return (ext == ".jsonl" || ext == ".json") ? CorpusFormat::Jsonl : CorpusFormat::Csv;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, const ColumnMap& columns) {
    auto text = read_file(path);
    return format == CorpusFormat::Csv ? parse_corpus_csv(text, columns, path.string())
                                       : parse_corpus_jsonl(text, columns, path.string());
}

std::string to_csv(const Corpus& c) {
    std::string out = "id,dialogue,note\n";
    for (const auto& e : c.encounters) {
        out += csv_quote(e.id);
        out += ',';
        out += csv_quote(e.dialogue);
        out += ',';
        out += e.note ? csv_quote(*e.note) : std::string();
        out += '\n';
    }
    return out;
}

void save_corpus_csv(const Corpus& c, const std::filesystem::path& path) { write_file(path, to_csv(c)); }

std::pair<Corpus, Corpus> split_corpus(const Corpus& c, double train_fraction, std::uint64_t seed) {
    if (c.encounters.size() < 2) {
        throw Error(ErrorKind::CorpusTooSmall, "need at least 2 encounters to split, got " + std::to_string(c.size()));
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "train fraction must lie in (0,1)");
    }
    const std::size_t n = c.encounters.size();
    // The epsilon keeps exact ratios such as 67/87 * 87 from flooring to 66.
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
    n_train = std::min(n_train, n);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    Rng rng(seed);
    seeded_shuffle(order, rng);
    std::vector<bool> in_train(n, false);
    for (std::size_t i = 0; i < n_train; ++i) {
        in_train[order[i]] = true;
    }

    Corpus train;
    Corpus val;
    train.source_path = val.source_path = c.source_path;
    train.format = val.format = c.format;
    for (std::size_t i = 0; i < n; ++i) {
        (in_train[i] ? train : val).encounters.push_back(c.encounters[i]);
    }
    return {std::move(train), std::move(val)};
}

std::vector<std::pair<std::string, std::string>> load_texts(const std::filesystem::path& path,
                                                            const std::string& text_column) {
    auto text = read_file(path);
    std::vector<std::pair<std::string, std::string>> rows;
    if (format_from_path(path) == CorpusFormat::Jsonl) {
        // A PredictionSet document is also accepted here.
        auto first = text.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && text.find("\"entries\"") != std::string::npos) {
            try {
                auto preds = parse_predictions(text);
                for (auto& [id, note] : preds.entries) {
                    rows.emplace_back(id, note);
                }
                return rows;
            } catch (const Error&) {
                // fall through to JSONL
            }
        }
        ColumnMap cols;
        cols.note = text_column;
        std::istringstream in(text);
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            ++row;
            json obj;
            try {
                obj = json::parse(line);
            } catch (const json::exception& e) {
                throw Error(ErrorKind::MalformedFile, path.string() + ": " + row_label(row) + ": " + e.what());
            }
            if (!obj.contains("id") || !obj.contains(text_column)) {
                throw Error(ErrorKind::MissingColumn, path.string() + ": " + row_label(row) + " lacks id/" + text_column,
                            text_column);
            }
            rows.emplace_back(obj["id"].get<std::string>(), obj[text_column].get<std::string>());
        }
        return rows;
    }

    auto records = parse_csv_records(text, path.string());
    if (records.empty()) {
        throw Error(ErrorKind::MissingColumn, path.string() + ": no header row", "id");
    }
    auto id_col = column_index(records[0].fields, "id");
    auto text_col = column_index(records[0].fields, text_column);
    if (!id_col || !text_col) {
        throw Error(ErrorKind::MissingColumn, path.string() + ": header needs columns id and " + text_column,
                    !id_col ? "id" : text_column);
    }
    std::set<std::string> seen;
    for (std::size_t r = 1; r < records.size(); ++r) {
        auto& f = records[r].fields;
        if (f.size() != records[0].fields.size()) {
            throw Error(ErrorKind::MalformedFile, path.string() + ": " + row_label(r) + " has wrong field count",
                        row_label(r));
        }
        if (!seen.insert(f[*id_col]).second) {
            throw Error(ErrorKind::DuplicateId, path.string() + ": duplicate id \"" + f[*id_col] + "\"", f[*id_col]);
        }
        rows.emplace_back(f[*id_col], f[*text_col]);
    }
    return rows;
}

// ---------------------------------------------------------------------------

std::string to_string(Approach a) {
    switch (a) {
        case Approach::Single: return "single";
        case Approach::SectionWise: return "section-wise";
        case Approach::MultiLayer: return "multi-layer";
        case Approach::Oracle: return "oracle";
        case Approach::Extractive: return "extractive";
    }
    return "single";
}

Approach approach_from_string(const std::string& name) {
    for (auto a : {Approach::Single, Approach::SectionWise, Approach::MultiLayer, Approach::Oracle,
                   Approach::Extractive}) {
        if (to_string(a) == name) {
            return a;
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown approach \"" + name + "\"", name);
}

std::string serialize_predictions(const PredictionSet& p) {
    json doc;
    doc["approach"] = to_string(p.approach);
    doc["seed"] = p.seed;
    doc["config_hash"] = p.config_hash;
    if (!p.timestamp.empty()) {
        doc["timestamp"] = p.timestamp;
    }
    doc["entries"] = json::object();
    for (const auto& [id, text] : p.entries) {
        doc["entries"][id] = text;
    }
    try {
        return doc.dump(2) + "\n";
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("prediction text is not valid UTF-8: ") + e.what());
    }
}

PredictionSet parse_predictions(const std::string& text) {
    PredictionSet p;
    try {
        auto doc = json::parse(text);
        if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_object() || !doc.contains("approach")) {
            throw Error(ErrorKind::MalformedFile, "prediction file lacks approach/entries");
        }
        p.approach = approach_from_string(doc.at("approach").get<std::string>());
        p.seed = doc.value("seed", std::uint64_t{0});
        p.config_hash = doc.value("config_hash", std::string());
        p.timestamp = doc.value("timestamp", std::string());
        for (const auto& [id, value] : doc["entries"].items()) {
            p.entries.emplace(id, value.get<std::string>());
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedFile, std::string("prediction file: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::MalformedFile) {
            throw;
        }
        throw Error(ErrorKind::MalformedFile, e.what());
    }
    return p;
}

void save_predictions(const PredictionSet& p, const std::filesystem::path& path) {
    write_file(path, serialize_predictions(p));
}

PredictionSet load_predictions(const std::filesystem::path& path) { return parse_predictions(read_file(path)); }

}  // namespace chartsum
