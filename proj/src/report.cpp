#include "chartsum/report.hpp"

#include "chartsum/error.hpp"
#include "chartsum/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <optional>

namespace chartsum {

namespace {

using json = nlohmann::json;

constexpr int kDecimals = 4;

struct DivisionPair {
    std::optional<std::string> candidate;
    std::optional<std::string> reference;
};

double division_pair_score(const DivisionPair& p, const rouge::TokenizeOptions& opts) {
    if (!p.candidate || !p.reference) {
        return 0.0;
    }
    return rouge::rouge_n(rouge::tokenize(*p.candidate, opts), rouge::tokenize(*p.reference, opts), 1).f1;
}

std::string cell(double v) { return round_half_up(v, kDecimals); }

using Table = std::vector<std::vector<std::string>>;

Table full_note_table(const std::vector<RunReport>& runs) {
    Table t{{"Approach", "Rouge1", "Rouge2", "RougeL"}};
    for (const auto& r : runs) {
        t.push_back({r.label, cell(r.full_note.rouge1.f1), cell(r.full_note.rouge2.f1), cell(r.full_note.rougeL.f1)});
    }
    return t;
}

Table division_table(const std::vector<RunReport>& runs) {
    Table t{{"Approach", "Subjective", "Exam", "Results", "AssessmentAndPlan", "Average"}};
    for (const auto& r : runs) {
        t.push_back({r.label, cell(r.divisions[0]), cell(r.divisions[1]), cell(r.divisions[2]), cell(r.divisions[3]),
                     cell(r.division_average)});
    }
    return t;
}

std::string render_plain(const std::string& title, const Table& t) {
    std::vector<std::size_t> width(t.front().size(), 0);
    for (const auto& row : t) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    std::string out = title + "\n";
    for (const auto& row : t) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == 0) {
                line += row[c] + std::string(width[c] - row[c].size(), ' ');
            } else {
                line += "  " + std::string(width[c] - row[c].size(), ' ') + row[c];
            }
        }
        out += line + "\n";
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string render_csv(const Table& t, const std::vector<std::string>& keys) {
    std::string out;
    for (std::size_t r = 0; r < t.size(); ++r) {
        const auto& row = r == 0 ? keys : t[r];
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += (c ? "," : "") + csv_field(row[c]);
        }
        out += "\n";
    }
    return out;
}

json render_json_rows(const Table& t, const std::vector<std::string>& keys) {
    json rows = json::array();
    for (std::size_t r = 1; r < t.size(); ++r) {
        json row;
        row[keys[0]] = t[r][0];
        for (std::size_t c = 1; c < keys.size(); ++c) {
            row[keys[c]] = std::stod(t[r][c]);
        }
        rows.push_back(row);
    }
    return rows;
}

const std::vector<std::string> kFullKeys = {"approach", "rouge1", "rouge2", "rougeL"};
const std::vector<std::string> kDivisionKeys = {"approach", "subjective", "exam", "results", "assessment_and_plan",
                                                "average"};

json score_json(const rouge::RougeScore& s) {
    return json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

rouge::RougeScore score_from_json(const json& j) {
    return rouge::RougeScore{j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

}  // namespace

RunReport evaluate(const PredictionSet& p, const Corpus& eval, const rouge::TokenizeOptions& opts, std::size_t jobs) {
    for (const auto& [id, text] : p.entries) {
        if (!eval.find(id)) {
            throw Error(ErrorKind::MissingReference, "prediction " + id + " has no encounter in the eval corpus", id);
        }
    }

    RunReport r;
    r.label = to_string(p.approach);
    r.approach = p.approach;
    r.config_hash = p.config_hash;
    r.seed = p.seed;

    std::vector<rouge::ScoringPair> pairs;
    for (const auto& e : eval.encounters) {
        if (!e.note) {
            ++r.skipped_unlabeled;
            continue;
        }
        auto it = p.entries.find(e.id);
        if (it == p.entries.end()) {
            ++r.missing_predictions;
        }
        pairs.push_back(rouge::ScoringPair{e.id, it == p.entries.end() ? std::string() : it->second, *e.note});
    }
    if (pairs.empty()) {
        throw Error(ErrorKind::EmptyEvaluation, "eval corpus has no labeled encounters");
    }
    r.documents = pairs.size();
    r.full_note = rouge::corpus_rouge(pairs, opts, jobs);

    // Segment both sides and collect division text per document.
    std::vector<std::array<DivisionPair, 4>> per_doc(pairs.size());
    std::vector<std::size_t> unknown(pairs.size(), 0);
    parallel_for(pairs.size(), jobs, [&](std::size_t i) {
        const ChartNote cand = segment_note(pairs[i].candidate);
        const ChartNote ref = segment_note(pairs[i].reference);
        for (const auto* note : {&cand, &ref}) {
            for (const auto& s : note->sections) {
                unknown[i] += s.id.is_unknown() ? 1 : 0;
            }
        }
        for (std::size_t d = 0; d < kDivisions.size(); ++d) {
            per_doc[i][d] = DivisionPair{division_text(cand, kDivisions[d]), division_text(ref, kDivisions[d])};
        }
    });
    for (auto u : unknown) {
        r.unknown_sections += u;
    }

    for (std::size_t d = 0; d < kDivisions.size(); ++d) {
        std::vector<double> scores;
        for (const auto& doc : per_doc) {
            const auto& pair = doc[d];
            if (!pair.candidate && !pair.reference) {
                continue;
            }
            scores.push_back(division_pair_score(pair, opts));
        }
        r.division_pairs[d] = scores.size();
        if (scores.empty()) {
            ++r.empty_divisions;
            r.divisions[d] = 0.0;
        } else {
            r.divisions[d] = rouge::stable_mean(std::move(scores));
        }
    }
    r.division_average = (r.divisions[0] + r.divisions[1] + r.divisions[2] + r.divisions[3]) / 4.0;
    return r;
}

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "table") {
        return ReportFormat::Table;
    }
    if (name == "csv") {
        return ReportFormat::Csv;
    }
    if (name == "json") {
        return ReportFormat::Json;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown report format \"" + name + "\"", name);
}

std::string report(const std::vector<RunReport>& runs, ReportFormat format) {
    if (runs.empty()) {
        throw Error(ErrorKind::InvalidArgument, "report needs at least one run");
    }
    const Table full = full_note_table(runs);
    const Table divisions = division_table(runs);
    switch (format) {
        case ReportFormat::Table:
            return render_plain("Full note", full) + "\n" +
                   render_plain(std::string("Section-wise (") + runs.front().division_metric + ")", divisions);
        case ReportFormat::Csv: return render_csv(full, kFullKeys) + "\n" + render_csv(divisions, kDivisionKeys);
        case ReportFormat::Json: {
            json j;
            j["full_note"] = render_json_rows(full, kFullKeys);
            j["section_wise"] = render_json_rows(divisions, kDivisionKeys);
            j["division_metric"] = runs.front().division_metric;
            return j.dump(2) + "\n";
        }
    }
    return {};
}

std::string run_report_to_json(const RunReport& r) {
    json j;
    j["label"] = r.label;
    j["approach"] = to_string(r.approach);
    j["full_note"] = {{"rouge1", score_json(r.full_note.rouge1)},
                      {"rouge2", score_json(r.full_note.rouge2)},
                      {"rougeL", score_json(r.full_note.rougeL)}};
    json docs = json::array();
    for (const auto& d : r.full_note.per_document) {
        docs.push_back({{"id", d.id},
                        {"rouge1", score_json(d.rouge1)},
                        {"rouge2", score_json(d.rouge2)},
                        {"rougeL", score_json(d.rougeL)}});
    }
    j["per_document"] = docs;
    json divs = json::object();
    for (std::size_t d = 0; d < kDivisions.size(); ++d) {
        divs[std::string(to_string(kDivisions[d]))] = {{"score", r.divisions[d]}, {"pairs", r.division_pairs[d]}};
    }
    j["divisions"] = divs;
    j["division_average"] = r.division_average;
    j["division_metric"] = r.division_metric;
    j["config_hash"] = r.config_hash;
    j["seed"] = r.seed;
    j["counts"] = {{"documents", r.documents},
                   {"skipped_unlabeled", r.skipped_unlabeled},
                   {"missing_predictions", r.missing_predictions},
                   {"unknown_sections", r.unknown_sections},
                   {"stage2_empty_inputs", r.stage2_empty_inputs},
                   {"empty_divisions", r.empty_divisions}};
    return j.dump(2) + "\n";
}

RunReport run_report_from_json(const std::string& text) {
    RunReport r;
    try {
        const json j = json::parse(text);
        r.label = j.at("label").get<std::string>();
        r.approach = approach_from_string(j.at("approach").get<std::string>());
        const auto& f = j.at("full_note");
        r.full_note.rouge1 = score_from_json(f.at("rouge1"));
        r.full_note.rouge2 = score_from_json(f.at("rouge2"));
        r.full_note.rougeL = score_from_json(f.at("rougeL"));
        for (const auto& d : j.value("per_document", json::array())) {
            r.full_note.per_document.push_back(rouge::DocumentScores{d.at("id").get<std::string>(),
                                                                     score_from_json(d.at("rouge1")),
                                                                     score_from_json(d.at("rouge2")),
                                                                     score_from_json(d.at("rougeL"))});
        }
        const auto& divs = j.at("divisions");
        for (std::size_t d = 0; d < kDivisions.size(); ++d) {
            const auto& entry = divs.at(std::string(to_string(kDivisions[d])));
            r.divisions[d] = entry.at("score").get<double>();
            r.division_pairs[d] = entry.at("pairs").get<std::size_t>();
        }
        r.division_average = j.at("division_average").get<double>();
        r.division_metric = j.at("division_metric").get<std::string>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        const auto& c = j.at("counts");
        r.documents = c.at("documents").get<std::size_t>();
        r.skipped_unlabeled = c.at("skipped_unlabeled").get<std::size_t>();
        r.missing_predictions = c.at("missing_predictions").get<std::size_t>();
        r.unknown_sections = c.at("unknown_sections").get<std::size_t>();
        r.stage2_empty_inputs = c.at("stage2_empty_inputs").get<std::size_t>();
        r.empty_divisions = c.at("empty_divisions").get<std::size_t>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedFile, std::string("run report: ") + e.what());
    }
    return r;
}

}  // namespace chartsum
