#pragma once

#include "chartsum/corpus.hpp"
#include "chartsum/rouge.hpp"
#include "chartsum/section_parser.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace chartsum {

inline constexpr const char* kDivisionMetric = "rouge1-f1";

struct RunReport {
    /// Row label; defaults to the approach name.
    std::string label;
    Approach approach = Approach::Single;
    rouge::AggregateScores full_note;
    /// Mean ROUGE-1 F1 per Division, in kDivisions order.
    std::array<double, 4> divisions{};
    /// Number of (prediction, reference) pairs behind each division score.
    std::array<std::size_t, 4> division_pairs{};
    double division_average = 0.0;
    std::string division_metric = kDivisionMetric;

    std::string config_hash;
    std::uint64_t seed = 0;

    std::size_t documents = 0;
    std::size_t skipped_unlabeled = 0;
    std::size_t missing_predictions = 0;
    std::size_t unknown_sections = 0;
    std::size_t stage2_empty_inputs = 0;
    std::size_t empty_divisions = 0;
};

/// Scores `p` against the labeled encounters of `eval`. Unlabeled rows are
/// skipped; a labeled row without a prediction is scored as an empty one.
/// Division scores: a pair where only one side has the division scores 0,
/// a pair where neither side has it is left out, and a division with no
/// pairs at all scores 0.
RunReport evaluate(const PredictionSet& p, const Corpus& eval, const rouge::TokenizeOptions& opts = {},
                   std::size_t jobs = 1);

enum class ReportFormat { Table, Csv, Json };
ReportFormat report_format_from_string(const std::string& name);

/// Two tables: full-note R1/R2/RL and the per-division breakdown, one row
/// per run in input order, every value rounded half-up to 4 places.
std::string report(const std::vector<RunReport>& runs, ReportFormat format);

/// Full RunReport as JSON (per-document scores included) and back.
std::string run_report_to_json(const RunReport& r);
RunReport run_report_from_json(const std::string& text);

}  // namespace chartsum
