#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartsum {

enum class SectionKind {
    CC,
    HPI,
    ROS,
    MEDICATIONS,
    ALLERGIES,
    PE,
    RESULTS,
    ASSESSMENT,
    PLAN,
    ASSESSMENT_AND_PLAN,
    UNKNOWN,
};

/// Canonical emission order; UNKNOWN is not part of it.
inline constexpr std::array<SectionKind, 10> kCanonicalOrder = {
    SectionKind::CC,      SectionKind::HPI,        SectionKind::ROS,  SectionKind::MEDICATIONS,
    SectionKind::ALLERGIES, SectionKind::PE,       SectionKind::RESULTS, SectionKind::ASSESSMENT,
    SectionKind::PLAN,    SectionKind::ASSESSMENT_AND_PLAN,
};

/// A canonical section, or UNKNOWN carrying the header exactly as written.
struct SectionId {
    SectionKind kind = SectionKind::UNKNOWN;
    std::string raw;  // only set for UNKNOWN

    SectionId() = default;
    SectionId(SectionKind k) : kind(k) {}  // NOLINT: implicit on purpose
    static SectionId unknown(std::string raw_header) {
        SectionId id(SectionKind::UNKNOWN);
        id.raw = std::move(raw_header);
        return id;
    }
    bool is_unknown() const noexcept { return kind == SectionKind::UNKNOWN; }

    friend bool operator==(const SectionId&, const SectionId&) = default;
    friend auto operator<=>(const SectionId&, const SectionId&) = default;
};

std::string_view to_string(SectionKind kind);
std::string to_string(const SectionId& id);
/// "CC", "HPI", ..., "ASSESSMENT_AND_PLAN". Throws InvalidArgument otherwise.
SectionKind section_kind_from_string(std::string_view name);
/// Header line emitted for a canonical section ("CHIEF COMPLAINT", ...).
std::string_view display_header(SectionKind kind);
/// Position in kCanonicalOrder; UNKNOWN sorts after everything.
std::size_t canonical_rank(SectionKind kind) noexcept;

enum class Division { Subjective, Exam, Results, AssessmentAndPlan };
inline constexpr std::array<Division, 4> kDivisions = {Division::Subjective, Division::Exam, Division::Results,
                                                       Division::AssessmentAndPlan};
std::string_view to_string(Division d);

/// Throws UnmappedSection for UNKNOWN.
Division division_of(const SectionId& id);

/// Uppercase, collapse whitespace, strip surrounding punctuation (including a
/// trailing colon).
std::string canonicalize_header(std::string_view raw);

class AliasTable {
public:
    /// Throws AliasConflict if the canonical key already maps elsewhere.
    void add(std::string_view raw_header, SectionKind kind);
    std::optional<SectionKind> lookup(std::string_view raw_header) const;
    const std::map<std::string, SectionKind>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    /// Tab-separated `RAW HEADER<TAB>CANONICAL_ID` lines, `#` comments.
    static AliasTable parse(std::string_view text, std::string_view origin = "<memory>");
    static AliasTable load(const std::filesystem::path& path);

private:
    std::map<std::string, SectionKind> entries_;
};

/// The table shipped in data/aliases.tsv, compiled in.
const AliasTable& default_aliases();
std::string_view default_aliases_text();

SectionId normalize_header(std::string_view raw, const AliasTable& aliases);

/// All-caps line of at most six words, optionally colon-terminated.
bool looks_like_header(std::string_view line);

struct Section {
    SectionId id;
    std::string header;  // header line as it appeared (trimmed); may be empty
    std::string body;

    friend bool operator==(const Section&, const Section&) = default;
};

struct ChartNote {
    std::string preamble;
    std::vector<Section> sections;

    bool empty() const noexcept { return preamble.empty() && sections.empty(); }
    friend bool operator==(const ChartNote&, const ChartNote&) = default;
};

ChartNote segment_note(std::string_view text, const AliasTable& aliases = default_aliases());

enum class HeaderStyle { Canonical, Verbatim };

/// Each section is written as header line, blank line, body, blank line.
/// With `reorder`, sections follow kCanonicalOrder (stable; UNKNOWN last).
std::string assemble_note(const ChartNote& note, HeaderStyle style = HeaderStyle::Canonical, bool reorder = false);

/// Concatenated bodies (newline-joined) of every section in `division`,
/// or nullopt if the note has none.
std::optional<std::string> division_text(const ChartNote& note, Division division);

}  // namespace chartsum
