#include "chartsum/section_parser.hpp"

#include "chartsum/corpus.hpp"
#include "chartsum/error.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace chartsum {

namespace detail {
extern const std::string_view kDefaultAliasesText;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    for (auto& line : lines) {
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
    }
    return lines;
}

// Joins lines [first, last) after dropping blank lines at both ends.
std::string join_trimmed(const std::vector<std::string_view>& lines, std::size_t first, std::size_t last) {
    while (first < last && is_blank(lines[first])) {
        ++first;
    }
    while (last > first && is_blank(lines[last - 1])) {
        --last;
    }
    std::string out;
    for (std::size_t i = first; i < last; ++i) {
        if (i > first) {
            out += '\n';
        }
        out += lines[i];
    }
    return out;
}

bool ends_like_sentence(std::string_view line) {
    return !line.empty() && (line.back() == '.' || line.back() == '?' || line.back() == '!' || line.back() == ';' ||
                             line.back() == ',');
}

}  // namespace

std::string_view to_string(SectionKind kind) {
    switch (kind) {
        case SectionKind::CC: return "CC";
        case SectionKind::HPI: return "HPI";
        case SectionKind::ROS: return "ROS";
        case SectionKind::MEDICATIONS: return "MEDICATIONS";
        case SectionKind::ALLERGIES: return "ALLERGIES";
        case SectionKind::PE: return "PE";
        case SectionKind::RESULTS: return "RESULTS";
        case SectionKind::ASSESSMENT: return "ASSESSMENT";
        case SectionKind::PLAN: return "PLAN";
        case SectionKind::ASSESSMENT_AND_PLAN: return "ASSESSMENT_AND_PLAN";
        case SectionKind::UNKNOWN: return "UNKNOWN";
    }
    return "UNKNOWN";
}

std::string to_string(const SectionId& id) {
    if (id.is_unknown()) {
        return "UNKNOWN(" + id.raw + ")";
    }
    return std::string(to_string(id.kind));
}

SectionKind section_kind_from_string(std::string_view name) {
    for (auto kind : kCanonicalOrder) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown section id \"" + std::string(name) + "\"", std::string(name));
}

std::string_view display_header(SectionKind kind) {
    switch (kind) {
        case SectionKind::CC: return "CHIEF COMPLAINT";
        case SectionKind::HPI: return "HISTORY OF PRESENT ILLNESS";
        case SectionKind::ROS: return "REVIEW OF SYSTEMS";
        case SectionKind::MEDICATIONS: return "MEDICATIONS";
        case SectionKind::ALLERGIES: return "ALLERGIES";
        case SectionKind::PE: return "PHYSICAL EXAM";
        case SectionKind::RESULTS: return "RESULTS";
        case SectionKind::ASSESSMENT: return "ASSESSMENT";
        case SectionKind::PLAN: return "PLAN";
        case SectionKind::ASSESSMENT_AND_PLAN: return "ASSESSMENT AND PLAN";
        case SectionKind::UNKNOWN: return "";
    }
    return "";
}

std::size_t canonical_rank(SectionKind kind) noexcept {
    auto it = std::find(kCanonicalOrder.begin(), kCanonicalOrder.end(), kind);
    return static_cast<std::size_t>(it - kCanonicalOrder.begin());
}

std::string_view to_string(Division d) {
    switch (d) {
        case Division::Subjective: return "Subjective";
        case Division::Exam: return "Exam";
        case Division::Results: return "Results";
        case Division::AssessmentAndPlan: return "AssessmentAndPlan";
    }
    return "";
}

Division division_of(const SectionId& id) {
    switch (id.kind) {
        case SectionKind::CC:
        case SectionKind::HPI:
        case SectionKind::ROS:
        case SectionKind::MEDICATIONS:
        case SectionKind::ALLERGIES: return Division::Subjective;
        case SectionKind::PE: return Division::Exam;
        case SectionKind::RESULTS: return Division::Results;
        case SectionKind::ASSESSMENT:
        case SectionKind::PLAN:
        case SectionKind::ASSESSMENT_AND_PLAN: return Division::AssessmentAndPlan;
        case SectionKind::UNKNOWN: break;
    }
    throw Error(ErrorKind::UnmappedSection, "section " + to_string(id) + " has no division", id.raw);
}

std::string canonicalize_header(std::string_view raw) {
    auto is_edge_punct = [](unsigned char c) { return !std::isalnum(c) && !is_space(static_cast<char>(c)) && c < 0x80; };
    std::string out;
    bool pending_space = false;
    for (char ch : trim(raw)) {
        if (is_space(ch)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    // Strip surrounding punctuation and any whitespace it exposes.
    std::size_t b = 0;
    std::size_t e = out.size();
    while (b < e && (is_edge_punct(static_cast<unsigned char>(out[b])) || out[b] == ' ')) {
        ++b;
    }
    while (e > b && (is_edge_punct(static_cast<unsigned char>(out[e - 1])) || out[e - 1] == ' ')) {
        --e;
    }
    return out.substr(b, e - b);
}

void AliasTable::add(std::string_view raw_header, SectionKind kind) {
    if (kind == SectionKind::UNKNOWN) {
        throw Error(ErrorKind::InvalidArgument, "alias target cannot be UNKNOWN", std::string(raw_header));
    }
    auto key = canonicalize_header(raw_header);
    if (key.empty()) {
        throw Error(ErrorKind::InvalidArgument, "alias header canonicalizes to empty", std::string(raw_header));
    }
    auto [it, inserted] = entries_.emplace(key, kind);
    if (!inserted && it->second != kind) {
        throw Error(ErrorKind::AliasConflict,
                    "\"" + key + "\" maps to both " + std::string(to_string(it->second)) + " and " +
                        std::string(to_string(kind)),
                    key);
    }
}

std::optional<SectionKind> AliasTable::lookup(std::string_view raw_header) const {
    auto it = entries_.find(canonicalize_header(raw_header));
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

AliasTable AliasTable::parse(std::string_view text, std::string_view origin) {
    AliasTable table;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto line = trim(lines[i]);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto tab = lines[i].find('\t');
        if (tab == std::string_view::npos) {
            throw Error(ErrorKind::MalformedFile,
                        std::string(origin) + ":" + std::to_string(i + 1) + ": expected RAW HEADER<TAB>CANONICAL_ID",
                        std::to_string(i + 1));
        }
        auto raw = trim(lines[i].substr(0, tab));
        auto id = trim(lines[i].substr(tab + 1));
        SectionKind kind;
        try {
            kind = section_kind_from_string(id);
        } catch (const Error&) {
            throw Error(ErrorKind::MalformedFile,
                        std::string(origin) + ":" + std::to_string(i + 1) + ": unknown canonical id \"" +
                            std::string(id) + "\"",
                        std::string(id));
        }
        table.add(raw, kind);
    }
    return table;
}

AliasTable AliasTable::load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

std::string_view default_aliases_text() { return detail::kDefaultAliasesText; }

const AliasTable& default_aliases() {
    static const AliasTable table = AliasTable::parse(detail::kDefaultAliasesText, "data/aliases.tsv");
    return table;
}

SectionId normalize_header(std::string_view raw, const AliasTable& aliases) {
    if (auto kind = aliases.lookup(raw)) {
        return *kind;
    }
    return SectionId::unknown(std::string(raw));
}

bool looks_like_header(std::string_view line) {
    line = trim(line);
    if (!line.empty() && line.back() == ':') {
        line.remove_suffix(1);
        line = trim(line);
    }
    if (line.empty() || ends_like_sentence(line)) {
        return false;
    }
    int letters = 0;
    int words = 0;
    bool in_word = false;
    for (char ch : line) {
        auto c = static_cast<unsigned char>(ch);
        if (is_space(ch)) {
            in_word = false;
            continue;
        }
        if (!in_word) {
            ++words;
            in_word = true;
        }
        if (c >= 'A' && c <= 'Z') {
            ++letters;
        } else if (!(c == '&' || c == '/' || c == '-' || c == '(' || c == ')' || c == '\'' || c == ',')) {
            // lowercase, digits, non-ASCII and other punctuation all disqualify
            return false;
        }
    }
    return letters >= 2 && words <= 6;
}

namespace {

std::optional<SectionId> header_of(std::string_view line, const AliasTable& aliases) {
    auto t = trim(line);
    if (t.empty() || ends_like_sentence(t)) {
        return std::nullopt;
    }
    if (auto kind = aliases.lookup(t)) {
        return SectionId(*kind);
    }
    if (looks_like_header(t)) {
        return SectionId::unknown(std::string(t));
    }
    return std::nullopt;
}

}  // namespace

ChartNote segment_note(std::string_view text, const AliasTable& aliases) {
    ChartNote note;
    auto lines = split_lines(text);

    std::vector<std::pair<std::size_t, SectionId>> headers;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (auto id = header_of(lines[i], aliases)) {
            headers.emplace_back(i, std::move(*id));
        }
    }

    std::size_t first_header = headers.empty() ? lines.size() : headers.front().first;
    note.preamble = join_trimmed(lines, 0, first_header);
    for (std::size_t h = 0; h < headers.size(); ++h) {
        std::size_t begin = headers[h].first + 1;
        std::size_t end = h + 1 < headers.size() ? headers[h + 1].first : lines.size();
        Section s;
        s.id = std::move(headers[h].second);
        s.header = std::string(trim(lines[headers[h].first]));
        s.body = join_trimmed(lines, begin, end);
        note.sections.push_back(std::move(s));
    }
    return note;
}

std::string assemble_note(const ChartNote& note, HeaderStyle style, bool reorder) {
    std::vector<const Section*> order;
    order.reserve(note.sections.size());
    for (const auto& s : note.sections) {
        order.push_back(&s);
    }
    if (reorder) {
        std::stable_sort(order.begin(), order.end(), [](const Section* a, const Section* b) {
            return canonical_rank(a->id.kind) < canonical_rank(b->id.kind);
        });
    }

    std::string out;
    if (!note.preamble.empty()) {
        out += note.preamble;
        out += "\n\n";
    }
    for (const Section* s : order) {
        std::string header;
        if (s->id.is_unknown()) {
            header = !s->id.raw.empty() ? s->id.raw : s->header;
        } else if (style == HeaderStyle::Verbatim && !s->header.empty()) {
            header = s->header;
        } else {
            header = std::string(display_header(s->id.kind));
        }
        out += header;
        out += "\n\n";
        if (!s->body.empty()) {
            out += s->body;
            out += "\n\n";
        }
    }
    return out;
}

std::optional<std::string> division_text(const ChartNote& note, Division division) {
    std::optional<std::string> text;
    for (const auto& s : note.sections) {
        if (s.id.is_unknown() || division_of(s.id) != division) {
            continue;
        }
        if (!text) {
            text.emplace();
        } else {
            text->push_back('\n');
        }
        *text += s.body;
    }
    return text;
}

}  // namespace chartsum
