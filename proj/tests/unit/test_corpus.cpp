#include "chartsum/corpus.hpp"
#include "chartsum/error.hpp"
#include "chartsum/util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

namespace chartsum {
namespace {

// Independent writer for the reader tests: quotes every field.
std::string quote_all(const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += i ? "," : "";
            out += '"';
            for (char c : row[i]) {
                out += c == '"' ? std::string("\"\"") : std::string(1, c);
            }
            out += '"';
        }
        out += "\r\n";
    }
    return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::Io;
}

TEST(LoadCorpus, TwoRowsInFileOrder) {
    auto c = parse_corpus_csv("id,dialogue,note\nB2,hello,first\nA1,hi there,second\n");
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.encounters[0].id, "B2");
    EXPECT_EQ(c.encounters[1].id, "A1");
    EXPECT_EQ(*c.encounters[1].note, "second");
}

TEST(LoadCorpus, DuplicateIdNamesTheId) {
    try {
        parse_corpus_csv("id,dialogue,note\nD001,a,b\nD001,c,d\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DuplicateId);
        EXPECT_EQ(e.subject(), "D001");
    }
}

TEST(LoadCorpus, QuotedNewlinesSurvive) {
    const std::string note = "CHIEF COMPLAINT\nChest pain.";
    auto text = quote_all({{"id", "dialogue", "note"}, {"E1", "Doctor: hi, \"welcome\"", note}});
    auto c = parse_corpus_csv(text);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(*c.encounters[0].note, note);
    EXPECT_EQ(c.encounters[0].dialogue, "Doctor: hi, \"welcome\"");
}

TEST(LoadCorpus, MissingColumnsAndEmptyDialogue) {
    EXPECT_EQ(kind_of([] { parse_corpus_csv("id,note\nA,b\n"); }), ErrorKind::MissingColumn);
    EXPECT_EQ(kind_of([] { parse_corpus_csv(""); }), ErrorKind::MissingColumn);
    try {
        parse_corpus_csv("id,dialogue\nA,x\nB,\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyDialogue);
        EXPECT_EQ(e.subject(), "row 2");
    }
    EXPECT_EQ(kind_of([] { parse_corpus_csv("id,dialogue\nA,x,extra\n"); }), ErrorKind::MalformedFile);
    EXPECT_EQ(kind_of([] { parse_corpus_csv("id,dialogue\n\"A,x\n"); }), ErrorKind::MalformedFile);
}

TEST(LoadCorpus, NoteColumnIsOptionalAndEmptyCellsAreUnlabeled) {
    auto c = parse_corpus_csv("id,dialogue\nA,x\n");
    EXPECT_FALSE(c.encounters[0].labeled());
    auto d = parse_corpus_csv("id,dialogue,note\nA,x,\nB,y,z\n");
    EXPECT_EQ(d.unlabeled_count(), 1u);
    EXPECT_TRUE(d.encounters[1].labeled());
}

TEST(LoadCorpus, ColumnRemap) {
    auto cols = ColumnMap::parse("id=encounter_id,dialogue=conversation,note=summary");
    auto c = parse_corpus_csv("encounter_id,conversation,summary\nZ,talk,sum\n", cols);
    EXPECT_EQ(c.encounters[0].id, "Z");
    EXPECT_EQ(*c.encounters[0].note, "sum");
    EXPECT_THROW(ColumnMap::parse("speaker=x"), Error);
    EXPECT_THROW(ColumnMap::parse("id"), Error);
}

TEST(LoadCorpus, JsonlAndCsvAgree) {
    auto dir = std::filesystem::temp_directory_path() / "chartsum_corpus_test";
    std::filesystem::create_directories(dir);
    write_file(dir / "c.jsonl",
               "{\"id\":\"A\",\"dialogue\":\"hi\\nthere\",\"note\":\"PLAN\\nrest\"}\n\n{\"id\":\"B\",\"dialogue\":\"yo\"}\n");
    auto j = load_corpus(dir / "c.jsonl", format_from_path(dir / "c.jsonl"));
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j.encounters[0].dialogue, "hi\nthere");
    EXPECT_FALSE(j.encounters[1].labeled());
    save_corpus_csv(j, dir / "c.csv");
    auto c = load_corpus(dir / "c.csv", CorpusFormat::Csv);
    EXPECT_EQ(c.encounters, j.encounters);
    std::filesystem::remove_all(dir);
}

TEST(LoadCorpus, MissingFileIsIo) {
    EXPECT_EQ(kind_of([] { load_corpus("/nonexistent/chartsum.csv", CorpusFormat::Csv); }), ErrorKind::Io);
}

TEST(CorpusRoundTrip, LoadSaveLoadIsAFixedPoint) {
    Rng rng(5);
    const std::string alphabet = "ab,\"\n\r x\tÃ©";
    for (int trial = 0; trial < 200; ++trial) {
        Corpus c;
        const std::size_t n = 1 + uniform_index(rng, 6);
        for (std::size_t i = 0; i < n; ++i) {
            auto field = [&](std::size_t min_len) {
                std::string s;
                const std::size_t len = min_len + uniform_index(rng, 12);
                for (std::size_t k = 0; k < len; ++k) {
                    s += alphabet[uniform_index(rng, alphabet.size())];
                }
                return s;
            };
            Encounter e{"id" + std::to_string(i), field(1), std::nullopt};
            if (uniform01(rng) < 0.7) {
                e.note = field(1);
            }
            c.encounters.push_back(e);
        }
        auto first = parse_corpus_csv(to_csv(c));
        ASSERT_EQ(first.encounters, c.encounters) << "trial " << trial;
        auto second = parse_corpus_csv(to_csv(first));
        ASSERT_EQ(second.encounters, first.encounters);
        ASSERT_EQ(to_csv(second), to_csv(first));
    }
}

Corpus numbered(std::size_t n) {
    Corpus c;
    for (std::size_t i = 0; i < n; ++i) {
        c.encounters.push_back(Encounter{"e" + std::to_string(i), "d", std::nullopt});
    }
    return c;
}

TEST(SplitCorpus, SixtySevenTwenty) {
    for (std::uint64_t seed : {0u, 1u, 99u}) {
        auto [train, val] = split_corpus(numbered(87), 67.0 / 87.0, seed);
        EXPECT_EQ(train.size(), 67u);
        EXPECT_EQ(val.size(), 20u);
    }
}

TEST(SplitCorpus, TwoEncounters) {
    auto [train, val] = split_corpus(numbered(2), 0.5, 3);
    ASSERT_EQ(train.size(), 1u);
    ASSERT_EQ(val.size(), 1u);
    EXPECT_NE(train.encounters[0].id, val.encounters[0].id);
}

TEST(SplitCorpus, TooSmall) {
    EXPECT_EQ(kind_of([] { split_corpus(numbered(1), 0.5, 0); }), ErrorKind::CorpusTooSmall);
    EXPECT_EQ(kind_of([] { split_corpus(numbered(5), 1.0, 0); }), ErrorKind::InvalidArgument);
}

TEST(SplitCorpus, DeterministicExactPartitionInFileOrder) {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 60);
        const double fraction = 0.01 + 0.98 * uniform01(rng);
        const std::uint64_t seed = rng();
        const Corpus c = numbered(n);
        auto [train, val] = split_corpus(c, fraction, seed);
        auto [train2, val2] = split_corpus(c, fraction, seed);
        ASSERT_EQ(train.encounters, train2.encounters);
        ASSERT_EQ(val.encounters, val2.encounters);
        ASSERT_EQ(train.size() + val.size(), n);
        ASSERT_EQ(train.size(), static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9)));
        std::set<std::string> ids;
        std::vector<std::size_t> train_pos;
        for (const auto& e : train.encounters) {
            ids.insert(e.id);
            train_pos.push_back(std::stoul(e.id.substr(1)));
        }
        for (const auto& e : val.encounters) {
            ASSERT_EQ(ids.count(e.id), 0u);
            ids.insert(e.id);
        }
        ASSERT_EQ(ids.size(), n);
        ASSERT_TRUE(std::is_sorted(train_pos.begin(), train_pos.end()));
    }
}

TEST(Predictions, RoundTripPreservesMultilineText) {
    PredictionSet p;
    p.approach = Approach::SectionWise;
    p.seed = 7;
    p.config_hash = "00ff";
    p.entries["b"] = "HPI\n\nLine one.\r\nLine \"two\"\t\n";
    p.entries["a"] = "";
    p.entries["c"] = "naïve café";
    auto text = serialize_predictions(p);
    auto back = parse_predictions(text);
    EXPECT_EQ(back, p);
    EXPECT_EQ(serialize_predictions(back), text);
    EXPECT_EQ(text.find("timestamp"), std::string::npos);

    p.timestamp = "2026-01-01T00:00:00Z";
    EXPECT_EQ(parse_predictions(serialize_predictions(p)), p);
}

TEST(Predictions, FileRoundTripAndTruncation) {
    PredictionSet p;
    p.approach = Approach::Oracle;
    p.entries["x"] = "PLAN\n\nRest.";
    auto path = std::filesystem::temp_directory_path() / "chartsum_preds_test.json";
    save_predictions(p, path);
    EXPECT_EQ(load_predictions(path), p);
    auto text = read_file(path);
    write_file(path, text.substr(0, text.size() / 2));
    EXPECT_EQ(kind_of([&] { load_predictions(path); }), ErrorKind::MalformedFile);
    write_file(path, "{\"approach\":\"bogus\",\"entries\":{}}");
    EXPECT_EQ(kind_of([&] { load_predictions(path); }), ErrorKind::MalformedFile);
    std::filesystem::remove(path);
}

TEST(LoadTexts, ReadsCsvColumnsAndPredictionFiles) {
    auto dir = std::filesystem::temp_directory_path() / "chartsum_texts_test";
    std::filesystem::create_directories(dir);
    write_file(dir / "t.csv", "id,summary\nq,one\nr,two\n");
    auto rows = load_texts(dir / "t.csv", "summary");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1], (std::pair<std::string, std::string>{"r", "two"}));
    EXPECT_EQ(kind_of([&] { load_texts(dir / "t.csv", "note"); }), ErrorKind::MissingColumn);

    PredictionSet p;
    p.entries["k"] = "text";
    save_predictions(p, dir / "p.json");
    auto from_json = load_texts(dir / "p.json");
    ASSERT_EQ(from_json.size(), 1u);
    EXPECT_EQ(from_json[0].second, "text");
    std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace chartsum
