// Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if any
// gated criterion fails.

#include "chartsum/corpus.hpp"
#include "chartsum/error.hpp"
#include "chartsum/pipeline.hpp"
#include "chartsum/report.hpp"
#include "chartsum/rouge.hpp"
#include "chartsum/section_parser.hpp"
#include "chartsum/tinylsg/attention.hpp"
#include "chartsum/tinylsg/model.hpp"
#include "chartsum/tinylsg/trainer.hpp"
#include "chartsum/tinylsg/vocab.hpp"
#include "chartsum/util.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"
#include "tiny_fixtures.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#ifndef CHARTSUM_BIN
#error "CHARTSUM_BIN must point at the chartsum executable"
#endif

namespace {

using namespace chartsum;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

// 1. ROUGE against brute-force oracles.
Outcome rouge_oracles() {
    auto t0 = Clock::now();
    Rng rng(1);
    const std::vector<std::string> abc = {"a", "b", "c"};
    auto draw = [&] {
        rouge::TokenSeq s;
        const std::size_t len = uniform_index(rng, 9);
        for (std::size_t i = 0; i < len; ++i) {
            s.push_back(abc[uniform_index(rng, 3)]);
        }
        return s;
    };
    std::size_t mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        auto a = draw();
        auto b = draw();
        for (std::size_t n : {1u, 2u}) {
            mismatches += rouge::ngram_overlap(a, b, n) != testing::brute_ngram_overlap(a, b, n);
        }
        mismatches += rouge::lcs_length(a, b) != testing::brute_lcs(a, b);
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 10.0,
            "1000 pairs, " + std::to_string(mismatches) + " mismatches, " + fmt(secs) + " s (limit 10 s)"};
}

// 2. The cat sat / cat lay fixtures, bit-exact.
Outcome rouge_examples() {
    auto cand = rouge::tokenize("the cat sat on the mat");
    auto ref = rouge::tokenize("the cat lay on the mat");
    auto r1 = rouge::rouge_n(cand, ref, 1);
    auto r2 = rouge::rouge_n(cand, ref, 2);
    auto rl = rouge::rouge_l(cand, ref);
    auto exact = [](const rouge::RougeScore& s, double v) { return s.precision == v && s.recall == v && s.f1 == v; };
    bool ok = exact(r1, 5.0 / 6.0) && exact(r2, 3.0 / 5.0) && exact(rl, 5.0 / 6.0);
    return {ok, "R1 " + fmt(r1.f1, 17) + ", R2 " + fmt(r2.f1, 17) + ", RL " + fmt(rl.f1, 17)};
}

// 3. Mask equals the OR of the three independent component masks.
Outcome mask_correctness() {
    auto t0 = Clock::now();
    std::size_t configs = 0;
    std::size_t bad = 0;
    for (std::size_t radius : {0u, 1u, 2u}) {
        for (std::size_t len = 1; len <= 32; ++len) {
            for (std::size_t block : {2u, 4u, 8u}) {
                for (std::size_t stride : {0u, 2u, 4u}) {
                    for (std::size_t g : {0u, 1u, 2u}) {
                        tinylsg::LsgConfig cfg{block, stride, g, 64, radius};
                        auto m = tinylsg::lsg_mask(len, cfg);
                        ++configs;
                        for (std::size_t q = 0; q < len; ++q) {
                            for (std::size_t k = 0; k < len; ++k) {
                                bool expect = testing::local_allowed(q, k, cfg) ||
                                              testing::sparse_allowed(q, k, cfg) || testing::global_allowed(q, k, cfg);
                                bad += m(q, k) != expect;
                            }
                        }
                        if (block >= len && !m.all_allowed()) {
                            ++bad;
                        }
                    }
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && secs < 5.0, std::to_string(configs) + " configurations, " + std::to_string(bad) +
                                        " disagreements, " + fmt(secs) + " s (limit 5 s)"};
}

// 4. Block covering the whole input reproduces dense attention.
Outcome full_attention_limit() {
    Rng rng(77);
    double worst = 0.0;
    for (std::uint64_t draw = 0; draw < 20; ++draw) {
        tinylsg::ModelShape shape;
        shape.vocab_size = 40;
        shape.d_model = 16;
        shape.n_heads = 2;
        shape.n_encoder_layers = 2;
        shape.n_decoder_layers = 1;
        shape.d_ff = 24;
        auto model = tinylsg::init_model(shape, 500 + draw);
        const std::size_t len = 3 + uniform_index(rng, 24);
        std::vector<tinylsg::TokenId> src;
        for (std::size_t i = 0; i < len; ++i) {
            src.push_back(static_cast<tinylsg::TokenId>(tinylsg::Vocab::kNumReserved + uniform_index(rng, 35)));
        }
        tinylsg::LsgConfig cfg{len + 1, 2, 1, 64, 1};
        auto fast = tinylsg::encode(model, src, cfg);
        auto ids = tinylsg::with_globals(src, cfg);
        auto slow = testing::reference_encoder(model, std::vector<int>(ids.begin(), ids.end()));
        worst = std::max(worst, (fast - slow).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-10, "20 draws, max |diff| " + fmt(worst) + " (limit 1e-10)"};
}

// 5. Analytic vs central-difference gradients.
Outcome gradient_check() {
    auto t0 = Clock::now();
    auto fx = testing::grad_check_fixture();
    auto result = tinylsg::grad_check(fx.model, fx.example, fx.lsg, 1e-5, 200, 0);
    const double secs = seconds_since(t0);
    bool ok = result.checks.size() >= 200 && result.max_relative_error < 1e-4 && secs < 60.0;
    return {ok, std::to_string(result.checks.size()) + " parameters, max relative error " +
                    fmt(result.max_relative_error) + " (limit 1e-4), " + fmt(secs) + " s (limit 60 s)"};
}

// 6. Overfit eight pairs.
Outcome memorization() {
    auto t0 = Clock::now();
    auto fx = testing::memorization_fixture();
    auto model = tinylsg::init_model(fx.shape, fx.train.seed);
    auto result = tinylsg::train(model, fx.examples, fx.train, fx.lsg);
    std::size_t exact = 0;
    for (const auto& ex : fx.examples) {
        exact += tinylsg::generate(model, ex.src, ex.tgt.size() + 4, fx.lsg) == ex.tgt;
    }
    const double secs = seconds_since(t0);
    const double loss = result.loss_history.back();
    bool ok = loss < 0.1 && exact == fx.examples.size() && secs < 120.0;
    return {ok, "final loss " + fmt(loss) + " (limit 0.1), " + std::to_string(exact) + "/8 exact decodes, " +
                    fmt(secs) + " s (limit 120 s)"};
}

// 7. Oracle configurations score exactly 1.0 everywhere.
Outcome oracle_chain() {
    auto corpus = testing::make_synthetic_corpus(testing::SyntheticOptions{});
    struct Case {
        std::string name;
        Approach approach;
        std::optional<BackendKind> stage2;
    };
    const std::vector<Case> cases = {{"single", Approach::Single, std::nullopt},
                                     {"section-wise", Approach::SectionWise, std::nullopt},
                                     {"multi-layer/identity", Approach::MultiLayer, BackendKind::Identity},
                                     {"multi-layer/oracle", Approach::MultiLayer, BackendKind::Oracle}};
    std::string detail;
    bool ok = true;
    for (const auto& c : cases) {
        ApproachConfig cfg;
        cfg.approach = c.approach;
        cfg.backend.kind = BackendKind::Oracle;
        cfg.seed = 7;
        if (c.stage2) {
            cfg.stage2 = BackendConfig{};
            cfg.stage2->kind = *c.stage2;
        }
        auto r = evaluate(run_approach(corpus, corpus, cfg), corpus);
        bool all = r.full_note.rouge1.f1 == 1.0 && r.full_note.rouge2.f1 == 1.0 && r.full_note.rougeL.f1 == 1.0;
        for (double d : r.divisions) {
            all = all && d == 1.0;
        }
        all = all && r.division_average == 1.0;
        ok = ok && all;
        detail += (detail.empty() ? "" : ", ") + c.name + (all ? " 1.0" : " below 1.0");
    }
    return {ok, "10 documents: " + detail};
}

// 8. assemble -> segment round trip.
Outcome section_round_trip() {
    Rng rng(2024);
    std::size_t failures = 0;
    for (int i = 0; i < 500; ++i) {
        auto note = testing::random_chart_note(rng);
        auto back = segment_note(assemble_note(note, HeaderStyle::Canonical));
        bool same = back.sections.size() == note.sections.size();
        for (std::size_t s = 0; same && s < note.sections.size(); ++s) {
            same = back.sections[s].id == note.sections[s].id && back.sections[s].body == note.sections[s].body;
        }
        failures += !same;
    }
    return {failures == 0, "500 notes, " + std::to_string(failures) + " failures"};
}

// 9. Section-wise vs single extractive on section-local vocabulary. The gap
// is reported; only a fully populated table is gated.
Outcome trend_check() {
    testing::SyntheticOptions opts;
    opts.documents = 80;
    opts.seed = 9;
    opts.drop_probability = 0.1;
    auto corpus = testing::make_synthetic_corpus(opts);
    auto [train, eval] = split_corpus(corpus, 0.75, 9);

    ApproachConfig single;
    single.approach = Approach::Single;
    single.backend.kind = BackendKind::Extractive;
    single.backend.extractive_k = opts.sentences_per_section * opts.sections.size();
    single.seed = 9;
    ApproachConfig sectioned = single;
    sectioned.approach = Approach::SectionWise;
    sectioned.backend.extractive_k = opts.sentences_per_section;

    auto r1 = evaluate(run_approach(train, eval, single), eval);
    r1.label = "extractive-single";
    auto r2 = evaluate(run_approach(train, eval, sectioned), eval);
    r2.label = "extractive-section-wise";
    const std::string table = report({r1, r2}, ReportFormat::Table);
    std::cout << table;

    auto csv = report({r1, r2}, ReportFormat::Csv);
    std::size_t cells = 0;
    bool populated = true;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.rfind("approach,", 0) == 0) {
            continue;
        }
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        while (std::getline(ls, cell, ',')) {
            ++cells;
            populated = populated && cell.size() == 6 && std::isfinite(std::stod(cell));
        }
    }
    populated = populated && cells == 2 * 3 + 2 * 5 && train.size() == 60 && eval.size() == 20;
    const double gap = r2.division_average - r1.division_average;
    return {populated, "train 60 / eval 20, division average single " + round_half_up(r1.division_average, 4) +
                           " vs section-wise " + round_half_up(r2.division_average, 4) + ", gap " +
                           round_half_up(gap, 4) + (gap >= 0.05 ? " (>= 0.05)" : " (< 0.05, soft)")};
}

// 10. Two identical `run` invocations give identical bytes.
Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "chartsum_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    testing::SyntheticOptions opts;
    opts.documents = 16;
    opts.drop_probability = 0.2;
    save_corpus_csv(testing::make_synthetic_corpus(opts), dir / "data.csv");

    auto run = [&](const std::string& tag) {
        const std::string base = (dir / tag).string();
        std::string cmd = std::string("\"") + CHARTSUM_BIN + "\" run --approach multi-layer --backend tinylsg" +
                          " --stage2-backend extractive --k 4 --data \"" + (dir / "data.csv").string() +
                          "\" --train-fraction 0.75 --seed 13 --epochs 2 --d-model 8 --heads 1 --enc-layers 1" +
                          " --dec-layers 1 --d-ff 16 --block 8 --max-output 12 --jobs 2" + " --out-predictions \"" +
                          base + ".pred.json\" --out-report \"" + base + ".report.json\" --out \"" + base +
                          ".table.txt\" 2> \"" + base + ".log\"";
        return std::system(cmd.c_str());
    };
    int a = run("a");
    int b = run("b");
    bool same = a == 0 && b == 0;
    std::string detail = "exit codes " + std::to_string(a) + "/" + std::to_string(b);
    for (const char* suffix : {".pred.json", ".report.json", ".table.txt"}) {
        bool eq = same && fs::exists(dir / (std::string("a") + suffix)) &&
                  read_file(dir / (std::string("a") + suffix)) == read_file(dir / (std::string("b") + suffix));
        same = same && eq;
        detail += std::string(", ") + (suffix + 1) + (eq ? " identical" : " differs");
    }
    fs::remove_all(dir);
    return {same, detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"ROUGE oracle equivalence", rouge_oracles},
        {"ROUGE worked examples", rouge_examples},
        {"LSG mask correctness", mask_correctness},
        {"full-attention limit", full_attention_limit},
        {"gradient check", gradient_check},
        {"memorization", memorization},
        {"oracle pipeline chain", oracle_chain},
        {"section round trip", section_round_trip},
        {"trend check (soft)", trend_check},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " " << criteria[i].first << ": "
                  << o.detail << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
