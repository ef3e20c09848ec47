#include "chartsum/error.hpp"
#include "chartsum/tinylsg/attention.hpp"
#include "chartsum/tinylsg/checkpoint.hpp"
#include "chartsum/tinylsg/model.hpp"
#include "chartsum/tinylsg/trainer.hpp"
#include "chartsum/tinylsg/vocab.hpp"
#include "chartsum/util.hpp"

#include "oracles.hpp"
#include "tiny_fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <set>

namespace chartsum::tinylsg {
namespace {

using testing::reference_encoder;

// ---------------------------------------------------------------------------
// Vocab
// ---------------------------------------------------------------------------

TEST(Vocab, ReservedIdsComeFirst) {
    Vocab v;
    ASSERT_EQ(v.size(), 5u);
    EXPECT_EQ(v.token(Vocab::kPad), "<pad>");
    EXPECT_EQ(v.token(Vocab::kBos), "<bos>");
    EXPECT_EQ(v.token(Vocab::kEos), "<eos>");
    EXPECT_EQ(v.token(Vocab::kUnk), "<unk>");
    EXPECT_EQ(v.token(Vocab::kGlobal), "<global>");
}

TEST(Vocab, OrdersByFrequencyThenLexically) {
    auto v = Vocab::build({"b a c a", "c a d"});
    // a:3, c:2, b:1, d:1
    EXPECT_EQ(v.token(5), "a");
    EXPECT_EQ(v.token(6), "c");
    EXPECT_EQ(v.token(7), "b");
    EXPECT_EQ(v.token(8), "d");
    EXPECT_EQ(v.id("zzz"), Vocab::kUnk);
}

TEST(Vocab, MinFreqFiltersRareTokens) {
    auto v = Vocab::build({"x x y"}, 2);
    EXPECT_TRUE(v.contains("x"));
    EXPECT_FALSE(v.contains("y"));
    EXPECT_THROW(Vocab::build({"x"}, 0), Error);
}

TEST(Vocab, EmptyCorpusIsAnError) {
    try {
        Vocab::build({"", "  ,. "});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyCorpus);
    }
}

TEST(Vocab, DecodeDropsReservedIds) {
    auto v = Vocab::build({"hello world"});
    auto ids = v.encode_text("hello there world");
    EXPECT_EQ(ids[1], Vocab::kUnk);
    std::vector<TokenId> with_specials = {Vocab::kBos, ids[0], Vocab::kPad, ids[2], Vocab::kEos};
    EXPECT_EQ(v.decode(with_specials), (std::vector<std::string>{"hello", "world"}));
}

// ---------------------------------------------------------------------------
// Masks
// ---------------------------------------------------------------------------

TEST(LsgMask, HandEnumeratedRow) {
    LsgConfig cfg;
    cfg.block_size = 4;
    cfg.sparsity_stride = 0;
    cfg.num_global = 1;
    auto m = lsg_mask(12, cfg);
    std::vector<std::size_t> allowed;
    for (std::size_t k = 0; k < 12; ++k) {
        if (m(9, k)) {
            allowed.push_back(k);
        }
    }
    EXPECT_EQ(allowed, (std::vector<std::size_t>{0, 4, 5, 6, 7, 8, 9, 10, 11}));
}

TEST(LsgMask, SparseColumnsFollowStride) {
    LsgConfig cfg;
    cfg.block_size = 2;
    cfg.sparsity_stride = 3;
    cfg.num_global = 1;
    cfg.local_radius = 0;
    auto m = lsg_mask(12, cfg);
    // Query 11 (block 5: 10..11) sees the global column, its own block and
    // the keys 1, 4, 7, 10.
    std::vector<std::size_t> allowed;
    for (std::size_t k = 0; k < 12; ++k) {
        if (m(11, k)) {
            allowed.push_back(k);
        }
    }
    EXPECT_EQ(allowed, (std::vector<std::size_t>{0, 1, 4, 7, 10, 11}));
}

TEST(LsgMask, EqualsUnionOfIndependentComponents) {
    for (std::size_t radius : {0u, 1u, 2u}) {
        for (std::size_t len = 1; len <= 32; ++len) {
            for (std::size_t block : {2u, 4u, 8u}) {
                for (std::size_t stride : {0u, 2u, 4u}) {
                    for (std::size_t g : {0u, 1u, 2u}) {
                        LsgConfig cfg{block, stride, g, 64, radius};
                        auto m = lsg_mask(len, cfg);
                        for (std::size_t q = 0; q < len; ++q) {
                            for (std::size_t k = 0; k < len; ++k) {
                                bool expect = testing::local_allowed(q, k, cfg) || testing::sparse_allowed(q, k, cfg) ||
                                              testing::global_allowed(q, k, cfg);
                                ASSERT_EQ(m(q, k), expect) << "len " << len << " block " << block << " stride "
                                                           << stride << " global " << g << " q " << q << " k " << k;
                            }
                        }
                    }
                }
            }
        }
    }
}

TEST(LsgMask, SingleBlockIsFullAttention) {
    for (std::size_t len = 1; len <= 16; ++len) {
        LsgConfig cfg{16, 4, 0, 64, 0};
        EXPECT_TRUE(lsg_mask(len, cfg).all_allowed());
    }
}

TEST(LsgMask, GlobalRowAndColumnAreOpen) {
    LsgConfig cfg{2, 0, 1, 64, 0};
    auto m = lsg_mask(20, cfg);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_TRUE(m(0, i));
        EXPECT_TRUE(m(i, 0));
    }
    EXPECT_LT(m.density(), 0.5);
}

TEST(LsgMask, GlobalTokenConnectsEveryPairWithinTwoHops) {
    LsgConfig cfg{2, 0, 1, 64, 0};
    const std::size_t n = 24;
    auto m = lsg_mask(n, cfg);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            bool reach = m(a, b);
            for (std::size_t mid = 0; mid < n && !reach; ++mid) {
                reach = m(a, mid) && m(mid, b);
            }
            EXPECT_TRUE(reach) << a << " -> " << b;
        }
    }
}

TEST(LsgMask, RenderUsesHashAndDot) {
    LsgConfig cfg{2, 0, 0, 64, 0};
    EXPECT_EQ(lsg_mask(4, cfg).render(), "##..\n##..\n..##\n..##\n");
}

TEST(Attention, SoftmaxRowsSumToOneAndBlockedEntriesAreZero) {
    Rng rng(3);
    Matrix scores(6, 6);
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        scores.data()[i] = 4.0 * uniform01(rng) - 2.0;
    }
    auto mask = causal_mask(6);
    Matrix p = masked_softmax(scores, mask);
    for (Eigen::Index r = 0; r < 6; ++r) {
        EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-15);
        for (Eigen::Index c = r + 1; c < 6; ++c) {
            EXPECT_EQ(p(r, c), 0.0);
        }
    }
}

TEST(Attention, OutputsAreConvexCombinationsOfAllowedValues) {
    Matrix q = Matrix::Random(3, 4);
    Matrix k = Matrix::Random(3, 4);
    Matrix v(3, 2);
    v << 1, 10, 2, 20, 3, 30;
    AttentionMask only_first(3, 3, false);
    for (std::size_t r = 0; r < 3; ++r) {
        only_first.set(r, 0, true);
    }
    Matrix out = attention(q, k, v, only_first);
    for (Eigen::Index r = 0; r < 3; ++r) {
        EXPECT_DOUBLE_EQ(out(r, 0), 1.0);
        EXPECT_DOUBLE_EQ(out(r, 1), 10.0);
    }
}

TEST(Attention, ShapeMismatchIsReported) {
    Matrix q = Matrix::Zero(2, 4);
    Matrix k = Matrix::Zero(3, 4);
    Matrix v = Matrix::Zero(3, 2);
    try {
        attention(q, k, v, full_mask(2, 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    }
    EXPECT_THROW(attention(q, k, Matrix::Zero(2, 2), full_mask(2, 3)), Error);
}

TEST(Attention, EmptyRowIsRejected) {
    EXPECT_THROW(masked_softmax(Matrix::Zero(2, 2), AttentionMask(2, 2, false)), Error);
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

ModelShape small_shape(std::size_t vocab = 32) {
    ModelShape s;
    s.vocab_size = vocab;
    s.d_model = 16;
    s.n_heads = 2;
    s.n_encoder_layers = 2;
    s.n_decoder_layers = 2;
    s.d_ff = 24;
    return s;
}

std::vector<TokenId> random_ids(Rng& rng, std::size_t n, std::size_t vocab) {
    std::vector<TokenId> ids;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(static_cast<TokenId>(Vocab::kNumReserved + uniform_index(rng, vocab - Vocab::kNumReserved)));
    }
    return ids;
}

TEST(Model, LogitsShape) {
    auto model = init_model(small_shape(32), 1);
    Rng rng(1);
    LsgConfig cfg;
    auto logits = forward(model, random_ids(rng, 16, 32), random_ids(rng, 5, 32), cfg);
    EXPECT_EQ(logits.rows(), 5);
    EXPECT_EQ(logits.cols(), 32);
}

TEST(Model, SameSeedSameLogitsBitForBit) {
    Rng rng(2);
    auto src = random_ids(rng, 20, 32);
    auto tgt = random_ids(rng, 6, 32);
    LsgConfig cfg{4, 2, 1, 64, 1};
    auto a = forward(init_model(small_shape(), 9), src, tgt, cfg);
    auto b = forward(init_model(small_shape(), 9), src, tgt, cfg);
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())));
    auto c = forward(init_model(small_shape(), 10), src, tgt, cfg);
    EXPECT_FALSE(a.isApprox(c));
}

TEST(Model, ParameterNamesAreStableAndUnique) {
    auto model = init_model(small_shape(), 0);
    auto params = parameters(model);
    EXPECT_EQ(params.front().name, "embedding");
    EXPECT_EQ(params.back().name, "b_out");
    std::set<std::string> names;
    std::size_t count = 0;
    for (const auto& p : params) {
        names.insert(p.name);
        count += static_cast<std::size_t>(p.value->size());
    }
    EXPECT_EQ(names.size(), params.size());
    EXPECT_EQ(count, parameter_count(model));
}

TEST(Model, FullAttentionLimitMatchesDenseReference) {
    Rng rng(77);
    for (std::uint64_t draw = 0; draw < 20; ++draw) {
        auto model = init_model(small_shape(40), 1000 + draw);
        // Non-trivial norm parameters so they are exercised too.
        for (auto* norm : {&model.encoder[0].norm1, &model.encoder[1].norm2, &model.encoder_norm}) {
            for (Eigen::Index j = 0; j < norm->gain.cols(); ++j) {
                norm->gain(0, j) = 0.5 + uniform01(rng);
                norm->bias(0, j) = uniform01(rng) - 0.5;
            }
        }
        const std::size_t len = 3 + uniform_index(rng, 20);
        auto src = random_ids(rng, len, 40);
        LsgConfig cfg{len + 1, 3, 1, 64, 1};
        Matrix fast = encode(model, src, cfg);
        auto ids = with_globals(src, cfg);
        Matrix slow = reference_encoder(model, std::vector<int>(ids.begin(), ids.end()));
        ASSERT_EQ(fast.rows(), slow.rows());
        EXPECT_LE((fast - slow).cwiseAbs().maxCoeff(), 1e-10) << "draw " << draw;
    }
}

TEST(Model, SparseMaskChangesTheEncoding) {
    auto model = init_model(small_shape(40), 5);
    Rng rng(5);
    auto src = random_ids(rng, 30, 40);
    LsgConfig sparse{2, 0, 1, 64, 0};
    LsgConfig dense{64, 0, 1, 64, 0};
    EXPECT_GT((encode(model, src, sparse) - encode(model, src, dense)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Model, SourceLongerThanLimitIsRejected) {
    auto model = init_model(small_shape(), 0);
    LsgConfig cfg{4, 0, 1, 8, 1};
    Rng rng(0);
    try {
        encode(model, random_ids(rng, 9, 32), cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SequenceTooLong);
    }
}

TEST(Model, OutOfVocabularyIdIsRejected) {
    auto model = init_model(small_shape(10), 0);
    EXPECT_THROW(encode(model, {3, 10}, LsgConfig{}), Error);
}

TEST(Model, ShapeValidation) {
    ModelShape s = small_shape();
    s.n_heads = 3;
    EXPECT_THROW(s.validate(), Error);
    s.n_heads = 2;
    s.d_ff = 0;
    EXPECT_THROW(s.validate(), Error);
}

// ---------------------------------------------------------------------------
// Gradients and training
// ---------------------------------------------------------------------------

TEST(GradCheck, ReferenceTinyConfiguration) {
    auto fx = testing::grad_check_fixture();
    auto result = grad_check(fx.model, fx.example, fx.lsg, 1e-5, 200, 0);
    EXPECT_EQ(result.checks.size(), 200u);
    EXPECT_LT(result.max_relative_error, 1e-4);
}

TEST(GradCheck, CoversEveryParameterGroupWhenSamplingAll) {
    auto fx = testing::grad_check_fixture();
    const std::size_t all = parameter_count(fx.model);
    auto result = grad_check(fx.model, fx.example, fx.lsg, 1e-5, all + 50, 1);
    EXPECT_EQ(result.checks.size(), all);
    EXPECT_LT(result.max_relative_error, 1e-4);
}

TEST(Training, ZeroLearningRateLeavesParametersUntouched) {
    auto fx = testing::memorization_fixture();
    TrainConfig tc = fx.train;
    tc.initial_lr = 0.0;
    tc.epochs = 1;
    auto model = init_model(fx.shape, 4);
    auto before = model;
    train(model, fx.examples, tc, fx.lsg);
    EXPECT_TRUE(bitwise_equal(model, before));
}

TEST(Training, EmptyTrainingSet) {
    auto model = init_model(small_shape(), 0);
    try {
        train(model, std::vector<Example>{}, TrainConfig{}, LsgConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyTrainingSet);
    }
}

TEST(Training, DivergenceNamesTheEpoch) {
    auto fx = testing::memorization_fixture();
    auto model = init_model(fx.shape, 4);
    model.w_out(0, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
        train(model, fx.examples, fx.train, fx.lsg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonFiniteLoss);
        EXPECT_EQ(e.subject(), "1");
    }
}

TEST(Training, SameSeedIsBitReproducible) {
    auto fx = testing::memorization_fixture();
    TrainConfig tc = fx.train;
    tc.epochs = 3;
    auto a = init_model(fx.shape, 11);
    auto b = init_model(fx.shape, 11);
    auto ra = train(a, fx.examples, tc, fx.lsg);
    auto rb = train(b, fx.examples, tc, fx.lsg);
    EXPECT_TRUE(bitwise_equal(a, b));
    EXPECT_EQ(ra.loss_history, rb.loss_history);
}

TEST(Training, MemorizesEightPairs) {
    auto fx = testing::memorization_fixture();
    auto model = init_model(fx.shape, fx.train.seed);
    auto result = train(model, fx.examples, fx.train, fx.lsg);
    ASSERT_EQ(result.loss_history.size(), fx.train.epochs);
    for (double l : result.loss_history) {
        ASSERT_TRUE(std::isfinite(l));
    }
    EXPECT_LE(*std::min_element(result.loss_history.begin(), result.loss_history.end()), result.loss_history.front());
    EXPECT_LT(result.loss_history.back(), 0.1);
    for (const auto& ex : fx.examples) {
        EXPECT_EQ(generate(model, ex.src, ex.tgt.size() + 4, fx.lsg), ex.tgt);
    }
}

TEST(Generate, StopsAtLengthLimit) {
    auto model = init_model(small_shape(), 3);
    auto out = generate(model, {5, 6, 7}, 4, LsgConfig{});
    EXPECT_LE(out.size(), 4u);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

TEST(Checkpoint, RoundTripIsBitExact) {
    Checkpoint ckpt{init_model(small_shape(9), 21), Vocab::build({"alpha beta gamma delta"}), LsgConfig{4, 2, 1, 64, 1}};
    auto bytes = serialize_checkpoint(ckpt);
    auto back = parse_checkpoint(bytes);
    EXPECT_TRUE(bitwise_equal(ckpt.model, back.model));
    EXPECT_EQ(ckpt.vocab, back.vocab);
    EXPECT_EQ(ckpt.lsg, back.lsg);
    EXPECT_EQ(serialize_checkpoint(back), bytes);

    auto path = std::filesystem::temp_directory_path() / "chartsum_ckpt_test.bin";
    save_checkpoint(ckpt, path);
    EXPECT_TRUE(bitwise_equal(load_checkpoint(path).model, ckpt.model));
    std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptFilesAreRejected) {
    Checkpoint ckpt{init_model(small_shape(9), 21), Vocab::build({"alpha beta gamma delta"}), LsgConfig{}};
    auto bytes = serialize_checkpoint(ckpt);
    auto expect_malformed = [](const std::string& b) {
        try {
            parse_checkpoint(b);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::MalformedFile);
        }
    };
    expect_malformed("nope");
    expect_malformed(bytes.substr(0, bytes.size() - 3));
    expect_malformed(bytes + "x");
    auto bad_version = bytes;
    bad_version[8] = 9;
    expect_malformed(bad_version);
}

}  // namespace
}  // namespace chartsum::tinylsg
