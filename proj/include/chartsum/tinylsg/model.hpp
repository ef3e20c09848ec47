#pragma once

#include "chartsum/tinylsg/attention.hpp"
#include "chartsum/tinylsg/vocab.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace chartsum::tinylsg {

struct ModelShape {
    std::size_t vocab_size = 0;
    std::size_t d_model = 64;
    std::size_t n_heads = 2;
    std::size_t n_encoder_layers = 2;
    std::size_t n_decoder_layers = 2;
    std::size_t d_ff = 128;

    /// Throws DimensionMismatch unless d_model % n_heads == 0 and every size is positive.
    void validate() const;
    friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

// Row vectors (gains, biases) are stored as 1 x n matrices so every
// parameter is the same type.
struct LayerNormParams {
    Matrix gain;
    Matrix bias;
};

struct AttentionParams {
    Matrix wq, wk, wv, wo;
};

struct FeedForwardParams {
    Matrix w1, b1, w2, b2;
};

struct EncoderLayerParams {
    LayerNormParams norm1;
    AttentionParams self_attn;
    LayerNormParams norm2;
    FeedForwardParams ffn;
};

struct DecoderLayerParams {
    LayerNormParams norm1;
    AttentionParams self_attn;
    LayerNormParams norm2;
    AttentionParams cross_attn;
    LayerNormParams norm3;
    FeedForwardParams ffn;
};

/// Pre-norm encoder-decoder with shared input embeddings, sinusoidal
/// positions, tanh-GELU feed-forward blocks and an untied output projection.
struct TinyModel {
    ModelShape shape;
    Matrix embedding;  // vocab x d_model
    std::vector<EncoderLayerParams> encoder;
    LayerNormParams encoder_norm;
    std::vector<DecoderLayerParams> decoder;
    LayerNormParams decoder_norm;
    Matrix w_out;  // d_model x vocab
    Matrix b_out;  // 1 x vocab
};

struct ParamRef {
    std::string name;
    Matrix* value;
};
struct ConstParamRef {
    std::string name;
    const Matrix* value;
};

/// Every parameter tensor in a fixed order (used by the optimizer,
/// checkpoints and gradient checks).
std::vector<ParamRef> parameters(TinyModel& model);
std::vector<ConstParamRef> parameters(const TinyModel& model);
std::size_t parameter_count(const TinyModel& model);

TinyModel init_model(const ModelShape& shape, std::uint64_t seed);
/// Same shapes as `model`, all zeros.
TinyModel zeros_like(const TinyModel& model);
bool bitwise_equal(const TinyModel& a, const TinyModel& b);

Matrix sinusoidal_positions(std::size_t length, std::size_t d_model);

/// Source ids with the global tokens prepended.
std::vector<TokenId> with_globals(const std::vector<TokenId>& src, const LsgConfig& cfg);

/// Encoder output after the final norm; rows = num_global + len(src).
Matrix encode(const TinyModel& model, const std::vector<TokenId>& src, const LsgConfig& cfg);

/// Decoder logits for `tgt_prefix` given an encoder output.
Matrix decode(const TinyModel& model, const Matrix& encoder_out, const std::vector<TokenId>& tgt_prefix);

/// Logits of shape (len(tgt_prefix), vocab_size).
Matrix forward(const TinyModel& model, const std::vector<TokenId>& src, const std::vector<TokenId>& tgt_prefix,
               const LsgConfig& cfg);

/// A teacher-forced training example; `tgt` excludes BOS/EOS.
struct Example {
    std::vector<TokenId> src;
    std::vector<TokenId> tgt;
};

/// Decoder input ([BOS] + tgt) and labels (tgt + [EOS]).
std::vector<TokenId> decoder_input(const Example& ex);
std::vector<TokenId> decoder_labels(const Example& ex);

/// Summed token cross-entropy of `ex`. When `grad` is non-null, adds
/// `scale` times the gradient of that sum into it.
double accumulate_gradient(const TinyModel& model, const Example& ex, const LsgConfig& cfg, TinyModel* grad,
                           double scale);

/// Mean token cross-entropy of `ex`.
double example_loss(const TinyModel& model, const Example& ex, const LsgConfig& cfg);

}  // namespace chartsum::tinylsg
