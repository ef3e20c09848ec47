#include "chartsum/tinylsg/model.hpp"

#include "chartsum/error.hpp"
#include "chartsum/util.hpp"

#include <cmath>
#include <cstring>

namespace chartsum::tinylsg {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

// ---------------------------------------------------------------------------
// Layer primitives with explicit caches for the backward pass.
// ---------------------------------------------------------------------------

struct NormCache {
    Matrix xhat;
    Eigen::VectorXd inv_std;
};

Matrix norm_forward(const Matrix& x, const LayerNormParams& p, NormCache* cache) {
    Matrix xhat(x.rows(), x.cols());
    Eigen::VectorXd inv_std(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mu = x.row(r).mean();
        Eigen::RowVectorXd centered = x.row(r).array() - mu;
        const double var = centered.squaredNorm() / static_cast<double>(x.cols());
        inv_std(r) = 1.0 / std::sqrt(var + kNormEps);
        xhat.row(r) = centered * inv_std(r);
    }
    Matrix y = (xhat.array().rowwise() * p.gain.row(0).array()).rowwise() + p.bias.row(0).array();
    if (cache != nullptr) {
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return y;
}

Matrix norm_backward(const Matrix& dy, const LayerNormParams& p, const NormCache& c, LayerNormParams& g) {
    g.gain += dy.cwiseProduct(c.xhat).colwise().sum();
    g.bias += dy.colwise().sum();
    Matrix dxhat = dy.array().rowwise() * p.gain.row(0).array();
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double mean_d = dxhat.row(r).mean();
        const double mean_dx = dxhat.row(r).cwiseProduct(c.xhat.row(r)).mean();
        dx.row(r) = c.inv_std(r) * (dxhat.row(r).array() - mean_d - c.xhat.row(r).array() * mean_dx);
    }
    return dx;
}

struct AttnCache {
    Matrix xq, xkv, q, k, v, context;
    std::vector<Matrix> probs;
};

Matrix attn_forward(const Matrix& xq, const Matrix& xkv, const AttentionParams& p, const AttentionMask& mask,
                    std::size_t heads, AttnCache* cache) {
    Matrix q = xq * p.wq;
    Matrix k = xkv * p.wk;
    Matrix v = xkv * p.wv;
    const auto dh = static_cast<Eigen::Index>(static_cast<std::size_t>(q.cols()) / heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Matrix context(xq.rows(), q.cols());
    std::vector<Matrix> all_probs;
    for (std::size_t h = 0; h < heads; ++h) {
        const auto off = static_cast<Eigen::Index>(h) * dh;
        Matrix scores = (q.middleCols(off, dh) * k.middleCols(off, dh).transpose()) * scale;
        Matrix probs = masked_softmax(scores, mask);
        context.middleCols(off, dh) = probs * v.middleCols(off, dh);
        if (cache != nullptr) {
            all_probs.push_back(std::move(probs));
        }
    }
    Matrix y = context * p.wo;
    if (cache != nullptr) {
        cache->xq = xq;
        cache->xkv = xkv;
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->context = std::move(context);
        cache->probs = std::move(all_probs);
    }
    return y;
}

void attn_backward(const Matrix& dy, const AttentionParams& p, const AttnCache& c, std::size_t heads,
                   AttentionParams& g, Matrix& dxq, Matrix& dxkv) {
    g.wo += c.context.transpose() * dy;
    Matrix dcontext = dy * p.wo.transpose();
    Matrix dq(c.q.rows(), c.q.cols());
    Matrix dk(c.k.rows(), c.k.cols());
    Matrix dv(c.v.rows(), c.v.cols());
    const auto dh = static_cast<Eigen::Index>(static_cast<std::size_t>(c.q.cols()) / heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t h = 0; h < heads; ++h) {
        const auto off = static_cast<Eigen::Index>(h) * dh;
        const Matrix& probs = c.probs[h];
        Matrix dctx_h = dcontext.middleCols(off, dh);
        dv.middleCols(off, dh) = probs.transpose() * dctx_h;
        Matrix dprobs = dctx_h * c.v.middleCols(off, dh).transpose();
        Eigen::VectorXd row_dot = probs.cwiseProduct(dprobs).rowwise().sum();
        Matrix dscores = probs.cwiseProduct(dprobs.colwise() - row_dot);
        dq.middleCols(off, dh) = (dscores * c.k.middleCols(off, dh)) * scale;
        dk.middleCols(off, dh) = (dscores.transpose() * c.q.middleCols(off, dh)) * scale;
    }
    g.wq += c.xq.transpose() * dq;
    g.wk += c.xkv.transpose() * dk;
    g.wv += c.xkv.transpose() * dv;
    dxq = dq * p.wq.transpose();
    dxkv = dk * p.wk.transpose() + dv * p.wv.transpose();
}

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x))); }

double gelu_grad(double x) {
    const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

struct FfCache {
    Matrix x, pre, act;
};

Matrix ff_forward(const Matrix& x, const FeedForwardParams& p, FfCache* cache) {
    Matrix pre = (x * p.w1).rowwise() + p.b1.row(0);
    Matrix act = pre.unaryExpr([](double v) { return gelu(v); });
    Matrix y = (act * p.w2).rowwise() + p.b2.row(0);
    if (cache != nullptr) {
        cache->x = x;
        cache->pre = std::move(pre);
        cache->act = std::move(act);
    }
    return y;
}

Matrix ff_backward(const Matrix& dy, const FeedForwardParams& p, const FfCache& c, FeedForwardParams& g) {
    g.w2 += c.act.transpose() * dy;
    g.b2 += dy.colwise().sum();
    Matrix dact = dy * p.w2.transpose();
    Matrix dpre = dact.cwiseProduct(c.pre.unaryExpr([](double v) { return gelu_grad(v); }));
    g.w1 += c.x.transpose() * dpre;
    g.b1 += dpre.colwise().sum();
    return dpre * p.w1.transpose();
}

// ---------------------------------------------------------------------------
// Stacks
// ---------------------------------------------------------------------------

struct EncoderLayerCache {
    NormCache n1;
    AttnCache attn;
    NormCache n2;
    FfCache ff;
};

struct DecoderLayerCache {
    NormCache n1;
    AttnCache self_attn;
    NormCache n2;
    AttnCache cross_attn;
    NormCache n3;
    FfCache ff;
};

struct ForwardCache {
    std::vector<TokenId> src_ids;
    std::vector<TokenId> tgt_ids;
    std::vector<EncoderLayerCache> enc;
    NormCache enc_norm;
    Matrix enc_out;
    std::vector<DecoderLayerCache> dec;
    NormCache dec_norm;
    Matrix dec_out;
};

void check_ids(const TinyModel& model, const std::vector<TokenId>& ids) {
    for (auto id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= model.shape.vocab_size) {
            throw Error(ErrorKind::DimensionMismatch,
                        "token id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(model.shape.vocab_size));
        }
    }
}

Matrix embed(const TinyModel& model, const std::vector<TokenId>& ids) {
    Matrix x = sinusoidal_positions(ids.size(), model.shape.d_model);
    for (std::size_t t = 0; t < ids.size(); ++t) {
        x.row(static_cast<Eigen::Index>(t)) += model.embedding.row(ids[t]);
    }
    return x;
}

void embed_backward(const std::vector<TokenId>& ids, const Matrix& dx, Matrix& g_embedding) {
    for (std::size_t t = 0; t < ids.size(); ++t) {
        g_embedding.row(ids[t]) += dx.row(static_cast<Eigen::Index>(t));
    }
}

Matrix run_encoder(const TinyModel& model, const std::vector<TokenId>& ids, const AttentionMask& mask,
                   ForwardCache* cache) {
    Matrix x = embed(model, ids);
    if (cache != nullptr) {
        cache->enc.resize(model.encoder.size());
    }
    for (std::size_t l = 0; l < model.encoder.size(); ++l) {
        const auto& layer = model.encoder[l];
        EncoderLayerCache* lc = cache != nullptr ? &cache->enc[l] : nullptr;
        Matrix n1 = norm_forward(x, layer.norm1, lc ? &lc->n1 : nullptr);
        x += attn_forward(n1, n1, layer.self_attn, mask, model.shape.n_heads, lc ? &lc->attn : nullptr);
        Matrix n2 = norm_forward(x, layer.norm2, lc ? &lc->n2 : nullptr);
        x += ff_forward(n2, layer.ffn, lc ? &lc->ff : nullptr);
    }
    return norm_forward(x, model.encoder_norm, cache ? &cache->enc_norm : nullptr);
}

Matrix run_decoder(const TinyModel& model, const Matrix& enc_out, const std::vector<TokenId>& ids,
                   ForwardCache* cache) {
    const AttentionMask self_mask = causal_mask(ids.size());
    const AttentionMask cross_mask = full_mask(ids.size(), static_cast<std::size_t>(enc_out.rows()));
    Matrix y = embed(model, ids);
    if (cache != nullptr) {
        cache->dec.resize(model.decoder.size());
    }
    for (std::size_t l = 0; l < model.decoder.size(); ++l) {
        const auto& layer = model.decoder[l];
        DecoderLayerCache* lc = cache != nullptr ? &cache->dec[l] : nullptr;
        Matrix n1 = norm_forward(y, layer.norm1, lc ? &lc->n1 : nullptr);
        y += attn_forward(n1, n1, layer.self_attn, self_mask, model.shape.n_heads, lc ? &lc->self_attn : nullptr);
        Matrix n2 = norm_forward(y, layer.norm2, lc ? &lc->n2 : nullptr);
        y += attn_forward(n2, enc_out, layer.cross_attn, cross_mask, model.shape.n_heads,
                          lc ? &lc->cross_attn : nullptr);
        Matrix n3 = norm_forward(y, layer.norm3, lc ? &lc->n3 : nullptr);
        y += ff_forward(n3, layer.ffn, lc ? &lc->ff : nullptr);
    }
    return norm_forward(y, model.decoder_norm, cache ? &cache->dec_norm : nullptr);
}

Matrix project(const TinyModel& model, const Matrix& h) { return (h * model.w_out).rowwise() + model.b_out.row(0); }

void check_source(const TinyModel& model, const std::vector<TokenId>& src, const LsgConfig& cfg) {
    if (src.size() > cfg.max_input_tokens) {
        throw Error(ErrorKind::SequenceTooLong,
                    "source has " + std::to_string(src.size()) + " tokens, limit is " +
                        std::to_string(cfg.max_input_tokens));
    }
    if (src.empty() && cfg.num_global == 0) {
        throw Error(ErrorKind::DimensionMismatch, "empty source with no global tokens");
    }
    check_ids(model, src);
}

void backward(const TinyModel& model, ForwardCache& c, const Matrix& dlogits, TinyModel& g) {
    g.w_out += c.dec_out.transpose() * dlogits;
    g.b_out += dlogits.colwise().sum();
    Matrix dy = norm_backward(dlogits * model.w_out.transpose(), model.decoder_norm, c.dec_norm, g.decoder_norm);
    Matrix denc = Matrix::Zero(c.enc_out.rows(), c.enc_out.cols());

    for (std::size_t l = model.decoder.size(); l-- > 0;) {
        const auto& layer = model.decoder[l];
        auto& gl = g.decoder[l];
        auto& lc = c.dec[l];
        Matrix dn3 = ff_backward(dy, layer.ffn, lc.ff, gl.ffn);
        dy += norm_backward(dn3, layer.norm3, lc.n3, gl.norm3);

        Matrix dxq, dxkv;
        attn_backward(dy, layer.cross_attn, lc.cross_attn, model.shape.n_heads, gl.cross_attn, dxq, dxkv);
        denc += dxkv;
        dy += norm_backward(dxq, layer.norm2, lc.n2, gl.norm2);

        attn_backward(dy, layer.self_attn, lc.self_attn, model.shape.n_heads, gl.self_attn, dxq, dxkv);
        dy += norm_backward(dxq + dxkv, layer.norm1, lc.n1, gl.norm1);
    }
    embed_backward(c.tgt_ids, dy, g.embedding);

    Matrix dx = norm_backward(denc, model.encoder_norm, c.enc_norm, g.encoder_norm);
    for (std::size_t l = model.encoder.size(); l-- > 0;) {
        const auto& layer = model.encoder[l];
        auto& gl = g.encoder[l];
        auto& lc = c.enc[l];
        Matrix dn2 = ff_backward(dx, layer.ffn, lc.ff, gl.ffn);
        dx += norm_backward(dn2, layer.norm2, lc.n2, gl.norm2);
        Matrix dxq, dxkv;
        attn_backward(dx, layer.self_attn, lc.attn, model.shape.n_heads, gl.self_attn, dxq, dxkv);
        dx += norm_backward(dxq + dxkv, layer.norm1, lc.n1, gl.norm1);
    }
    embed_backward(c.src_ids, dx, g.embedding);
}

template <class Model, class Ref>
std::vector<Ref> collect(Model& m) {
    std::vector<Ref> out;
    auto add = [&](std::string name, auto& mat) { out.push_back(Ref{std::move(name), &mat}); };
    auto add_norm = [&](const std::string& prefix, auto& n) {
        add(prefix + ".gain", n.gain);
        add(prefix + ".bias", n.bias);
    };
    auto add_attn = [&](const std::string& prefix, auto& a) {
        add(prefix + ".wq", a.wq);
        add(prefix + ".wk", a.wk);
        add(prefix + ".wv", a.wv);
        add(prefix + ".wo", a.wo);
    };
    auto add_ffn = [&](const std::string& prefix, auto& f) {
        add(prefix + ".w1", f.w1);
        add(prefix + ".b1", f.b1);
        add(prefix + ".w2", f.w2);
        add(prefix + ".b2", f.b2);
    };
    add("embedding", m.embedding);
    for (std::size_t l = 0; l < m.encoder.size(); ++l) {
        const std::string p = "encoder." + std::to_string(l);
        add_norm(p + ".norm1", m.encoder[l].norm1);
        add_attn(p + ".self_attn", m.encoder[l].self_attn);
        add_norm(p + ".norm2", m.encoder[l].norm2);
        add_ffn(p + ".ffn", m.encoder[l].ffn);
    }
    add_norm("encoder_norm", m.encoder_norm);
    for (std::size_t l = 0; l < m.decoder.size(); ++l) {
        const std::string p = "decoder." + std::to_string(l);
        add_norm(p + ".norm1", m.decoder[l].norm1);
        add_attn(p + ".self_attn", m.decoder[l].self_attn);
        add_norm(p + ".norm2", m.decoder[l].norm2);
        add_attn(p + ".cross_attn", m.decoder[l].cross_attn);
        add_norm(p + ".norm3", m.decoder[l].norm3);
        add_ffn(p + ".ffn", m.decoder[l].ffn);
    }
    add_norm("decoder_norm", m.decoder_norm);
    add("w_out", m.w_out);
    add("b_out", m.b_out);
    return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void ModelShape::validate() const {
    if (vocab_size == 0 || d_model == 0 || n_heads == 0 || d_ff == 0 || n_encoder_layers == 0 ||
        n_decoder_layers == 0) {
        throw Error(ErrorKind::DimensionMismatch, "model dimensions must be positive");
    }
    if (d_model % n_heads != 0) {
        throw Error(ErrorKind::DimensionMismatch,
                    "d_model " + std::to_string(d_model) + " is not divisible by n_heads " + std::to_string(n_heads));
    }
}

std::vector<ParamRef> parameters(TinyModel& model) { return collect<TinyModel, ParamRef>(model); }

std::vector<ConstParamRef> parameters(const TinyModel& model) {
    return collect<const TinyModel, ConstParamRef>(model);
}

std::size_t parameter_count(const TinyModel& model) {
    std::size_t n = 0;
    for (const auto& p : parameters(model)) {
        n += static_cast<std::size_t>(p.value->size());
    }
    return n;
}

TinyModel zeros_like(const TinyModel& model) {
    TinyModel z = model;
    for (auto& p : parameters(z)) {
        p.value->setZero();
    }
    return z;
}

bool bitwise_equal(const TinyModel& a, const TinyModel& b) {
    if (!(a.shape == b.shape)) {
        return false;
    }
    auto pa = parameters(a);
    auto pb = parameters(b);
    if (pa.size() != pb.size()) {
        return false;
    }
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const Matrix& x = *pa[i].value;
        const Matrix& y = *pb[i].value;
        if (x.rows() != y.rows() || x.cols() != y.cols() ||
            std::memcmp(x.data(), y.data(), static_cast<std::size_t>(x.size()) * sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

TinyModel init_model(const ModelShape& shape, std::uint64_t seed) {
    shape.validate();
    const auto d = static_cast<Eigen::Index>(shape.d_model);
    const auto v = static_cast<Eigen::Index>(shape.vocab_size);
    const auto f = static_cast<Eigen::Index>(shape.d_ff);
    auto norm = [&] { return LayerNormParams{Matrix::Ones(1, d), Matrix::Zero(1, d)}; };
    auto attn = [&] { return AttentionParams{Matrix(d, d), Matrix(d, d), Matrix(d, d), Matrix(d, d)}; };
    auto ffn = [&] { return FeedForwardParams{Matrix(d, f), Matrix::Zero(1, f), Matrix(f, d), Matrix::Zero(1, d)}; };

    TinyModel m;
    m.shape = shape;
    m.embedding = Matrix(v, d);
    for (std::size_t l = 0; l < shape.n_encoder_layers; ++l) {
        m.encoder.push_back(EncoderLayerParams{norm(), attn(), norm(), ffn()});
    }
    m.encoder_norm = norm();
    for (std::size_t l = 0; l < shape.n_decoder_layers; ++l) {
        m.decoder.push_back(DecoderLayerParams{norm(), attn(), norm(), attn(), norm(), ffn()});
    }
    m.decoder_norm = norm();
    m.w_out = Matrix(d, v);
    m.b_out = Matrix::Zero(1, v);

    Rng rng(seed);
    for (auto& p : parameters(m)) {
        const auto& name = p.name;
        Matrix& w = *p.value;
        if (ends_with(name, ".gain") || ends_with(name, ".bias") || ends_with(name, ".b1") ||
            ends_with(name, ".b2") || name == "b_out") {
            continue;
        }
        // Embeddings get unit-range entries so token identity is not
        // drowned by the positional signal; weights use Xavier-uniform.
        const double a = name == "embedding" ? 1.0 : std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                w(r, c) = (2.0 * uniform01(rng) - 1.0) * a;
            }
        }
    }
    return m;
}

Matrix sinusoidal_positions(std::size_t length, std::size_t d_model) {
    Matrix pe(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(d_model));
    for (std::size_t pos = 0; pos < length; ++pos) {
        for (std::size_t i = 0; i < d_model; ++i) {
            const double rate =
                std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model));
            const double angle = static_cast<double>(pos) * rate;
            pe(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i)) =
                (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

std::vector<TokenId> with_globals(const std::vector<TokenId>& src, const LsgConfig& cfg) {
    std::vector<TokenId> ids(cfg.num_global, Vocab::kGlobal);
    ids.insert(ids.end(), src.begin(), src.end());
    return ids;
}

Matrix encode(const TinyModel& model, const std::vector<TokenId>& src, const LsgConfig& cfg) {
    check_source(model, src, cfg);
    auto ids = with_globals(src, cfg);
    return run_encoder(model, ids, lsg_mask(ids.size(), cfg), nullptr);
}

Matrix decode(const TinyModel& model, const Matrix& encoder_out, const std::vector<TokenId>& tgt_prefix) {
    if (tgt_prefix.empty()) {
        throw Error(ErrorKind::DimensionMismatch, "decoder prefix is empty");
    }
    if (encoder_out.cols() != static_cast<Eigen::Index>(model.shape.d_model)) {
        throw Error(ErrorKind::DimensionMismatch, "encoder output width does not match d_model");
    }
    check_ids(model, tgt_prefix);
    return project(model, run_decoder(model, encoder_out, tgt_prefix, nullptr));
}

Matrix forward(const TinyModel& model, const std::vector<TokenId>& src, const std::vector<TokenId>& tgt_prefix,
               const LsgConfig& cfg) {
    return decode(model, encode(model, src, cfg), tgt_prefix);
}

std::vector<TokenId> decoder_input(const Example& ex) {
    std::vector<TokenId> ids{Vocab::kBos};
    ids.insert(ids.end(), ex.tgt.begin(), ex.tgt.end());
    return ids;
}

std::vector<TokenId> decoder_labels(const Example& ex) {
    std::vector<TokenId> ids(ex.tgt.begin(), ex.tgt.end());
    ids.push_back(Vocab::kEos);
    return ids;
}

double accumulate_gradient(const TinyModel& model, const Example& ex, const LsgConfig& cfg, TinyModel* grad,
                           double scale) {
    check_source(model, ex.src, cfg);
    ForwardCache cache;
    cache.src_ids = with_globals(ex.src, cfg);
    cache.tgt_ids = decoder_input(ex);
    const auto labels = decoder_labels(ex);
    check_ids(model, cache.tgt_ids);
    check_ids(model, labels);

    ForwardCache* c = grad != nullptr ? &cache : nullptr;
    Matrix enc_out = run_encoder(model, cache.src_ids, lsg_mask(cache.src_ids.size(), cfg), c);
    Matrix dec_out = run_decoder(model, enc_out, cache.tgt_ids, c);
    Matrix logits = project(model, dec_out);

    double loss = 0.0;
    Matrix dlogits(logits.rows(), logits.cols());
    for (Eigen::Index t = 0; t < logits.rows(); ++t) {
        const double max_logit = logits.row(t).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(t).array() - max_logit).exp();
        const double total = e.sum();
        const auto label = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(t)]);
        loss += max_logit + std::log(total) - logits(t, label);
        dlogits.row(t) = e / total;
        dlogits(t, label) -= 1.0;
    }

    if (grad != nullptr) {
        cache.enc_out = std::move(enc_out);
        cache.dec_out = std::move(dec_out);
        dlogits *= scale;
        backward(model, cache, dlogits, *grad);
    }
    return loss;
}

double example_loss(const TinyModel& model, const Example& ex, const LsgConfig& cfg) {
    return accumulate_gradient(model, ex, cfg, nullptr, 1.0) / static_cast<double>(ex.tgt.size() + 1);
}

}  // namespace chartsum::tinylsg
