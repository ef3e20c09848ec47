#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace chartsum::testing {

using tinylsg::Matrix;

std::size_t brute_ngram_overlap(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                                std::size_t n) {
    auto grams = [n](const std::vector<std::string>& toks) {
        std::vector<std::vector<std::string>> out;
        for (std::size_t i = 0; i + n <= toks.size(); ++i) {
            out.emplace_back(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i + n));
        }
        return out;
    };
    const auto c = grams(cand);
    const auto r = grams(ref);
    std::vector<bool> used(r.size(), false);
    std::size_t matched = 0;
    for (const auto& g : c) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (!used[j] && r[j] == g) {
                used[j] = true;
                ++matched;
                break;
            }
        }
    }
    return matched;
}

std::size_t brute_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::size_t best = 0;
    const std::size_t subsets = std::size_t{1} << a.size();
    for (std::size_t mask = 0; mask < subsets; ++mask) {
        std::vector<const std::string*> pick;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (mask & (std::size_t{1} << i)) {
                pick.push_back(&a[i]);
            }
        }
        if (pick.size() <= best) {
            continue;
        }
        std::size_t j = 0;
        for (const auto& tok : b) {
            if (j < pick.size() && *pick[j] == tok) {
                ++j;
            }
        }
        if (j == pick.size()) {
            best = pick.size();
        }
    }
    return best;
}

bool local_allowed(std::size_t q, std::size_t k, const tinylsg::LsgConfig& cfg) {
    // Window of q: from the start of the block `radius` blocks before q's
    // block to the end of the block `radius` blocks after it.
    const std::size_t qb = q / cfg.block_size;
    const std::size_t first_block = qb >= cfg.local_radius ? qb - cfg.local_radius : 0;
    const std::size_t lo = first_block * cfg.block_size;
    const std::size_t hi = (qb + cfg.local_radius + 1) * cfg.block_size;
    return k >= lo && k < hi;
}

bool sparse_allowed(std::size_t, std::size_t k, const tinylsg::LsgConfig& cfg) {
    if (cfg.sparsity_stride == 0 || k < cfg.num_global) {
        return false;
    }
    for (std::size_t p = cfg.num_global; p <= k; p += cfg.sparsity_stride) {
        if (p == k) {
            return true;
        }
    }
    return false;
}

bool global_allowed(std::size_t q, std::size_t k, const tinylsg::LsgConfig& cfg) {
    return q < cfg.num_global || k < cfg.num_global;
}

namespace {

using Rows = std::vector<std::vector<double>>;

Rows matmul(const Rows& x, const Matrix& w) {
    Rows out(x.size(), std::vector<double>(static_cast<std::size_t>(w.cols()), 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < x[i].size(); ++k) {
                s += x[i][k] * w(static_cast<Eigen::Index>(k), j);
            }
            out[i][static_cast<std::size_t>(j)] = s;
        }
    }
    return out;
}

Rows layer_norm(const Rows& x, const Matrix& gain, const Matrix& bias) {
    Rows out = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double n = static_cast<double>(x[i].size());
        double mean = 0.0;
        for (double v : x[i]) {
            mean += v;
        }
        mean /= n;
        double var = 0.0;
        for (double v : x[i]) {
            var += (v - mean) * (v - mean);
        }
        var /= n;
        const double denom = std::sqrt(var + 1e-5);
        for (std::size_t j = 0; j < x[i].size(); ++j) {
            out[i][j] = (x[i][j] - mean) / denom * gain(0, static_cast<Eigen::Index>(j)) +
                        bias(0, static_cast<Eigen::Index>(j));
        }
    }
    return out;
}

Rows self_attention(const Rows& x, const tinylsg::AttentionParams& p, std::size_t heads) {
    const Rows q = matmul(x, p.wq);
    const Rows k = matmul(x, p.wk);
    const Rows v = matmul(x, p.wv);
    const std::size_t d = q.front().size();
    const std::size_t dh = d / heads;
    const std::size_t n = x.size();
    Rows ctx(n, std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> score(n);
            double top = -1e300;
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
                    s += q[i][c] * k[j][c];
                }
                score[j] = s / std::sqrt(static_cast<double>(dh));
                top = std::max(top, score[j]);
            }
            double z = 0.0;
            for (auto& s : score) {
                s = std::exp(s - top);
                z += s;
            }
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
                    ctx[i][c] += score[j] / z * v[j][c];
                }
            }
        }
    }
    return matmul(ctx, p.wo);
}

Rows feed_forward(const Rows& x, const tinylsg::FeedForwardParams& p) {
    Rows h = matmul(x, p.w1);
    for (auto& row : h) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double u = row[j] + p.b1(0, static_cast<Eigen::Index>(j));
            row[j] = 0.5 * u * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (u + 0.044715 * u * u * u)));
        }
    }
    Rows y = matmul(h, p.w2);
    for (auto& row : y) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] += p.b2(0, static_cast<Eigen::Index>(j));
        }
    }
    return y;
}

void add_into(Rows& x, const Rows& y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < x[i].size(); ++j) {
            x[i][j] += y[i][j];
        }
    }
}

}  // namespace

Matrix reference_encoder(const tinylsg::TinyModel& model, const std::vector<int>& ids) {
    const std::size_t d = model.shape.d_model;
    Rows x(ids.size(), std::vector<double>(d));
    for (std::size_t t = 0; t < ids.size(); ++t) {
        for (std::size_t j = 0; j < d; ++j) {
            const double freq = std::pow(10000.0, -static_cast<double>(j - j % 2) / static_cast<double>(d));
            const double pos = j % 2 == 0 ? std::sin(static_cast<double>(t) * freq) : std::cos(static_cast<double>(t) * freq);
            x[t][j] = model.embedding(ids[t], static_cast<Eigen::Index>(j)) + pos;
        }
    }
    for (const auto& layer : model.encoder) {
        add_into(x, self_attention(layer_norm(x, layer.norm1.gain, layer.norm1.bias), layer.self_attn,
                                   model.shape.n_heads));
        add_into(x, feed_forward(layer_norm(x, layer.norm2.gain, layer.norm2.bias), layer.ffn));
    }
    const Rows y = layer_norm(x, model.encoder_norm.gain, model.encoder_norm.bias);
    Matrix out(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y[i][j];
        }
    }
    return out;
}

}  // namespace chartsum::testing
