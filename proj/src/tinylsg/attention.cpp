#include "chartsum/tinylsg/attention.hpp"

#include "chartsum/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace chartsum::tinylsg {

void LsgConfig::validate() const {
    if (block_size < 1) {
        throw Error(ErrorKind::InvalidArgument, "block_size must be >= 1", "block_size");
    }
    if (max_input_tokens < block_size) {
        throw Error(ErrorKind::InvalidArgument, "max_input_tokens must be >= block_size", "max_input_tokens");
    }
}

std::size_t AttentionMask::allowed_count() const noexcept {
    return static_cast<std::size_t>(std::count(allow_.begin(), allow_.end(), std::uint8_t{1}));
}

double AttentionMask::density() const noexcept {
    return allow_.empty() ? 0.0 : static_cast<double>(allowed_count()) / static_cast<double>(allow_.size());
}

std::string AttentionMask::render() const {
    std::string out;
    out.reserve(rows_ * (cols_ + 1));
    for (std::size_t q = 0; q < rows_; ++q) {
        for (std::size_t k = 0; k < cols_; ++k) {
            out += (*this)(q, k) ? '#' : '.';
        }
        out += '\n';
    }
    return out;
}

AttentionMask lsg_mask(std::size_t seq_len, const LsgConfig& cfg) {
    if (cfg.block_size < 1) {
        throw Error(ErrorKind::InvalidArgument, "block_size must be >= 1", "block_size");
    }
    AttentionMask mask(seq_len, seq_len);
    const std::size_t g = cfg.num_global;
    for (std::size_t q = 0; q < seq_len; ++q) {
        const std::size_t qb = q / cfg.block_size;
        for (std::size_t k = 0; k < seq_len; ++k) {
            const std::size_t kb = k / cfg.block_size;
            const std::size_t gap = qb > kb ? qb - kb : kb - qb;
            bool allowed = gap <= cfg.local_radius;
            allowed = allowed || (cfg.sparsity_stride > 0 && k >= g && (k - g) % cfg.sparsity_stride == 0);
            allowed = allowed || q < g || k < g;
            mask.set(q, k, allowed);
        }
    }
    return mask;
}

AttentionMask causal_mask(std::size_t len) {
    AttentionMask mask(len, len);
    for (std::size_t q = 0; q < len; ++q) {
        for (std::size_t k = 0; k <= q; ++k) {
            mask.set(q, k, true);
        }
    }
    return mask;
}

AttentionMask full_mask(std::size_t rows, std::size_t cols) { return AttentionMask(rows, cols, true); }

Matrix masked_softmax(const Matrix& scores, const AttentionMask& mask) {
    if (static_cast<std::size_t>(scores.rows()) != mask.rows() || static_cast<std::size_t>(scores.cols()) != mask.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "mask shape does not match score matrix");
    }
    Matrix probs = Matrix::Zero(scores.rows(), scores.cols());
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        double max_score = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            if (mask(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) {
                max_score = std::max(max_score, scores(r, c));
            }
        }
        if (max_score == -std::numeric_limits<double>::infinity()) {
            throw Error(ErrorKind::InvalidArgument, "attention row " + std::to_string(r) + " has no allowed key");
        }
        double total = 0.0;
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            if (mask(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) {
                double e = std::exp(scores(r, c) - max_score);
                probs(r, c) = e;
                total += e;
            }
        }
        probs.row(r) /= total;
    }
    return probs;
}

Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionMask& mask) {
    if (q.cols() != k.cols() || k.rows() != v.rows() || static_cast<std::size_t>(q.rows()) != mask.rows() ||
        static_cast<std::size_t>(k.rows()) != mask.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "attention operands have inconsistent shapes");
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Matrix scores = (q * k.transpose()) * scale;
    return masked_softmax(scores, mask) * v;
}

}  // namespace chartsum::tinylsg
