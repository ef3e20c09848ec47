#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace chartsum::tinylsg {

using Matrix = Eigen::MatrixXd;

/// Local-sparse-global attention layout for the encoder.
///
/// Positions [0, num_global) hold prepended global tokens. Local blocks are
/// aligned to absolute positions: position p lies in block p / block_size,
/// and a query sees its own block plus `local_radius` blocks on each side.
/// The sparse component links every query to keys whose offset from the
/// first non-global position is a multiple of sparsity_stride.
struct LsgConfig {
    std::size_t block_size = 16;
    std::size_t sparsity_stride = 4;  // 0 disables sparse links
    std::size_t num_global = 1;
    std::size_t max_input_tokens = 512;
    std::size_t local_radius = 1;

    /// Throws InvalidArgument on block_size == 0 or max_input_tokens < block_size.
    void validate() const;
    friend bool operator==(const LsgConfig&, const LsgConfig&) = default;
};

/// Row-major boolean allow matrix, indexed (query, key).
class AttentionMask {
public:
    AttentionMask() = default;
    AttentionMask(std::size_t rows, std::size_t cols, bool value = false)
        : rows_(rows), cols_(cols), allow_(rows * cols, value ? 1 : 0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool operator()(std::size_t q, std::size_t k) const { return allow_[q * cols_ + k] != 0; }
    void set(std::size_t q, std::size_t k, bool value) { allow_[q * cols_ + k] = value ? 1 : 0; }

    std::size_t allowed_count() const noexcept;
    /// Fraction of allowed (query, key) pairs.
    double density() const noexcept;
    bool all_allowed() const noexcept { return allowed_count() == allow_.size(); }

    /// One line per query: '#' allowed, '.' blocked.
    std::string render() const;

    friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> allow_;
};

AttentionMask lsg_mask(std::size_t seq_len, const LsgConfig& cfg);
AttentionMask causal_mask(std::size_t len);
AttentionMask full_mask(std::size_t rows, std::size_t cols);

/// Row softmax over allowed entries; blocked entries get exactly 0.
/// Throws InvalidArgument if a row has no allowed entry.
Matrix masked_softmax(const Matrix& scores, const AttentionMask& mask);

/// softmax(Q K^T / sqrt(d_k), masked) V.
Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionMask& mask);

}  // namespace chartsum::tinylsg
