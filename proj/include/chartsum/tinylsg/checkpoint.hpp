#pragma once

#include "chartsum/tinylsg/attention.hpp"
#include "chartsum/tinylsg/model.hpp"
#include "chartsum/tinylsg/vocab.hpp"

#include <filesystem>
#include <string>

namespace chartsum::tinylsg {

struct Checkpoint {
    TinyModel model;
    Vocab vocab;
    LsgConfig lsg;
};

// Layout: 8-byte magic "CSUMTLSG", u32 format version, u64 header length,
// JSON header (shape, LSG config, vocab, tensor names and shapes), then each
// tensor as row-major little-endian float64.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws MalformedFile on bad magic, version, header or short payload.
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace chartsum::tinylsg
