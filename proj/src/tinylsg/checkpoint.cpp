#include "chartsum/tinylsg/checkpoint.hpp"

#include "chartsum/corpus.hpp"
#include "chartsum/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>

namespace chartsum::tinylsg {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using json = nlohmann::json;
constexpr char kMagic[8] = {'C', 'S', 'U', 'M', 'T', 'L', 'S', 'G'};

template <class T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) {
        throw Error(ErrorKind::MalformedFile, "checkpoint truncated");
    }
    T value;
    std::memcpy(&value, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    const auto& shape = ckpt.model.shape;
    json header;
    header["shape"] = {{"vocab_size", shape.vocab_size},
                       {"d_model", shape.d_model},
                       {"n_heads", shape.n_heads},
                       {"n_encoder_layers", shape.n_encoder_layers},
                       {"n_decoder_layers", shape.n_decoder_layers},
                       {"d_ff", shape.d_ff}};
    header["lsg"] = {{"block_size", ckpt.lsg.block_size},
                     {"sparsity_stride", ckpt.lsg.sparsity_stride},
                     {"num_global", ckpt.lsg.num_global},
                     {"max_input_tokens", ckpt.lsg.max_input_tokens},
                     {"local_radius", ckpt.lsg.local_radius}};
    header["vocab"] = ckpt.vocab.tokens();
    json tensors = json::array();
    for (const auto& p : parameters(ckpt.model)) {
        tensors.push_back({{"name", p.name}, {"rows", p.value->rows()}, {"cols", p.value->cols()}});
    }
    header["tensors"] = tensors;
    const std::string header_text = header.dump();

    std::string out(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, header_text.size());
    out += header_text;
    for (const auto& p : parameters(ckpt.model)) {
        const Matrix& m = *p.value;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                put<double>(out, m(r, c));
            }
        }
    }
    return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw Error(ErrorKind::MalformedFile, "not a model checkpoint (bad magic)");
    }
    std::size_t pos = sizeof kMagic;
    const auto version = take<std::uint32_t>(bytes, pos);
    if (version != kCheckpointVersion) {
        throw Error(ErrorKind::MalformedFile, "unsupported checkpoint version " + std::to_string(version));
    }
    const auto header_len = take<std::uint64_t>(bytes, pos);
    if (pos + header_len > bytes.size()) {
        throw Error(ErrorKind::MalformedFile, "checkpoint header truncated");
    }
    Checkpoint ckpt;
    try {
        const json header = json::parse(bytes.substr(pos, header_len));
        pos += header_len;
        const auto& s = header.at("shape");
        ModelShape shape;
        shape.vocab_size = s.at("vocab_size").get<std::size_t>();
        shape.d_model = s.at("d_model").get<std::size_t>();
        shape.n_heads = s.at("n_heads").get<std::size_t>();
        shape.n_encoder_layers = s.at("n_encoder_layers").get<std::size_t>();
        shape.n_decoder_layers = s.at("n_decoder_layers").get<std::size_t>();
        shape.d_ff = s.at("d_ff").get<std::size_t>();
        const auto& l = header.at("lsg");
        ckpt.lsg.block_size = l.at("block_size").get<std::size_t>();
        ckpt.lsg.sparsity_stride = l.at("sparsity_stride").get<std::size_t>();
        ckpt.lsg.num_global = l.at("num_global").get<std::size_t>();
        ckpt.lsg.max_input_tokens = l.at("max_input_tokens").get<std::size_t>();
        ckpt.lsg.local_radius = l.at("local_radius").get<std::size_t>();
        ckpt.vocab = Vocab::from_tokens(header.at("vocab").get<std::vector<std::string>>());
        if (ckpt.vocab.size() != shape.vocab_size) {
            throw Error(ErrorKind::MalformedFile, "vocab size disagrees with model shape");
        }
        ckpt.model = init_model(shape, 0);
        auto params = parameters(ckpt.model);
        const auto& tensors = header.at("tensors");
        if (tensors.size() != params.size()) {
            throw Error(ErrorKind::MalformedFile, "tensor count disagrees with model shape");
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            Matrix& m = *params[i].value;
            if (tensors[i].at("name").get<std::string>() != params[i].name ||
                tensors[i].at("rows").get<Eigen::Index>() != m.rows() ||
                tensors[i].at("cols").get<Eigen::Index>() != m.cols()) {
                throw Error(ErrorKind::MalformedFile, "tensor " + params[i].name + " has unexpected layout");
            }
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                for (Eigen::Index c = 0; c < m.cols(); ++c) {
                    m(r, c) = take<double>(bytes, pos);
                }
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedFile, std::string("checkpoint header: ") + e.what());
    }
    if (pos != bytes.size()) {
        throw Error(ErrorKind::MalformedFile, "trailing bytes after checkpoint payload");
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace chartsum::tinylsg
