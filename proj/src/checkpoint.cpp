#include "glyphformer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "glyphformer/error.hpp"

namespace glyphformer {

namespace {

constexpr char kMagic[8] = {'G', 'L', 'Y', 'F', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename U>
void write_pod(std::ostream& out, U value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename U>
U read_pod(std::istream& in) {
    U value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!in) throw Error(ErrorKind::IoError, "truncated checkpoint");
    return value;
}

void write_tensors(std::ostream& out, ModelParams<float>& p) {
    for (auto& r : p.refs())
        out.write(reinterpret_cast<const char*>(r.value->data()),
                  static_cast<std::streamsize>(r.value->size() * sizeof(float)));
}

void read_tensors(std::istream& in, ModelParams<float>& p) {
    for (auto& r : p.refs()) {
        in.read(reinterpret_cast<char*>(r.value->data()), static_cast<std::streamsize>(r.value->size() * sizeof(float)));
        if (!in) throw Error(ErrorKind::IoError, "truncated checkpoint tensor " + r.name);
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    auto& mutable_ckpt = const_cast<Checkpoint&>(ckpt);
    nlohmann::json shapes = nlohmann::json::array();
    for (auto& r : mutable_ckpt.params.refs()) shapes.push_back({r.name, r.value->rows(), r.value->cols()});
    const nlohmann::json header = {{"encoder", to_json(ckpt.encoder)},
                                   {"optimizer", to_json(ckpt.optimizer)},
                                   {"representation", to_string(ckpt.representation)},
                                   {"labels", ckpt.labels},
                                   {"epoch", ckpt.epoch},
                                   {"step", ckpt.state.step},
                                   {"tensors", shapes}};
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    write_tensors(out, mutable_ckpt.params);
    write_tensors(out, mutable_ckpt.state.first_moment);
    write_tensors(out, mutable_ckpt.state.second_moment);
    if (!out) throw Error(ErrorKind::IoError, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw Error(ErrorKind::IoError, path.string() + " is not a glyphformer checkpoint");
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion)
        throw Error(ErrorKind::ConfigMismatch, "unsupported checkpoint version " + std::to_string(version));
    const auto header_len = read_pod<std::uint64_t>(in);
    std::string text(header_len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw Error(ErrorKind::IoError, "truncated checkpoint header");
    const auto header = nlohmann::json::parse(text);

    Checkpoint ckpt;
    ckpt.encoder = encoder_config_from_json(header.at("encoder"));
    ckpt.optimizer = adamw_config_from_json(header.at("optimizer"));
    ckpt.representation = parse_representation(header.at("representation").get<std::string>());
    ckpt.labels = header.at("labels").get<std::vector<std::string>>();
    ckpt.epoch = header.at("epoch").get<std::int64_t>();
    ckpt.params = ModelParams<float>::zeros(ckpt.encoder);
    ckpt.state = OptimizerState<float>::create(ckpt.encoder, ckpt.optimizer);
    ckpt.state.step = header.at("step").get<std::int64_t>();

    const auto& shapes = header.at("tensors");
    auto refs = ckpt.params.refs();
    if (shapes.size() != refs.size()) throw Error(ErrorKind::ConfigMismatch, "checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (shapes[i][0].get<std::string>() != refs[i].name || shapes[i][1].get<Eigen::Index>() != refs[i].value->rows() ||
            shapes[i][2].get<Eigen::Index>() != refs[i].value->cols())
            throw Error(ErrorKind::ConfigMismatch, "checkpoint tensor layout mismatch at " + refs[i].name);
    }
    read_tensors(in, ckpt.params);
    read_tensors(in, ckpt.state.first_moment);
    read_tensors(in, ckpt.state.second_moment);
    return ckpt;
}

}  // namespace glyphformer
