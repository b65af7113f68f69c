#include "rankbench/checkpoint.hpp"

#include "rankbench/config.hpp"
#include "rankbench/error.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

namespace rankbench {
namespace {

constexpr std::array<char, 8> kMagic = {'R', 'B', 'C', 'K', 'P', 'T', '\0', '\0'};

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::string& buf, double v) { put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

class Reader {
public:
    Reader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw IoError("truncated checkpoint: " + source_);
    }
    std::string data_;
    std::string source_;
    std::size_t pos_ = 0;
};

void put_tensor(std::string& buf, const std::string& name, const std::vector<std::size_t>& shape, const double* v,
                std::size_t n) {
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf += name;
    put_u32(buf, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) put_u32(buf, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < n; ++i) put_f32(buf, v[i]);
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
    const std::vector<ParamTensor> layout = parameter_layout(params.config);
    std::string buf(kMagic.begin(), kMagic.end());
    put_u32(buf, kCheckpointVersion);
    nlohmann::ordered_json header;
    header["format_version"] = kCheckpointVersion;
    header["seed"] = params.seed;
    header["model"] = model_config_to_json(params.config);
    const std::string text = header.dump();
    put_u32(buf, static_cast<std::uint32_t>(text.size()));
    buf += text;
    put_u32(buf, static_cast<std::uint32_t>(layout.size() + 1));
    for (const auto& t : layout) put_tensor(buf, t.name, t.shape, params.values.data() + t.offset, t.size);
    put_tensor(buf, "positional_encoding", {params.config.window, params.config.d_model}, params.positional.data(),
               params.positional.size());

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(std::move(data), path.string());

    const std::string magic = r.bytes(kMagic.size());
    if (std::memcmp(magic.data(), kMagic.data(), kMagic.size()) != 0) throw IoError("not a checkpoint: " + path.string());
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.bytes(r.u32()));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt checkpoint header in " + path.string() + ": " + e.what());
    }
    ModelParams p;
    p.config = model_config_from_json(header.at("model"));
    p.seed = header.at("seed").get<std::uint64_t>();
    const std::vector<ParamTensor> layout = parameter_layout(p.config);
    p.values.assign(parameter_count(p.config), 0.0);
    p.positional.assign(p.config.window * p.config.d_model, 0.0);

    const std::uint32_t count = r.u32();
    if (count != layout.size() + 1) throw IoError("checkpoint tensor count does not match its config: " + path.string());
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::string name = r.bytes(r.u32());
        const std::uint32_t rank = r.u32();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = r.u32();
        const bool is_pe = k == layout.size();
        const std::string expected_name = is_pe ? "positional_encoding" : layout[k].name;
        const std::vector<std::size_t> expected_shape =
            is_pe ? std::vector<std::size_t>{p.config.window, p.config.d_model} : layout[k].shape;
        if (name != expected_name || shape != expected_shape)
            throw IoError("checkpoint tensor '" + name + "' does not match expected '" + expected_name + "'");
        double* dst = is_pe ? p.positional.data() : p.values.data() + layout[k].offset;
        const std::size_t n = is_pe ? p.positional.size() : layout[k].size;
        for (std::size_t i = 0; i < n; ++i) dst[i] = r.f32();
    }
    if (!r.done()) throw IoError("trailing bytes in checkpoint " + path.string());
    return p;
}

ModelParams quantize_to_checkpoint_precision(ModelParams params) {
    for (double& v : params.values) v = static_cast<double>(static_cast<float>(v));
    for (double& v : params.positional) v = static_cast<double>(static_cast<float>(v));
    return params;
}

}  // namespace rankbench
