#include "rallypose/nn/checkpoint.hpp"

#include <cstring>
#include <map>

#include "rallypose/error.hpp"
#include "rallypose/hash.hpp"
#include "rallypose/textio.hpp"

namespace rallypose::nn {

namespace {

constexpr char kMagic[8] = {'R', 'P', 'C', 'K', 'P', 'T', '\0', '\1'};

template <typename T>
void put(std::string& buf, T v) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    buf.append(bytes, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& pos, const std::string& source) {
    if (pos + sizeof(T) > buf.size()) {
        throw ParseError(source, 0, "truncated checkpoint");
    }
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

} // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".json");
}

std::string encode_parameters(std::span<const Parameter* const> params) {
    std::string buf(kMagic, sizeof(kMagic));
    put<std::uint32_t>(buf, kCheckpointVersion);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.size()));
    for (const Parameter* p : params) {
        put<std::uint32_t>(buf, static_cast<std::uint32_t>(p->name.size()));
        buf += p->name;
        put<std::uint32_t>(buf, static_cast<std::uint32_t>(p->value.rank()));
        for (std::size_t d : p->value.shape()) {
            put<std::uint64_t>(buf, d);
        }
        for (double v : p->value.values()) {
            put<double>(buf, v);
        }
    }
    return buf;
}

std::vector<Parameter> decode_parameters(const std::string& buf, const std::string& source) {
    if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
        throw ParseError(source, 0, "not a checkpoint file");
    }
    std::size_t pos = sizeof(kMagic);
    if (take<std::uint32_t>(buf, pos, source) != kCheckpointVersion) {
        throw ParseError(source, 0, "unsupported checkpoint version");
    }
    const auto count = take<std::uint32_t>(buf, pos, source);
    std::vector<Parameter> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = take<std::uint32_t>(buf, pos, source);
        if (pos + len > buf.size()) {
            throw ParseError(source, 0, "truncated checkpoint");
        }
        std::string name = buf.substr(pos, len);
        pos += len;
        const auto rank = take<std::uint32_t>(buf, pos, source);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) {
            d = static_cast<std::size_t>(take<std::uint64_t>(buf, pos, source));
        }
        std::vector<double> data(shape_product(shape));
        for (double& v : data) {
            v = take<double>(buf, pos, source);
        }
        out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    if (pos != buf.size()) {
        throw ParseError(source, 0, "trailing bytes in checkpoint");
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params,
                     const nlohmann::json& architecture, const nlohmann::json& training_config) {
    write_text_file(path, encode_parameters(params));
    nlohmann::json side;
    side["format_version"] = kCheckpointVersion;
    side["architecture"] = architecture;
    side["training_config"] = training_config;
    side["config_hash"] = sha256_hex(training_config.dump());
    write_text_file(sidecar_path(path), side.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Checkpoint c;
    c.parameters = decode_parameters(read_text_file(path), path.string());
    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        try {
            c.sidecar = nlohmann::json::parse(read_text_file(side));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(side.string(), 0, e.what());
        }
    }
    return c;
}

void assign_parameters(std::span<Parameter* const> dst, std::span<const Parameter> src) {
    std::map<std::string, const Parameter*> by_name;
    for (const auto& p : src) {
        by_name[p.name] = &p;
    }
    for (Parameter* p : dst) {
        auto it = by_name.find(p->name);
        if (it == by_name.end()) {
            throw ShapeError("checkpoint lacks parameter " + p->name);
        }
        if (it->second->value.shape() != p->value.shape()) {
            throw ShapeError("checkpoint parameter " + p->name + " has shape " +
                             shape_string(it->second->value.shape()) + ", model expects " +
                             shape_string(p->value.shape()));
        }
        p->value = it->second->value;
        p->zero_grad();
    }
}

} // namespace rallypose::nn
