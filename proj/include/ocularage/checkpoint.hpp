#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocularage/model.hpp"
#include "ocularage/optim.hpp"

namespace ocularage {

constexpr uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[4] = {'O', 'C', 'A', 'G'};

struct CheckpointData {
    MultiTaskNet net;
    Adam adam;
    int epoch = 0;
    std::string rng_state;
    nlohmann::json meta; // modality, dataset stats, alpha state, train subjects, ...
};

namespace detail {

inline void write_u32le(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64le(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline uint32_t read_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw CorruptCheckpoint("unexpected end of file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline uint64_t read_u64le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw CorruptCheckpoint("unexpected end of file");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void write_f32_blob(std::ostream& os, const Tensor& t) {
    static_assert(sizeof(float) == 4);
    for (float f : t.data) {
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32le(os, bits);
    }
}

inline void read_f32_blob(std::istream& is, Tensor& t) {
    for (float& f : t.data) {
        const uint32_t bits = read_u32le(is);
        std::memcpy(&f, &bits, 4);
    }
}

} // namespace detail

/// Serializes the bundle as: magic "OCAG", u32 LE version, u64 LE JSON
/// header length, UTF-8 JSON (topology, metadata, blob order), then raw
/// little-endian float32 blobs in the header-declared order.
inline void save_checkpoint(const std::string& path, CheckpointData& ckpt) {
    nlohmann::json header;
    header["format_version"] = kCheckpointVersion;
    header["topology"] = net_topology(ckpt.net);
    header["epoch"] = ckpt.epoch;
    header["rng_state"] = ckpt.rng_state;
    header["adam"] = {{"t", ckpt.adam.t},
                      {"beta1", ckpt.adam.beta1},
                      {"beta2", ckpt.adam.beta2},
                      {"eps", ckpt.adam.eps},
                      {"weight_decay", ckpt.adam.weight_decay}};
    header["meta"] = ckpt.meta;

    auto params = ckpt.net.params();
    auto buffers = ckpt.net.buffers();
    const bool with_adam = ckpt.adam.m.size() == params.size();

    std::vector<const Tensor*> blobs;
    nlohmann::json tensors = nlohmann::json::array();
    auto declare = [&](const std::string& name, const Tensor& t) {
        tensors.push_back({{"name", name}, {"shape", t.shape}});
        blobs.push_back(&t);
    };
    for (const auto& p : params) declare(p.name, *p.value);
    for (const auto& b : buffers) declare(b.name, *b.value);
    if (with_adam) {
        for (size_t i = 0; i < params.size(); ++i) declare("adam.m." + params[i].name, ckpt.adam.m[i]);
        for (size_t i = 0; i < params.size(); ++i) declare("adam.v." + params[i].name, ckpt.adam.v[i]);
    }
    header["tensors"] = tensors;

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint: " + path);
    os.write(kCheckpointMagic, 4);
    detail::write_u32le(os, kCheckpointVersion);
    const std::string hdr = header.dump();
    detail::write_u64le(os, hdr.size());
    os.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    for (const Tensor* t : blobs) detail::write_f32_blob(os, *t);
    if (!os.flush()) throw IoError("failed writing checkpoint: " + path);
}

inline CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw CorruptCheckpoint("bad magic in " + path);
    const uint32_t version = detail::read_u32le(is);
    if (version != kCheckpointVersion)
        throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                              std::to_string(kCheckpointVersion));
    const uint64_t hlen = detail::read_u64le(is);
    std::string hdr(hlen, '\0');
    is.read(hdr.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw CorruptCheckpoint("truncated JSON header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hdr);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(std::string("unparseable header: ") + e.what());
    }

    CheckpointData ckpt;
    try {
        ckpt.net = net_from_topology<float>(header.at("topology"));
        ckpt.epoch = header.at("epoch").get<int>();
        ckpt.rng_state = header.at("rng_state").get<std::string>();
        const auto& aj = header.at("adam");
        ckpt.adam.t = aj.at("t").get<int64_t>();
        ckpt.adam.beta1 = aj.at("beta1").get<double>();
        ckpt.adam.beta2 = aj.at("beta2").get<double>();
        ckpt.adam.eps = aj.at("eps").get<double>();
        ckpt.adam.weight_decay = aj.at("weight_decay").get<double>();
        ckpt.meta = header.value("meta", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(std::string("incomplete header: ") + e.what());
    }

    auto params = ckpt.net.params();
    auto buffers = ckpt.net.buffers();
    const int64_t adam_t = ckpt.adam.t; // attach() resets the step count
    ckpt.adam.attach(params);
    ckpt.adam.t = adam_t;

    std::vector<Tensor*> by_name_order;
    for (const auto& tj : header.at("tensors")) {
        const std::string name = tj.at("name").get<std::string>();
        const auto shape = tj.at("shape").get<std::vector<int>>();
        Tensor* dst = nullptr;
        for (const auto& p : params)
            if (p.name == name) dst = p.value;
        for (const auto& b : buffers)
            if (b.name == name) dst = b.value;
        if (!dst && name.rfind("adam.m.", 0) == 0) {
            const std::string pname = name.substr(7);
            for (size_t i = 0; i < params.size(); ++i)
                if (params[i].name == pname) dst = &ckpt.adam.m[i];
        }
        if (!dst && name.rfind("adam.v.", 0) == 0) {
            const std::string pname = name.substr(7);
            for (size_t i = 0; i < params.size(); ++i)
                if (params[i].name == pname) dst = &ckpt.adam.v[i];
        }
        if (!dst) throw CorruptCheckpoint("unknown tensor in checkpoint: " + name);
        if (dst->shape != shape) throw CorruptCheckpoint("shape mismatch for tensor: " + name);
        by_name_order.push_back(dst);
    }
    for (Tensor* t : by_name_order) detail::read_f32_blob(is, *t);
    if (!is) throw CorruptCheckpoint("truncated tensor data");
    return ckpt;
}

} // namespace ocularage
