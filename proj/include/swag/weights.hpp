#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "swag/common.hpp"
#include "swag/image.hpp"  // read_file / write_file
#include "swag/net.hpp"

namespace swag {

// Weight bundle, version 1. All integers little-endian:
//   "SWGW" | u16 version | u32 entry count
//   per entry: u32 name length | name bytes | u8 dtype (0 = f32) |
//              u8 ndim | u32 dims[ndim] | f32 payload (row-major)
//   u32 CRC-32 of every preceding byte
inline constexpr std::uint16_t kBundleVersion = 1;

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct BundleReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw ParseError("truncated weight bundle", pos);
    }
    std::uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
};

}  // namespace detail

// Parameter names and shapes a spec implies, without drawing any weights.
inline std::map<std::string, std::vector<std::int64_t>> param_shapes(const ArchSpec& spec) {
    validate_arch(spec);
    std::map<std::string, std::vector<std::int64_t>> shapes;
    std::int64_t cur = 3;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        const std::string id = detail::layer_id(i);
        if (l.kind == LayerKind::conv) {
            const std::int64_t cout = spec.scaled_channels(l.channels_out);
            shapes[id + ".weight"] = {cout, cur, l.kernel, l.kernel};
            shapes[id + ".bias"] = {cout};
            cur = cout;
        } else if (l.kind == LayerKind::bn) {
            for (const char* f : {".gamma", ".beta", ".running_mean", ".running_var"})
                shapes[id + f] = {cur};
        } else if (l.kind == LayerKind::block_begin && l.skip_projection) {
            const std::int64_t cout = spec.scaled_channels(l.channels_out);
            shapes[id + ".proj.weight"] = {cout, cur, 1, 1};
            shapes[id + ".proj.bias"] = {cout};
            for (const char* f : {".gamma", ".beta", ".running_mean", ".running_var"})
                shapes[id + ".proj.bn" + std::string(f)] = {cout};
        }
    }
    return shapes;
}

template <typename S>
std::vector<std::uint8_t> encode_bundle(const Network<S>& net) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'S', 'W', 'G', 'W'});
    detail::put_u16(out, kBundleVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(net.params.size()));
    for (const auto& [name, tensor] : net.params) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(0);  // dtype f32
        out.push_back(static_cast<std::uint8_t>(tensor.ndim()));
        for (auto d : tensor.shape()) detail::put_u32(out, static_cast<std::uint32_t>(d));
        for (S v : tensor.data()) {
            const float f = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            detail::put_u32(out, bits);
        }
    }
    detail::put_u32(out, detail::crc32(out.data(), out.size()));
    return out;
}

template <typename S>
void save_bundle(const std::string& path, const Network<S>& net) {
    const auto bytes = encode_bundle(net);
    detail::write_file(path, bytes.data(), bytes.size());
}

template <typename S>
Network<S> decode_bundle(const std::vector<std::uint8_t>& bytes, const ArchSpec& spec) {
    if (bytes.size() < 14) throw ParseError("weight bundle too short", bytes.size());
    if (std::memcmp(bytes.data(), "SWGW", 4) != 0)
        throw ParseError("not a weight bundle (bad magic)", 0);
    {
        std::uint32_t stored = 0;
        for (int i = 0; i < 4; ++i)
            stored |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
        if (detail::crc32(bytes.data(), bytes.size() - 4) != stored)
            throw ParseError("weight bundle CRC mismatch", bytes.size() - 4);
    }
    detail::BundleReader r{bytes, 4};
    const std::uint16_t version = r.u16();
    if (version != kBundleVersion)
        throw ParseError("unsupported weight bundle version " + std::to_string(version), 4);
    const std::uint32_t count = r.u32();

    Network<S> net;
    net.spec = spec;
    net.provenance = Provenance::imported;
    const std::size_t payload_end = bytes.size() - 4;
    for (std::uint32_t e = 0; e < count; ++e) {
        const std::uint32_t name_len = r.u32();
        if (r.pos + name_len > payload_end)
            throw ParseError("truncated entry name", r.pos);
        const std::string name(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos),
                               bytes.begin() + static_cast<std::ptrdiff_t>(r.pos + name_len));
        r.pos += name_len;
        const std::uint8_t dtype = r.u8();
        if (dtype != 0) throw ParseError("unsupported dtype in entry " + name, r.pos - 1);
        const std::uint8_t ndim = r.u8();
        if (ndim == 0) throw ParseError("zero-rank entry " + name, r.pos - 1);
        std::vector<std::int64_t> dims;
        std::int64_t numel = 1;
        for (int d = 0; d < ndim; ++d) {
            const std::uint32_t v = r.u32();
            if (v == 0 || numel > (std::int64_t{1} << 32))
                throw ParseError("invalid dims in entry " + name, r.pos - 4);
            dims.push_back(static_cast<std::int64_t>(v));
            numel *= static_cast<std::int64_t>(v);
        }
        if (r.pos + static_cast<std::size_t>(numel) * 4 > payload_end)
            throw ParseError("truncated payload of entry " + name, r.pos);
        std::vector<S> data(static_cast<std::size_t>(numel));
        for (std::int64_t i = 0; i < numel; ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b)
                bits |= static_cast<std::uint32_t>(bytes[r.pos + b]) << (8 * b);
            r.pos += 4;
            float f;
            std::memcpy(&f, &bits, 4);
            data[static_cast<std::size_t>(i)] = static_cast<S>(f);
        }
        if (!net.params.emplace(name, Tensor<S>(dims, std::move(data))).second)
            throw ParseError("duplicate entry " + name, r.pos);
    }
    if (r.pos != payload_end) throw ParseError("trailing bytes after entries", r.pos);

    const auto expected = param_shapes(spec);
    for (const auto& [name, shape] : expected) {
        auto it = net.params.find(name);
        if (it == net.params.end())
            throw ConfigError("weight bundle is missing parameter " + name);
        if (it->second.shape() != shape)
            throw ConfigError("weight bundle entry " + name + " has mismatched shape");
    }
    for (const auto& [name, tensor] : net.params)
        if (!expected.count(name))
            throw ConfigError("weight bundle has unexpected entry " + name);
    return net;
}

template <typename S>
Network<S> load_bundle(const std::string& path, const ArchSpec& spec) {
    return decode_bundle<S>(detail::read_file(path), spec);
}

}  // namespace swag
