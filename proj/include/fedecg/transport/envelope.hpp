#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedecg/error.hpp"
#include "fedecg/param_set.hpp"
#include "fedecg/tensor.hpp"

namespace fedecg::transport {

// FLUP v1: the versioned binary envelope carrying a named tensor collection
// plus routing metadata. The byte layout is normative; envelopes written by
// any conforming implementation decode identically everywhere.
//
//   magic        4 bytes      "FLUP"
//   version      u16 LE       1
//   msg_type     u8           0 GlobalModel, 1 ClientUpdate, 2 ControlState,
//                             3 RoundDone, 4 Stop
//   round        u32 LE
//   sender_id    u32 LE       server = 0xFFFFFFFF
//   num_samples  u64 LE
//   tensor_count u32 LE
//   per tensor:
//     name_len   u16 LE, then UTF-8 name bytes
//     dtype      u8           0 f32, 1 f64
//     ndim       u8
//     dims       u32 LE each
//     payload    little-endian IEEE-754 values, row-major, no padding
//   trailer      u32 LE       CRC32 (IEEE, poly 0xEDB88320) of all preceding bytes
//
// Conventions layered on top of the grammar (still plain named tensors on
// the wire):
//   * model entries use the network's canonical parameter names;
//   * entries prefixed "ctrl/" carry control-variate deltas;
//   * "_meta.lr" and "_meta.train_loss" are f64 scalars piggybacking
//     round metadata that has no dedicated header field.

enum class MsgType : std::uint8_t {
    GlobalModel = 0,
    ClientUpdate = 1,
    ControlState = 2,
    RoundDone = 3,
    Stop = 4,
};

constexpr std::uint32_t kServerSenderId = 0xFFFFFFFFu;

struct WireTensor {
    std::string name;
    Dtype dtype = Dtype::F32;
    std::vector<std::uint32_t> dims;
    std::vector<unsigned char> payload;  // raw little-endian values

    std::uint64_t numel() const {
        std::uint64_t n = 1;
        for (const auto d : dims) n *= d;
        return n;
    }
};

struct Envelope {
    MsgType msg_type = MsgType::GlobalModel;
    std::uint32_t round = 0;
    std::uint32_t sender_id = 0;
    std::uint64_t num_samples = 0;
    std::vector<WireTensor> tensors;

    const WireTensor* find(std::string_view name) const {
        for (const auto& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    }
};

std::vector<unsigned char> encode_envelope(const Envelope& env);
Envelope decode_envelope(const std::vector<unsigned char>& bytes);

// CRC32, IEEE polynomial (reflected 0xEDB88320), init/xorout 0xFFFFFFFF.
std::uint32_t crc32_ieee(const unsigned char* data, std::size_t len);

// ParamSet <-> wire tensors with an optional name prefix.
template <typename T>
void append_param_set(Envelope& env, const ParamSet<T>& ps, const std::string& prefix = "") {
    for (const auto& [name, tensor] : ps) {
        WireTensor wt;
        wt.name = prefix + name;
        wt.dtype = dtype_of<T>();
        for (const auto e : tensor.shape()) wt.dims.push_back(static_cast<std::uint32_t>(e));
        wt.payload.resize(static_cast<std::size_t>(tensor.numel()) * sizeof(T));
        std::memcpy(wt.payload.data(), tensor.data(), wt.payload.size());
        env.tensors.push_back(std::move(wt));
    }
}

// Extracts every tensor whose name starts with prefix (stripping it); entries
// of the other floating dtype are rejected.
template <typename T>
ParamSet<T> extract_param_set(const Envelope& env, const std::string& prefix = "") {
    ParamSet<T> ps;
    for (const auto& wt : env.tensors) {
        if (wt.name.rfind(prefix, 0) != 0) continue;
        const std::string name = wt.name.substr(prefix.size());
        if (name.rfind("_meta.", 0) == 0 || (prefix.empty() && name.rfind("ctrl/", 0) == 0))
            continue;
        if (wt.dtype != dtype_of<T>())
            throw ValueError("envelope tensor '" + wt.name + "' has unexpected dtype");
        Shape shape;
        for (const auto d : wt.dims) shape.push_back(static_cast<std::int64_t>(d));
        Tensor<T> t(shape);
        std::memcpy(t.data(), wt.payload.data(), wt.payload.size());
        ps.add(name, std::move(t));
    }
    return ps;
}

void set_meta(Envelope& env, const std::string& key, double value);
// Returns fallback when the key is absent.
double get_meta(const Envelope& env, const std::string& key, double fallback);

// Envelope written verbatim to disk as a .flup file.
void write_flup_file(const std::string& path, const Envelope& env);
Envelope read_flup_file(const std::string& path);

}  // namespace fedecg::transport
