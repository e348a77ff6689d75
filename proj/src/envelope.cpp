#include "fedecg/transport/envelope.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace fedecg::transport {

namespace {

constexpr std::array<unsigned char, 4> kMagic = {'F', 'L', 'U', 'P'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kMaxMsgType = 4;
constexpr std::uint8_t kMaxDtype = 1;

const std::array<std::uint32_t, 256>& crc_table() {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int bit = 0; bit < 8; ++bit) c = (c & 1u) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
            t[i] = c;
        }
        return t;
    }();
    return table;
}

class Writer {
  public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) {
        buf_.push_back(static_cast<unsigned char>(v & 0xFF));
        buf_.push_back(static_cast<unsigned char>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
    }
    void raw(const unsigned char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    std::vector<unsigned char>& bytes() { return buf_; }

  private:
    std::vector<unsigned char> buf_;
};

class Reader {
  public:
    explicit Reader(const std::vector<unsigned char>& b) : buf_(b) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() {
        const auto* p = take(2);
        return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    }
    std::uint32_t u32() {
        const auto* p = take(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }
    std::uint64_t u64() {
        const auto* p = take(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }
    const unsigned char* take(std::size_t n) {
        if (pos_ + n > buf_.size())
            throw DecodeError(DecodeErrorKind::Truncated,
                              "envelope truncated at byte " + std::to_string(pos_));
        const unsigned char* p = buf_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }

  private:
    const std::vector<unsigned char>& buf_;
    std::size_t pos_ = 0;
};

std::size_t dtype_size(Dtype d) { return d == Dtype::F32 ? 4 : 8; }

}  // namespace

std::uint32_t crc32_ieee(const unsigned char* data, std::size_t len) {
    const auto& table = crc_table();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

std::vector<unsigned char> encode_envelope(const Envelope& env) {
    Writer w;
    w.raw(kMagic.data(), kMagic.size());
    w.u16(kVersion);
    w.u8(static_cast<std::uint8_t>(env.msg_type));
    w.u32(env.round);
    w.u32(env.sender_id);
    w.u64(env.num_samples);
    w.u32(static_cast<std::uint32_t>(env.tensors.size()));

    for (const auto& t : env.tensors) {
        if (t.name.size() > 0xFFFF)
            throw EncodeError("tensor name longer than 65535 bytes");
        const std::uint64_t expect = t.numel() * dtype_size(t.dtype);
        if (t.payload.size() != expect)
            throw EncodeError("tensor '" + t.name + "' payload size " +
                              std::to_string(t.payload.size()) + " does not match dims (" +
                              std::to_string(expect) + " bytes expected)");
        w.u16(static_cast<std::uint16_t>(t.name.size()));
        w.raw(reinterpret_cast<const unsigned char*>(t.name.data()), t.name.size());
        w.u8(static_cast<std::uint8_t>(t.dtype));
        w.u8(static_cast<std::uint8_t>(t.dims.size()));
        for (const auto d : t.dims) w.u32(d);
        w.raw(t.payload.data(), t.payload.size());
    }

    const std::uint32_t crc = crc32_ieee(w.bytes().data(), w.bytes().size());
    w.u32(crc);
    return std::move(w.bytes());
}

Envelope decode_envelope(const std::vector<unsigned char>& bytes) {
    Reader r(bytes);

    const unsigned char* magic = r.take(4);
    if (std::memcmp(magic, kMagic.data(), 4) != 0)
        throw DecodeError(DecodeErrorKind::BadMagic, "bad magic");
    const std::uint16_t version = r.u16();
    if (version != kVersion)
        throw DecodeError(DecodeErrorKind::BadVersion,
                          "unsupported version " + std::to_string(version));

    Envelope env;
    const std::uint8_t mt = r.u8();
    if (mt > kMaxMsgType)
        throw DecodeError(DecodeErrorKind::Malformed, "unknown msg_type " + std::to_string(mt));
    env.msg_type = static_cast<MsgType>(mt);
    env.round = r.u32();
    env.sender_id = r.u32();
    env.num_samples = r.u64();
    const std::uint32_t count = r.u32();

    env.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        WireTensor t;
        const std::uint16_t name_len = r.u16();
        const unsigned char* name = r.take(name_len);
        t.name.assign(reinterpret_cast<const char*>(name), name_len);
        const std::uint8_t dt = r.u8();
        if (dt > kMaxDtype)
            throw DecodeError(DecodeErrorKind::Malformed, "unknown dtype " + std::to_string(dt));
        t.dtype = static_cast<Dtype>(dt);
        const std::uint8_t ndim = r.u8();
        t.dims.resize(ndim);
        for (auto& d : t.dims) d = r.u32();
        std::uint64_t bytes_needed = dtype_size(t.dtype);
        for (const auto d : t.dims) {
            if (d != 0 && bytes_needed > UINT64_MAX / d)
                throw DecodeError(DecodeErrorKind::Malformed, "tensor dims overflow");
            bytes_needed *= d;
        }
        if (bytes_needed > r.remaining())
            throw DecodeError(DecodeErrorKind::Truncated,
                              "payload of tensor '" + t.name + "' truncated");
        const unsigned char* payload = r.take(static_cast<std::size_t>(bytes_needed));
        t.payload.assign(payload, payload + bytes_needed);
        env.tensors.push_back(std::move(t));
    }

    const std::size_t body_len = r.pos();
    const std::uint32_t stored_crc = r.u32();
    const std::uint32_t computed = crc32_ieee(bytes.data(), body_len);
    if (stored_crc != computed)
        throw DecodeError(DecodeErrorKind::CrcMismatch, "CRC mismatch");
    if (r.remaining() != 0)
        throw DecodeError(DecodeErrorKind::Malformed,
                          std::to_string(r.remaining()) + " trailing bytes after CRC");
    return env;
}

void set_meta(Envelope& env, const std::string& key, double value) {
    WireTensor t;
    t.name = key;
    t.dtype = Dtype::F64;
    t.dims = {1};
    t.payload.resize(8);
    std::memcpy(t.payload.data(), &value, 8);
    env.tensors.push_back(std::move(t));
}

double get_meta(const Envelope& env, const std::string& key, double fallback) {
    const WireTensor* t = env.find(key);
    if (!t || t->dtype != Dtype::F64 || t->payload.size() != 8) return fallback;
    double v;
    std::memcpy(&v, t->payload.data(), 8);
    return v;
}

void write_flup_file(const std::string& path, const Envelope& env) {
    const auto bytes = encode_envelope(env);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

Envelope read_flup_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return decode_envelope(bytes);
}

}  // namespace fedecg::transport
