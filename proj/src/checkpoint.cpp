#include "wdm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "wdm/errors.hpp"

namespace wdm {

namespace {

constexpr char kMagic[4] = {'W', 'D', 'M', 'K'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(v & 0xFF);
    out.push_back((v >> 8) & 0xFF);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

struct Reader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw CorruptionError("checkpoint truncated at byte " + std::to_string(pos));
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = buf[pos] | (std::uint16_t(buf[pos + 1]) << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(buf[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    float f32() { return std::bit_cast<float>(u32()); }
};

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

DenoiserModel Checkpoint::model() const {
    std::vector<double> flat(params.begin(), params.end());
    return DenoiserModel::from_flat(arch, flat);
}

void save_checkpoint(const DenoiserModel& model, const NoiseSchedule& sched,
                     double beta_1, double beta_T, const std::string& path) {
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u16(buf, Checkpoint::kVersion);
    put_u32(buf, static_cast<std::uint32_t>(sched.T));
    put_f64(buf, beta_1);
    put_f64(buf, beta_T);
    const Arch& a = model.arch();
    put_u32(buf, static_cast<std::uint32_t>(a.input_dim));
    put_u32(buf, static_cast<std::uint32_t>(a.hidden.size()));
    for (std::size_t h : a.hidden) put_u32(buf, static_cast<std::uint32_t>(h));
    put_u32(buf, static_cast<std::uint32_t>(a.time_embed_dim));
    std::vector<double> flat = model.flat_params();
    put_u64(buf, flat.size());
    for (double v : flat) put_f32(buf, static_cast<float>(v));
    put_u64(buf, fnv1a64(buf.data(), buf.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write to checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

    if (buf.size() < 12) throw CorruptionError("checkpoint too small: " + path);
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw CorruptionError("bad checkpoint magic in " + path);

    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i)
        stored |= std::uint64_t(buf[buf.size() - 8 + i]) << (8 * i);
    std::uint64_t actual = fnv1a64(buf.data(), buf.size() - 8);
    if (stored != actual)
        throw CorruptionError("checkpoint checksum mismatch in " + path);

    Reader r{buf, 4};
    std::uint16_t version = r.u16();
    if (version != Checkpoint::kVersion)
        throw MigrationError("checkpoint format version " + std::to_string(version) +
                             " is not the supported version " +
                             std::to_string(Checkpoint::kVersion));

    Checkpoint ck;
    ck.T = static_cast<int>(r.u32());
    ck.beta_1 = r.f64();
    ck.beta_T = r.f64();
    ck.arch.input_dim = r.u32();
    std::uint32_t n_hidden = r.u32();
    if (n_hidden > 64) throw CorruptionError("implausible hidden layer count");
    for (std::uint32_t i = 0; i < n_hidden; ++i) ck.arch.hidden.push_back(r.u32());
    ck.arch.time_embed_dim = r.u32();
    std::uint64_t count = r.u64();
    if (count != ck.arch.param_count())
        throw CorruptionError("checkpoint parameter count " + std::to_string(count) +
                              " does not match architecture (" +
                              std::to_string(ck.arch.param_count()) + ")");
    if (r.pos + count * 4 + 8 != buf.size())
        throw CorruptionError("checkpoint payload size mismatch in " + path);
    ck.params.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) ck.params.push_back(r.f32());
    return ck;
}

}  // namespace wdm
