// SPDX-License-Identifier: Apache-2.0
#include "fgdm/nn/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "fgdm/errors.hpp"
#include "fgdm/io.hpp"

namespace fgdm::nn {

namespace {

constexpr char kMagic[8] = {'F', 'G', 'D', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

template <class U>
void put(std::vector<std::uint8_t>& out, U v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(U));
}

template <class U>
U take(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    if (pos + sizeof(U) > bytes.size()) throw FormatError("checkpoint: truncated");
    U v;
    std::memcpy(&v, bytes.data() + pos, sizeof(U));
    pos += sizeof(U);
    return v;
}

nlohmann::json refs_json(const ParamStore<float>& ps) {
    auto a = nlohmann::json::array();
    for (const auto& r : ps.refs()) a.push_back({{"name", r.name}, {"offset", r.offset}, {"size", r.size}});
    return a;
}

void check_refs(const ParamStore<float>& ps, const nlohmann::json& j, const char* what) {
    const auto& refs = ps.refs();
    if (!j.is_array() || j.size() != refs.size())
        throw FormatError(std::string("checkpoint: ") + what + " parameter table does not match its architecture");
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (j[i].at("name").get<std::string>() != refs[i].name || j[i].at("offset").get<std::size_t>() != refs[i].offset ||
            j[i].at("size").get<std::size_t>() != refs[i].size)
            throw FormatError(std::string("checkpoint: ") + what + " parameter '" + refs[i].name + "' mismatch");
    }
}

void read_blob(std::span<const std::uint8_t> bytes, std::size_t& pos, std::span<float> dst) {
    const std::size_t n = dst.size() * sizeof(float);
    if (pos + n > bytes.size()) throw FormatError("checkpoint: truncated weight blob");
    std::memcpy(dst.data(), bytes.data() + pos, n);
    pos += n;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
    nlohmann::json h;
    h["generator"] = {{"arch", ck.generator.arch().to_json()}, {"params", refs_json(ck.generator.params())},
                      {"count", ck.generator.params().size()}};
    if (ck.discriminator)
        h["discriminator"] = {{"arch", ck.discriminator->arch().to_json()},
                              {"params", refs_json(ck.discriminator->params())},
                              {"count", ck.discriminator->params().size()}};
    h["schedule"] = ck.schedule.to_json();
    h["metadata"] = ck.metadata.is_null() ? nlohmann::json::object() : ck.metadata;
    const std::string header = h.dump();

    std::vector<std::uint8_t> out(kMagic, kMagic + 8);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, header.size());
    out.insert(out.end(), header.begin(), header.end());
    auto blob = [&](std::span<const float> v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
        out.insert(out.end(), p, p + v.size() * sizeof(float));
    };
    blob(ck.generator.params().values());
    if (ck.discriminator) blob(ck.discriminator->params().values());
    return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw FormatError("checkpoint: bad magic");
    std::size_t pos = 8;
    const auto version = take<std::uint32_t>(bytes, pos);
    if (version != kVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const auto hlen = take<std::uint64_t>(bytes, pos);
    if (hlen > bytes.size() - pos) throw FormatError("checkpoint: truncated header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + hlen));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: bad header: ") + e.what());
    }
    pos += hlen;

    Checkpoint ck;
    try {
        ck.generator = Generator<float>(GeneratorArch::from_json(h.at("generator").at("arch")), 0);
        check_refs(ck.generator.params(), h["generator"].at("params"), "generator");
        if (h.contains("discriminator")) {
            ck.discriminator.emplace(DiscriminatorArch::from_json(h["discriminator"].at("arch")), 0);
            check_refs(ck.discriminator->params(), h["discriminator"].at("params"), "discriminator");
        }
        ck.schedule = NoiseSchedule::from_json(h.at("schedule"));
        ck.metadata = h.value("metadata", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: bad header: ") + e.what());
    }
    if (ck.schedule.T() != ck.generator.arch().T) throw FormatError("checkpoint: schedule T differs from generator T");

    read_blob(bytes, pos, ck.generator.params().values());
    if (ck.discriminator) read_blob(bytes, pos, ck.discriminator->params().values());
    if (pos != bytes.size()) throw FormatError("checkpoint: trailing bytes");
    ck.sha256 = sha256_hex(bytes);
    return ck;
}

std::string save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(ck);
    write_file(path, bytes);
    return sha256_hex(bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace fgdm::nn
