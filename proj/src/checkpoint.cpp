// SPDX-License-Identifier: Apache-2.0

#include "roadseg/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace roadseg {

namespace {

constexpr char kMagic[8] = {'R', 'S', 'E', 'G', 'C', 'K', 'P', 'T'};
constexpr uint32_t kFormatVersion = 1;

void append_raw(std::vector<uint8_t>& buf, const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    buf.insert(buf.end(), p, p + n);
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("corrupt checkpoint (truncated): " + path);
    return v;
}

size_t dtype_size(const std::string& d) {
    if (d == "f32") return 4;
    if (d == "f64" || d == "u64") return 8;
    throw ParseError("unknown dtype '" + d + "' in checkpoint");
}

}  // namespace

void ArchiveWriter::add_f32(const std::string& name, const float* data, size_t count) {
    entries_.push_back({name, "f32", count});
    append_raw(payload_, data, count * sizeof(float));
}

void ArchiveWriter::add_f64(const std::string& name, const double* data, size_t count) {
    entries_.push_back({name, "f64", count});
    append_raw(payload_, data, count * sizeof(double));
}

void ArchiveWriter::add_u64(const std::string& name, const uint64_t* data, size_t count) {
    entries_.push_back({name, "u64", count});
    append_raw(payload_, data, count * sizeof(uint64_t));
}

std::string ArchiveWriter::save(const std::string& path) {
    nlohmann::json hdr = header;
    nlohmann::json ents = nlohmann::json::array();
    for (const auto& e : entries_)
        ents.push_back({{"name", e.name}, {"dtype", e.dtype}, {"count", e.count}});
    hdr["entries"] = std::move(ents);
    const std::string hdr_str = hdr.dump();

    const uint64_t payload_hash = fnv1a64(payload_.data(), payload_.size(), fnv1a64(hdr_str));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kFormatVersion);
    write_pod(out, static_cast<uint64_t>(hdr_str.size()));
    out.write(hdr_str.data(), static_cast<std::streamsize>(hdr_str.size()));
    write_pod(out, static_cast<uint64_t>(payload_.size()));
    out.write(reinterpret_cast<const char*>(payload_.data()),
              static_cast<std::streamsize>(payload_.size()));
    write_pod(out, payload_hash);
    if (!out) throw IoError("checkpoint write failed: " + path);
    return to_hex(payload_hash);
}

ArchiveReader::ArchiveReader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError("not a checkpoint file: " + path);
    const auto version = read_pod<uint32_t>(in, path);
    if (version != kFormatVersion)
        throw VersionError("checkpoint format v" + std::to_string(version) + " is incompatible with v" +
                           std::to_string(kFormatVersion) + ": " + path);

    const auto hdr_len = read_pod<uint64_t>(in, path);
    std::string hdr_str(hdr_len, '\0');
    in.read(hdr_str.data(), static_cast<std::streamsize>(hdr_len));
    if (!in) throw IoError("corrupt checkpoint (truncated): " + path);
    try {
        header_ = nlohmann::json::parse(hdr_str);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("corrupt checkpoint header in " + path + ": " + e.what());
    }

    const auto payload_len = read_pod<uint64_t>(in, path);
    payload_.resize(payload_len);
    in.read(reinterpret_cast<char*>(payload_.data()), static_cast<std::streamsize>(payload_len));
    if (!in) throw IoError("corrupt checkpoint (truncated): " + path);
    const auto stored_hash = read_pod<uint64_t>(in, path);
    const uint64_t actual = fnv1a64(payload_.data(), payload_.size(), fnv1a64(hdr_str));
    if (stored_hash != actual) throw IoError("corrupt checkpoint (hash mismatch): " + path);
    content_id_ = to_hex(actual);

    size_t offset = 0;
    if (!header_.contains("entries")) throw ParseError("checkpoint header missing entries: " + path);
    for (const auto& e : header_.at("entries")) {
        Entry ent;
        ent.dtype = e.at("dtype").get<std::string>();
        ent.count = e.at("count").get<size_t>();
        ent.offset = offset;
        offset += ent.count * dtype_size(ent.dtype);
        if (offset > payload_.size()) throw IoError("corrupt checkpoint (payload overrun): " + path);
        entries_.emplace_back(e.at("name").get<std::string>(), ent);
    }
}

bool ArchiveReader::has(const std::string& name) const {
    for (const auto& [n, e] : entries_)
        if (n == name) return true;
    return false;
}

const ArchiveReader::Entry& ArchiveReader::find(const std::string& name, const char* dtype) const {
    for (const auto& [n, e] : entries_) {
        if (n == name) {
            if (e.dtype != dtype)
                throw ParseError("checkpoint entry '" + name + "' has dtype " + e.dtype + ", expected " +
                                 dtype);
            return e;
        }
    }
    throw ParseError("checkpoint entry '" + name + "' not found");
}

std::vector<float> ArchiveReader::f32(const std::string& name) const {
    const Entry& e = find(name, "f32");
    std::vector<float> out(e.count);
    std::memcpy(out.data(), payload_.data() + e.offset, e.count * sizeof(float));
    return out;
}

std::vector<double> ArchiveReader::f64(const std::string& name) const {
    const Entry& e = find(name, "f64");
    std::vector<double> out(e.count);
    std::memcpy(out.data(), payload_.data() + e.offset, e.count * sizeof(double));
    return out;
}

std::vector<uint64_t> ArchiveReader::u64(const std::string& name) const {
    const Entry& e = find(name, "u64");
    std::vector<uint64_t> out(e.count);
    std::memcpy(out.data(), payload_.data() + e.offset, e.count * sizeof(uint64_t));
    return out;
}

}  // namespace roadseg
