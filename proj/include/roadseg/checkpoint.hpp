// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadseg/common.hpp"

namespace roadseg {

// Versioned single-file archive: magic + format version, a JSON header, a
// raw little-endian payload of named arrays and a trailing payload hash.
// Truncation or bit rot surfaces as IoError, format drift as VersionError.
class ArchiveWriter {
public:
    nlohmann::json header;

    void add_f32(const std::string& name, const float* data, size_t count);
    void add_f64(const std::string& name, const double* data, size_t count);
    void add_u64(const std::string& name, const uint64_t* data, size_t count);

    // Returns the content id (hex hash over header entries + payload).
    std::string save(const std::string& path);

private:
    struct Entry {
        std::string name;
        std::string dtype;
        size_t count;
    };
    std::vector<Entry> entries_;
    std::vector<uint8_t> payload_;
};

class ArchiveReader {
public:
    explicit ArchiveReader(const std::string& path);

    const nlohmann::json& header() const { return header_; }
    const std::string& content_id() const { return content_id_; }

    bool has(const std::string& name) const;
    std::vector<float> f32(const std::string& name) const;
    std::vector<double> f64(const std::string& name) const;
    std::vector<uint64_t> u64(const std::string& name) const;

private:
    struct Entry {
        std::string dtype;
        size_t count = 0;
        size_t offset = 0;
    };
    const Entry& find(const std::string& name, const char* dtype) const;

    nlohmann::json header_;
    std::vector<uint8_t> payload_;
    std::vector<std::pair<std::string, Entry>> entries_;
    std::string content_id_;
};

}  // namespace roadseg
