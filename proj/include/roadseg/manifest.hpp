// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "roadseg/common.hpp"

namespace roadseg {

enum class Role { LabeledTarget, UnlabeledSource, Eval };

std::string role_name(Role r);
Role parse_role(const std::string& s);

// One sample of a dataset. Paths are absolute after parsing (relative entries
// resolve against the manifest's directory).
struct SamplePath {
    std::string image_path;
    std::optional<std::string> mask_path;
    std::optional<std::string> vector_roads_path;
};

// Per-channel input statistics, computed at preprocessing time.
struct Normalization {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> stddev{1.0, 1.0, 1.0};
};

struct DatasetManifest {
    std::string name;
    double resolution_m_per_px = 0.0;
    Role role = Role::LabeledTarget;
    std::map<std::string, std::vector<SamplePath>> splits;
    std::set<int> road_class_ids{1};
    std::set<int> nodata_ids{255};
    std::optional<Normalization> normalization;
    std::string dir;  // directory the manifest was loaded from

    const std::vector<SamplePath>& split(const std::string& name) const;
    bool has_split(const std::string& name) const { return splits.count(name) > 0; }
};

// Parses and validates a manifest JSON file. Checks invariants and that every
// referenced file exists; failures raise ParseError / ValidationError /
// IoError with the offending key or path list in the message.
DatasetManifest parse_manifest(const std::string& path);

// Writes a manifest; `paths_relative_to` rewrites sample paths relative to
// the output directory so stores stay relocatable.
void save_manifest(const DatasetManifest& m, const std::string& path);

}  // namespace roadseg
