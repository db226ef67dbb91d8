// SPDX-License-Identifier: Apache-2.0

#include "roadseg/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace roadseg {

std::string role_name(Role r) {
    switch (r) {
        case Role::LabeledTarget: return "labeled_target";
        case Role::UnlabeledSource: return "unlabeled_source";
        case Role::Eval: return "eval";
    }
    throw ValidationError("unknown role");
}

Role parse_role(const std::string& s) {
    if (s == "labeled_target") return Role::LabeledTarget;
    if (s == "unlabeled_source") return Role::UnlabeledSource;
    if (s == "eval") return Role::Eval;
    throw ValidationError("invalid role '" + s + "' (expected labeled_target, unlabeled_source or eval)");
}

const std::vector<SamplePath>& DatasetManifest::split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) throw ValidationError("manifest '" + this->name + "' has no split '" + name + "'");
    return it->second;
}

namespace {

std::string resolve_path(const std::string& p, const std::string& base_dir) {
    fs::path fp(p);
    if (fp.is_absolute()) return fp.lexically_normal().string();
    return (fs::path(base_dir) / fp).lexically_normal().string();
}

std::set<int> parse_id_set(const json& j, const char* key) {
    std::set<int> out;
    if (!j.contains(key)) return out;
    if (!j.at(key).is_array()) throw ParseError(std::string("manifest key '") + key + "' must be a list");
    for (const auto& v : j.at(key)) out.insert(v.get<int>());
    return out;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed manifest JSON in " + path + ": " + e.what());
    }

    DatasetManifest m;
    m.dir = fs::absolute(fs::path(path)).parent_path().string();
    try {
        m.name = j.at("name").get<std::string>();
        m.resolution_m_per_px = j.at("resolution_m_per_px").get<double>();
        m.role = parse_role(j.at("role").get<std::string>());
    } catch (const json::exception& e) {
        throw ParseError("manifest " + path + " missing or mistyped key: " + e.what());
    }
    if (!(m.resolution_m_per_px > 0.0))
        throw ValidationError("manifest key 'resolution_m_per_px' must be > 0 in " + path);

    if (j.contains("road_class_ids")) m.road_class_ids = parse_id_set(j, "road_class_ids");
    if (j.contains("nodata_ids")) m.nodata_ids = parse_id_set(j, "nodata_ids");
    for (int id : m.road_class_ids)
        if (m.nodata_ids.count(id))
            throw ValidationError("manifest key 'road_class_ids' intersects 'nodata_ids' (id " +
                                  std::to_string(id) + ") in " + path);

    if (j.contains("normalization")) {
        Normalization n;
        try {
            const auto& nj = j.at("normalization");
            for (int c = 0; c < 3; ++c) {
                n.mean[c] = nj.at("mean").at(c).get<double>();
                n.stddev[c] = nj.at("std").at(c).get<double>();
            }
        } catch (const json::exception& e) {
            throw ParseError("manifest key 'normalization' malformed in " + path + ": " + e.what());
        }
        m.normalization = n;
    }

    if (!j.contains("splits") || !j.at("splits").is_object() || j.at("splits").empty())
        throw ValidationError("manifest key 'splits' must be a non-empty object in " + path);

    const bool needs_labels = m.role == Role::LabeledTarget || m.role == Role::Eval;
    std::vector<std::string> missing;
    for (const auto& [split_name, samples] : j.at("splits").items()) {
        if (!samples.is_array() || samples.empty())
            throw ValidationError("manifest split '" + split_name + "' is empty in " + path);
        std::vector<SamplePath> parsed;
        parsed.reserve(samples.size());
        for (const auto& s : samples) {
            SamplePath sp;
            try {
                sp.image_path = resolve_path(s.at("image").get<std::string>(), m.dir);
                if (s.contains("mask") && !s.at("mask").is_null())
                    sp.mask_path = resolve_path(s.at("mask").get<std::string>(), m.dir);
                if (s.contains("vector_roads") && !s.at("vector_roads").is_null())
                    sp.vector_roads_path = resolve_path(s.at("vector_roads").get<std::string>(), m.dir);
            } catch (const json::exception& e) {
                throw ParseError("manifest split '" + split_name + "' has a malformed sample in " + path +
                                 ": " + e.what());
            }
            if (needs_labels && !sp.mask_path && !sp.vector_roads_path)
                throw ValidationError("role '" + role_name(m.role) + "' requires a mask or vector_roads for "
                                      "every sample; violated in split '" + split_name + "' of " + path);
            for (const auto* p : {&sp.image_path}) {
                if (!fs::exists(*p)) missing.push_back(*p);
            }
            if (sp.mask_path && !fs::exists(*sp.mask_path)) missing.push_back(*sp.mask_path);
            if (sp.vector_roads_path && !fs::exists(*sp.vector_roads_path))
                missing.push_back(*sp.vector_roads_path);
            parsed.push_back(std::move(sp));
        }
        m.splits.emplace(split_name, std::move(parsed));
    }
    if (!missing.empty()) {
        std::string msg = "manifest " + path + " references missing files:";
        for (const auto& p : missing) msg += "\n  " + p;
        throw IoError(msg);
    }
    return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    const fs::path base = fs::absolute(fs::path(path)).parent_path();
    json j;
    j["schema_version"] = 1;
    j["name"] = m.name;
    j["resolution_m_per_px"] = m.resolution_m_per_px;
    j["role"] = role_name(m.role);
    j["road_class_ids"] = m.road_class_ids;
    j["nodata_ids"] = m.nodata_ids;
    if (m.normalization) {
        j["normalization"] = {{"mean", m.normalization->mean}, {"std", m.normalization->stddev}};
    }
    json splits = json::object();
    for (const auto& [name, samples] : m.splits) {
        json arr = json::array();
        for (const auto& s : samples) {
            json rec;
            rec["image"] = fs::path(s.image_path).lexically_proximate(base).string();
            if (s.mask_path) rec["mask"] = fs::path(*s.mask_path).lexically_proximate(base).string();
            if (s.vector_roads_path)
                rec["vector_roads"] = fs::path(*s.vector_roads_path).lexically_proximate(base).string();
            arr.push_back(std::move(rec));
        }
        splits[name] = std::move(arr);
    }
    j["splits"] = std::move(splits);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace roadseg
