// SPDX-License-Identifier: Apache-2.0

#include "roadseg/checkpoint.hpp"
#include "roadseg/config.hpp"
#include "roadseg/model.hpp"

namespace roadseg {

std::string save_model_checkpoint(const ToyNetF& net, const Normalization& norm,
                                  double train_resolution_m_per_px, const std::string& path) {
    ArchiveWriter w;
    w.header["kind"] = "model";
    w.header["model_config"] = net.config();
    w.header["normalization"] = {{"mean", norm.mean}, {"std", norm.stddev}};
    w.header["train_resolution_m_per_px"] = train_resolution_m_per_px;
    for (const auto& p : net.params()) w.add_f32(p.name, p.value.data(), p.value.size());
    return w.save(path);
}

LoadedModel load_model_checkpoint(const std::string& path) {
    ArchiveReader r(path);
    if (!r.header().contains("kind") || r.header().at("kind") != "model")
        throw ParseError("not a model checkpoint: " + path);
    LoadedModel out;
    out.config = r.header().at("model_config").get<ModelConfig>();
    for (int c = 0; c < 3; ++c) {
        out.normalization.mean[c] = r.header().at("normalization").at("mean").at(c).get<double>();
        out.normalization.stddev[c] = r.header().at("normalization").at("std").at(c).get<double>();
    }
    out.train_resolution_m_per_px = r.header().at("train_resolution_m_per_px").get<double>();
    out.checkpoint_id = r.content_id();
    for (const auto& e : r.header().at("entries"))
        out.param_values.emplace_back(e.at("name").get<std::string>(),
                                      r.f32(e.at("name").get<std::string>()));
    return out;
}

}  // namespace roadseg
