// SPDX-License-Identifier: Apache-2.0

#include "roadseg/model.hpp"

namespace roadseg {

void ModelConfig::validate() const {
    if (n_classes < 2) throw ValidationError("model: n_classes must be >= 2");
    if (width < 4) throw ValidationError("model: width must be >= 4");
    if (depth < 1) throw ValidationError("model: depth must be >= 1");
    bool known = false;
    for (const auto& a : arch_registry()) known = known || a.name == arch;
    if (!known) throw ValidationError("model: unknown arch '" + arch + "'");
}

const std::vector<ArchInfo>& arch_registry() {
    static const std::vector<ArchInfo> regs = {
        {"toynet", true},
        {"unetpp", false},  // registry extension point
        {"hrnet", false},   // registry extension point
    };
    return regs;
}

}  // namespace roadseg
