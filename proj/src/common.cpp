// SPDX-License-Identifier: Apache-2.0

#include "roadseg/common.hpp"

#include <cstdio>

namespace roadseg {

std::string to_hex(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

}  // namespace roadseg
