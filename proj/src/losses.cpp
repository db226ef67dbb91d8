// SPDX-License-Identifier: Apache-2.0

#include "roadseg/losses.hpp"

#include <cmath>

namespace roadseg {

void AlphaSchedule::validate() const {
    if (alpha_max < 0.0) throw ValidationError("alpha schedule: alpha_max must be >= 0");
    if (ramp_iters < 1) throw ValidationError("alpha schedule: ramp_iters must be >= 1");
}

void MccConfig::validate(int n_classes) const {
    if (!(temperature > 0.0)) throw ValidationError("mcc: temperature must be > 0");
    if (pixel_subsample && *pixel_subsample < n_classes)
        throw ValidationError("mcc: pixel_subsample must be >= n_classes");
}

double alpha_at(const AlphaSchedule& schedule, int64_t iteration) {
    schedule.validate();
    if (iteration < 0) throw ValidationError("alpha_at: iteration must be >= 0");
    if (iteration == 0) return 0.0;
    if (iteration >= schedule.ramp_iters) return schedule.alpha_max;
    const double x = static_cast<double>(iteration) / static_cast<double>(schedule.ramp_iters);
    if (schedule.shape == AlphaSchedule::Shape::Linear) return schedule.alpha_max * x;
    // logistic ramp, affinely normalized so it hits 0 at x=0 and 1 at x=1
    constexpr double k = 12.0;
    auto sig = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
    const double lo = sig(-k / 2.0), hi = sig(k / 2.0);
    return schedule.alpha_max * (sig(k * (x - 0.5)) - lo) / (hi - lo);
}

}  // namespace roadseg
