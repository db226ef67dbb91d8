// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadseg/tiles.hpp"

namespace roadseg {

// Two synthetic overhead-imagery domains sharing the same road geometry
// process. Styles differ in background palette, texture frequency, noise and
// road contrast; the road layout for a given seed is identical across styles.
enum class SynthStyle { A, B };

SynthStyle parse_style(const std::string& s);
std::string style_name(SynthStyle s);

// Deterministic given (style, seed). Every tile's road-pixel fraction lies in
// [0.01, 0.25]; masks are the exact rasterizations of the drawn centerlines.
std::vector<TileSample> generate_synthetic_domain(SynthStyle style, int n_images, int size,
                                                  uint64_t seed);

// Writes tiles + store index + role manifests (labeled / unlabeled / eval)
// under out_dir. The train/eval split is 80/20; the eval manifest is only
// written when the eval split is non-empty. Idempotent for identical args.
void write_synth_dataset(const std::string& out_dir, SynthStyle style, int n_images, int size,
                         uint64_t seed);

}  // namespace roadseg
