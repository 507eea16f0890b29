#pragma once

#include <string>

#include "augscale/dino.hpp"

namespace augscale {

// Binary weight file: 8-byte magic "ASLB0001", little-endian u64 header
// length, a JSON header listing tensor names/shapes/offsets plus the
// embedded DinoConfig and training log, then raw little-endian f32 payloads
// in header order. Tensor names carry "student."/"teacher." prefixes plus
// the "center" vector.
void save_checkpoint(const DinoCheckpoint& ck, const std::string& path);
DinoCheckpoint load_checkpoint(const std::string& path);

}  // namespace augscale
