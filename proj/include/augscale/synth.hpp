#pragma once

#include <cstdint>

#include "augscale/dataset.hpp"
#include "augscale/par.hpp"

namespace augscale {

enum class SynthFamily { dense, sparse };

// Parametric image families standing in for the dense-vs-sparse contrast:
// the dense family shares one global template (bright disc plus curved dark
// filaments) and classes differ only by small lesion motifs; the sparse
// family gives every class an independent random texture. Instances inside a
// class differ by base_variation-scaled smooth warps and intensity noise.
struct SynthConfig {
    SynthFamily family = SynthFamily::dense;
    int class_count = 4;
    int per_class = 50;
    int image_size = 64;
    float base_variation = 0.25f;  // in [0,1]; 0 makes class members identical
    std::uint64_t seed = 1;
};

// Deterministic in config; images generated per-class-major with ids 0..N-1.
LabeledDataset generate_synthetic(const SynthConfig& config,
                                  par::Exec exec = par::Exec::parallel);

// Monte Carlo mean pixel L2 distance over random image pairs; with
// cross_class_only, both endpoints are drawn from different classes.
double mean_pairwise_pixel_distance(const LabeledDataset& ds, int n_pairs,
                                    std::uint64_t seed, bool cross_class_only);

}  // namespace augscale
