#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "augscale/augment.hpp"
#include "augscale/dataset.hpp"
#include "augscale/par.hpp"

namespace augscale {

struct DinoCheckpoint;  // dino.hpp

enum class DistanceMetric { l1, l2 };
enum class DistanceSpace { pixel, feature };

struct PositivePair {
    Image view_a;
    Image view_b;
    std::int64_t source_id = 0;
};

struct NegativePair {
    Image view_a;
    Image view_b;
    std::int64_t source_id_a = 0;
    std::int64_t source_id_b = 0;
};

struct PairSet {
    std::vector<PositivePair> positives;
    std::vector<NegativePair> negatives;
};

struct DistanceStats {
    DistanceMetric metric = DistanceMetric::l2;
    DistanceSpace space = DistanceSpace::pixel;
    std::vector<double> values_pos;
    std::vector<double> values_neg;
    std::vector<double> hist_pos;  // normalized to mass 1, shared bin edges
    std::vector<double> hist_neg;
    double hist_max = 0.0;  // bins span [0, hist_max]
    double mean_pos = 0.0, mean_neg = 0.0;
    double std_pos = 0.0, std_neg = 0.0;
};

struct SeparabilityReport {
    double gap = 0.0;          // mean_neg - mean_pos
    double overlap = 0.0;      // histogram overlap coefficient in [0,1]
    double auroc_pairs = 0.0;  // P(random negative distance > random positive), ties half
};

// Positives: two global views of one uniformly drawn image. Negatives: one
// global view each of two distinct images. Deterministic per rng stream.
PairSet sample_pairs(const Dataset& ds, const AugmentationPolicy& policy, int n_pos, int n_neg,
                     RngStream rng, par::Exec exec = par::Exec::parallel);

// L1 = sum |a-b|; L2 = sqrt(sum (a-b)^2). Throws UsageError on length mismatch.
double pair_distance(const std::vector<float>& a, const std::vector<float>& b,
                     DistanceMetric metric);

// Histogramming/statistics half of analyze; exposed so distribution-level
// properties can be driven with synthetic distance lists.
DistanceStats make_distance_stats(std::vector<double> values_pos, std::vector<double> values_neg,
                                  DistanceMetric metric, DistanceSpace space, int bins);

// Computes all pair distances (pixel space: flattened pixels after resizing
// both views to a common size; feature space: encoder embeddings from the
// checkpoint, L2-normalized when normalize_features). Parallel over pairs.
DistanceStats analyze_pairs(const PairSet& pairs, DistanceMetric metric, DistanceSpace space,
                            const DinoCheckpoint* encoder, int bins,
                            bool normalize_features = true,
                            par::Exec exec = par::Exec::parallel);

SeparabilityReport separability(const DistanceStats& stats);

}  // namespace augscale
