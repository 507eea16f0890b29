#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "augscale/image.hpp"

namespace augscale {

// Unlabeled image collection; source_ids are stable identifiers that survive
// splits and shuffles (RNG streams and pair bookkeeping key off them).
struct Dataset {
    std::vector<Image> images;
    std::vector<std::int64_t> source_ids;

    std::size_t size() const { return images.size(); }
};

struct LabeledDataset {
    Dataset dataset;
    std::vector<int> labels;  // class indices in [0, class_count)
    int class_count = 0;

    std::size_t size() const { return dataset.size(); }
};

// Directory layout: one PGM/PPM per item plus manifest.json
// {"classes": C, "items": [{"file":..., "label":..., "id":...}, ...]}.
void write_dataset_dir(const LabeledDataset& ds, const std::string& dir);
LabeledDataset load_dataset_dir(const std::string& dir);

struct SplitFractions {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

struct SplitResult {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
};

// Stratified per class, disjoint, union == input, deterministic in seed.
// Throws UsageError when a fraction is non-positive or the sum is not 1, and
// DataError when a class is too small to put one item in every part.
SplitResult split_stratified(const LabeledDataset& ds, SplitFractions fractions,
                             std::uint64_t seed);

}  // namespace augscale
