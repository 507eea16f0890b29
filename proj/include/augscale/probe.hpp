#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "augscale/dataset.hpp"
#include "augscale/dino.hpp"
#include "augscale/metrics.hpp"
#include "augscale/par.hpp"

namespace augscale {

struct FeatureTable {
    Mat<float> features;      // n x embed_dim
    std::vector<int> labels;  // length n
    std::string checkpoint_id;
    bool normalized = false;
};

// Pre-head embeddings per image, teacher weights by default; rows follow the
// dataset order. With normalize, every row is scaled to unit L2 norm.
FeatureTable extract_features(const DinoCheckpoint& ck, const LabeledDataset& ds,
                              bool use_teacher = true, bool normalize = true,
                              par::Exec exec = par::Exec::parallel);

struct LinearProbeConfig {
    int epochs = 300;
    double lr = 1.0;
    std::uint64_t seed = 0;
};

struct LinearProbe {
    Mat<float> weights;  // d x C
    Mat<float> bias;     // 1 x C
};

struct LinearProbeOutcome {
    LinearProbe probe;
    ProbeResult result;  // on the validation table
};

// Multinomial logistic regression on frozen features via full-batch
// gradient descent on the autodiff tape.
LinearProbeOutcome train_linear_probe(const FeatureTable& train, const FeatureTable& val,
                                      const LinearProbeConfig& config);

Mat<double> linear_probe_scores(const LinearProbe& probe, const FeatureTable& table);

// Cosine-similarity k-NN voting; class scores are vote fractions. Neighbor
// ties break on the training index for determinism.
Mat<double> knn_scores(const FeatureTable& train, const FeatureTable& test, int k);
ProbeResult knn_probe(const FeatureTable& train, const FeatureTable& test, int k);

}  // namespace augscale
