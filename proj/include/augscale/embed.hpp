#pragma once

#include <cstdint>
#include <vector>

#include "augscale/image.hpp"
#include "augscale/par.hpp"
#include "augscale/tape.hpp"

namespace augscale {

struct Pca2dResult {
    Mat<double> coords;      // n x 2
    Mat<double> components;  // d x 2, unit-norm, mutually orthogonal
    double variance_first = 0.0;
    double variance_second = 0.0;
    bool degenerate = false;  // all-identical input, coordinates are zero
};

// Top-2 principal components of mean-centered features via power iteration
// with deflation. Requires n >= 3.
Pca2dResult pca_2d(const Mat<double>& features);

struct TsneParams {
    double perplexity = 30.0;
    int iterations = 500;
    std::uint64_t seed = 0;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
};

// Exact O(n^2) t-SNE. Per-point bandwidths are binary-searched until
// |log2(perplexity) - log2(target)| <= 1e-4; affinities symmetrized;
// gradient descent with momentum, gains and early exaggeration.
// Deterministic per seed. Requires 3 <= perplexity < n/3 and n <= 5000.
Mat<double> tsne_2d(const Mat<double>& features, const TsneParams& params,
                    par::Exec exec = par::Exec::parallel);

// Achieved log2-perplexity error per point for the given features and
// target; exposed so the binary-search contract is directly testable.
std::vector<double> tsne_perplexity_errors(const Mat<double>& features, double perplexity,
                                           par::Exec exec = par::Exec::parallel);

// Quick-look scatter raster: coordinates normalized into the frame, one dot
// per point, gray level keyed by label.
Image rasterize_scatter(const Mat<double>& coords, const std::vector<int>& labels, int size);

}  // namespace augscale
