#include "augscale/encoder.hpp"

#include <cmath>

#include "augscale/error.hpp"

namespace augscale {

std::vector<std::pair<std::string, Mat<float>*>> EncoderWeights::named_tensors() {
    return {{"patch_w", &patch_w},   {"patch_b", &patch_b},   {"trunk_w1", &trunk_w1},
            {"trunk_b1", &trunk_b1}, {"trunk_w2", &trunk_w2}, {"trunk_b2", &trunk_b2},
            {"head_w1", &head_w1},   {"head_b1", &head_b1},   {"head_w2", &head_w2}};
}

std::vector<std::pair<std::string, const Mat<float>*>> EncoderWeights::named_tensors() const {
    return {{"patch_w", &patch_w},   {"patch_b", &patch_b},   {"trunk_w1", &trunk_w1},
            {"trunk_b1", &trunk_b1}, {"trunk_w2", &trunk_w2}, {"trunk_b2", &trunk_b2},
            {"head_w1", &head_w1},   {"head_b1", &head_b1},   {"head_w2", &head_w2}};
}

EncoderWeights init_encoder(const EncoderConfig& config, std::uint64_t seed) {
    if (config.patch_size < 1 || config.embed_dim < 1 || config.hidden_dim < 1 ||
        config.out_dim < 1 || (config.channels != 1 && config.channels != 3))
        throw UsageError("bad encoder configuration");
    const int patch_dim = config.patch_size * config.patch_size * config.channels;
    EncoderWeights w;
    w.config = config;

    RngStream root(seed, 0xE4C0DE);
    auto gaussian_mat = [&](int rows, int cols, std::uint64_t tag, float gain) {
        Mat<float> m(rows, cols);
        RngStream rng = root.split(tag);
        const float scale = gain / std::sqrt(static_cast<float>(rows));
        for (auto& x : m.v) x = scale * rng.next_gaussian();
        return m;
    };
    w.patch_w = gaussian_mat(patch_dim, config.embed_dim, 1, 1.0f);
    w.patch_b = Mat<float>(1, config.embed_dim);
    w.trunk_w1 = gaussian_mat(config.embed_dim, config.hidden_dim, 2, 2.0f);
    w.trunk_b1 = Mat<float>(1, config.hidden_dim);
    w.trunk_w2 = gaussian_mat(config.hidden_dim, config.embed_dim, 3, 2.0f);
    w.trunk_b2 = Mat<float>(1, config.embed_dim);
    w.head_w1 = gaussian_mat(config.embed_dim, config.hidden_dim, 4, 2.0f);
    w.head_b1 = Mat<float>(1, config.hidden_dim);
    w.head_w2 = gaussian_mat(config.hidden_dim, config.out_dim, 5, 1.0f);
    return w;
}

Mat<float> image_to_patches(const Image& img, const EncoderConfig& config) {
    const int p = config.patch_size;
    if (img.width % p != 0 || img.height % p != 0)
        throw DataError("image size " + std::to_string(img.width) + "x" +
                        std::to_string(img.height) + " not divisible by patch size " +
                        std::to_string(p));
    if (img.channels != config.channels)
        throw DataError("image channels do not match encoder configuration");
    const int nx = img.width / p;
    const int ny = img.height / p;
    Mat<float> patches(nx * ny, p * p * config.channels);
    int row = 0;
    for (int py = 0; py < ny; ++py)
        for (int px = 0; px < nx; ++px, ++row) {
            int col = 0;
            for (int y = 0; y < p; ++y)
                for (int x = 0; x < p; ++x)
                    for (int c = 0; c < img.channels; ++c)
                        patches(row, col++) = img.at(px * p + x, py * p + y, c);
        }
    return patches;
}

namespace {

std::vector<float> linear(const std::vector<float>& x, const Mat<float>& w, const Mat<float>* b) {
    std::vector<float> out(w.cols, 0.0f);
    for (int i = 0; i < w.rows; ++i) {
        const float xv = x[i];
        if (xv == 0.0f) continue;
        const float* wrow = &w.v[static_cast<std::size_t>(i) * w.cols];
        for (int j = 0; j < w.cols; ++j) out[j] += xv * wrow[j];
    }
    if (b)
        for (int j = 0; j < w.cols; ++j) out[j] += (*b)(0, j);
    return out;
}

void gelu_inplace(std::vector<float>& x) {
    for (float& v : x) v = 0.5f * v * (1.0f + std::erf(v * 0.70710678f));
}

}  // namespace

EncoderOutput forward_encoder(const EncoderWeights& w, const Image& img) {
    const Mat<float> patches = image_to_patches(img, w.config);

    // mean over patch embeddings == embed(mean patch); pool first, cheaper
    std::vector<float> mean_patch(patches.cols, 0.0f);
    for (int r = 0; r < patches.rows; ++r)
        for (int c = 0; c < patches.cols; ++c) mean_patch[c] += patches(r, c);
    for (auto& v : mean_patch) v /= static_cast<float>(patches.rows);

    std::vector<float> pooled = linear(mean_patch, w.patch_w, &w.patch_b);
    std::vector<float> h = linear(pooled, w.trunk_w1, &w.trunk_b1);
    gelu_inplace(h);
    EncoderOutput out;
    out.embedding = linear(h, w.trunk_w2, &w.trunk_b2);
    std::vector<float> g = linear(out.embedding, w.head_w1, &w.head_b1);
    gelu_inplace(g);
    // cosine logits: unit bottleneck against unit weight columns
    double gnorm = 0.0;
    for (float v : g) gnorm += static_cast<double>(v) * v;
    const float ginv = 1.0f / std::max(static_cast<float>(std::sqrt(gnorm)), 1e-12f);
    for (float& v : g) v *= ginv;
    out.logits.assign(w.head_w2.cols, 0.0f);
    std::vector<float> norms(w.head_w2.cols, 0.0f);
    for (int r = 0; r < w.head_w2.rows; ++r)
        for (int c = 0; c < w.head_w2.cols; ++c)
            norms[c] += w.head_w2(r, c) * w.head_w2(r, c);
    for (auto& n : norms) n = std::max(std::sqrt(n), 1e-12f);
    for (int r = 0; r < w.head_w2.rows; ++r) {
        const float gv = g[r];
        if (gv == 0.0f) continue;
        for (int c = 0; c < w.head_w2.cols; ++c) out.logits[c] += gv * w.head_w2(r, c) / norms[c];
    }
    return out;
}

}  // namespace augscale
