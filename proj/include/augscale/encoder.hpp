#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "augscale/image.hpp"
#include "augscale/rng.hpp"
#include "augscale/tape.hpp"

namespace augscale {

// Patch-embedding encoder with mean pooling over patches, a two-layer GELU
// trunk, and a projection head ending in a column-L2-weight-normalized
// linear layer. Consumes any view whose sides are divisible by patch_size,
// which is what lets one encoder read both global and local crops.
struct EncoderConfig {
    int patch_size = 8;
    int embed_dim = 64;
    int hidden_dim = 128;
    int out_dim = 256;  // K
    int channels = 1;
};

struct EncoderWeights {
    EncoderConfig config;
    Mat<float> patch_w, patch_b;      // (patch_dim x embed), (1 x embed)
    Mat<float> trunk_w1, trunk_b1;    // (embed x hidden), (1 x hidden)
    Mat<float> trunk_w2, trunk_b2;    // (hidden x embed), (1 x embed)
    Mat<float> head_w1, head_b1;      // (embed x hidden), (1 x hidden)
    Mat<float> head_w2;               // (hidden x K), column-normalized at use

    // Stable enumeration used by the optimizer, EMA and serialization.
    std::vector<std::pair<std::string, Mat<float>*>> named_tensors();
    std::vector<std::pair<std::string, const Mat<float>*>> named_tensors() const;
};

EncoderWeights init_encoder(const EncoderConfig& config, std::uint64_t seed);

// Flattens an image into its (n_patches x patch_dim) patch matrix, patches
// row-major, pixels row-major within a patch, channels interleaved.
// Throws DataError when the image sides are not divisible by patch_size.
Mat<float> image_to_patches(const Image& img, const EncoderConfig& config);

struct EncoderOutput {
    std::vector<float> embedding;  // trunk output, pre-head
    std::vector<float> logits;     // head output, length K
};

// Plain (tape-free) forward pass; used for the teacher, feature extraction
// and inference.
EncoderOutput forward_encoder(const EncoderWeights& w, const Image& img);

// Tape node handles for one set of encoder parameters.
template <typename T>
struct EncoderNodes {
    typename Tape<T>::NodeId patch_w, patch_b;
    typename Tape<T>::NodeId trunk_w1, trunk_b1, trunk_w2, trunk_b2;
    typename Tape<T>::NodeId head_w1, head_b1, head_w2;
};

template <typename T>
EncoderNodes<T> register_encoder_params(Tape<T>& tape, const EncoderWeights& w) {
    return EncoderNodes<T>{
        tape.param(w.patch_w.template cast<T>()),  tape.param(w.patch_b.template cast<T>()),
        tape.param(w.trunk_w1.template cast<T>()), tape.param(w.trunk_b1.template cast<T>()),
        tape.param(w.trunk_w2.template cast<T>()), tape.param(w.trunk_b2.template cast<T>()),
        tape.param(w.head_w1.template cast<T>()),  tape.param(w.head_b1.template cast<T>()),
        tape.param(w.head_w2.template cast<T>())};
}

template <typename T>
struct EncoderForwardNodes {
    typename Tape<T>::NodeId embedding;
    typename Tape<T>::NodeId logits;
};

// Differentiable forward: patches -> linear embed -> mean pool -> trunk ->
// head. The head bottleneck is L2-normalized and the final layer carries
// unit-norm weight columns, so logits are cosine scores in [-1, 1] and the
// sharpening temperatures act on a calibrated scale.
template <typename T>
EncoderForwardNodes<T> forward_encoder_tape(Tape<T>& tape, const EncoderNodes<T>& p,
                                            Mat<T> patches) {
    const auto x = tape.constant(std::move(patches));
    const auto embedded = tape.add_row(tape.matmul(x, p.patch_w), p.patch_b);
    const auto pooled = tape.mean_rows(embedded);
    const auto h = tape.gelu(tape.add_row(tape.matmul(pooled, p.trunk_w1), p.trunk_b1));
    const auto emb = tape.add_row(tape.matmul(h, p.trunk_w2), p.trunk_b2);
    const auto g = tape.gelu(tape.add_row(tape.matmul(emb, p.head_w1), p.head_b1));
    const auto logits = tape.matmul(tape.row_l2norm(g), tape.col_l2norm(p.head_w2));
    return {emb, logits};
}

}  // namespace augscale
