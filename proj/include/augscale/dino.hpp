#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "augscale/augment.hpp"
#include "augscale/dataset.hpp"
#include "augscale/encoder.hpp"
#include "augscale/par.hpp"

namespace augscale {

struct DinoConfig {
    std::string policy_name = "weak";
    double teacher_temp = 0.04;
    double student_temp = 0.1;
    double center_momentum = 0.9;
    double ema_momentum = 0.996;
    int epochs = 20;
    int batch_size = 2;
    double lr = 2e-3;
    double weight_decay = 1e-4;
    std::uint64_t seed = 1;
    EncoderConfig encoder;
    // debug switch for collapse telemetry: with centering off the teacher
    // entropy is expected to fall toward zero (logged, never asserted)
    bool disable_centering = false;
};

std::string dino_config_to_json(const DinoConfig& config);
DinoConfig dino_config_from_json(const std::string& text);

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double teacher_entropy = 0.0;
    double wall_seconds = 0.0;
};

struct DinoCheckpoint {
    EncoderWeights student;
    EncoderWeights teacher;
    std::vector<float> center;  // length K
    DinoConfig config;
    std::vector<EpochLog> log;
};

// Centered, sharpened teacher distribution: softmax((logits - center)/tau_t).
std::vector<float> teacher_target(const std::vector<float>& logits,
                                  const std::vector<float>& center, double tau_t);

// Self-distillation loss: teacher globals are centered, sharpened at tau_t
// and treated as constants; the loss is the mean cross-entropy over ordered
// (teacher global g, student view v) pairs with v != g as views. Computed in
// double; the training path builds the identical quantity on the tape.
double dino_loss(const std::vector<std::vector<float>>& student_logits,
                 const std::vector<std::vector<float>>& teacher_logits,
                 const std::vector<float>& center, double tau_s, double tau_t);

// center' = m*center + (1-m)*mean of batch teacher logit rows.
std::vector<float> update_center(const std::vector<float>& center,
                                 const std::vector<std::vector<float>>& teacher_logits_batch,
                                 double m);

// theta_teacher <- m*theta_teacher + (1-m)*theta_student, every tensor.
void ema_update(EncoderWeights& teacher, const EncoderWeights& student, double m);

// Per-image gradient contribution: loss value, teacher logit rows for the
// globals, and parameter gradients in named_tensors() order.
struct ImageStepResult {
    double loss = 0.0;
    double teacher_entropy_sum = 0.0;  // over the image's global views
    std::vector<std::vector<float>> teacher_logits;
    std::vector<Mat<float>> grads;
};

// Forward/backward for one image's multi-crop views against the current
// student/teacher; pure given its inputs, so the batch loop may run it in
// parallel and reduce the per-image gradients in index order.
ImageStepResult image_step(const MultiCropViews& views, const EncoderWeights& student,
                           const EncoderWeights& teacher, const std::vector<float>& center,
                           const DinoConfig& config);

// Full pre-training loop (teacher starts as a copy of the freshly
// initialized student). Deterministic in config. Throws NumericalError with
// the epoch named if the loss becomes non-finite. The first overload
// resolves config.policy_name; the second takes the policy explicitly.
DinoCheckpoint pretrain(const Dataset& ds, const DinoConfig& config,
                        par::Exec exec = par::Exec::parallel);
DinoCheckpoint pretrain(const Dataset& ds, const DinoConfig& config,
                        const AugmentationPolicy& policy,
                        par::Exec exec = par::Exec::parallel);

}  // namespace augscale
