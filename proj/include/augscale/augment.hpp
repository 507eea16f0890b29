#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "augscale/dataset.hpp"
#include "augscale/image.hpp"
#include "augscale/par.hpp"
#include "augscale/rng.hpp"

namespace augscale {

struct ScaleRange {
    double lo = 0.0;
    double hi = 1.0;
};

struct BlurSettings {
    // Nominal strength on the 224-px convention (0.1 -> sigma up to 2 px at
    // 224); the pixel sigma bound scales with the view side, see
    // blur_sigma_bound().
    double sigma_max = 0.1;
    double p = 0.5;
};

struct NoiseSettings {
    double std = 0.1;
    double p = 0.5;
};

struct BiasFieldSettings {
    double coeff_scale = 0.1;
    int order = 3;
    double p = 0.5;
};

// A named multi-crop augmentation policy: crop scale ranges, jitter
// strengths, and the optional medical operators.
struct AugmentationPolicy {
    std::string name;
    ScaleRange local_crop_scale{0.05, 0.4};
    ScaleRange global_crop_scale{0.4, 1.0};
    int n_global = 2;
    int n_local = 4;
    int global_size = 64;
    int local_size = 32;
    double brightness = 0.4;
    double contrast = 0.4;
    std::optional<BlurSettings> blur;
    std::optional<NoiseSettings> noise;
    std::optional<BiasFieldSettings> bias_field;
    double hflip_p = 0.5;
};

// Built-ins: "strong", "weak", "weak_med". Throws UsageError on other names.
AugmentationPolicy builtin_policy(const std::string& name);
std::vector<std::string> builtin_policy_names();

std::string policy_to_json(const AugmentationPolicy& policy);
AugmentationPolicy policy_from_json(const std::string& text);

// Resolve either a built-in name or a path to a policy JSON file.
AugmentationPolicy resolve_policy(const std::string& name_or_path);

struct MultiCropViews {
    std::int64_t source_id = 0;
    std::vector<Image> globals;
    std::vector<Image> locals;
};

// ---- individual operators ----------------------------------------------

struct CropRect {
    int x = 0, y = 0, w = 0, h = 0;
    bool fallback = false;  // center-crop fallback after 10 rejected draws
};

// Samples target area uniformly in scale*(source area) and aspect ratio
// log-uniformly in [ar_lo, ar_hi]; position uniform fully inside the image.
CropRect sample_crop_rect(int width, int height, ScaleRange scale, double ar_lo, double ar_hi,
                          RngStream& rng);

Image random_resized_crop(const Image& img, ScaleRange scale, int out_size, RngStream& rng);

Image hflip(const Image& img);

// Deterministic core: brightness v*fb then contrast about the image mean
// (or the reverse order), final clamp to [0,1]. Factors exactly 1 skip.
Image color_jitter_with(const Image& img, float f_brightness, float f_contrast,
                        bool brightness_first);
// Draws fb ~ U[max(0,1-b),1+b], fc ~ U[max(0,1-c),1+c] and a random order.
Image color_jitter(const Image& img, double brightness, double contrast, RngStream& rng);

// Separable Gaussian, kernel radius ceil(3*sigma), normalized, reflect
// padding; sigma == 0 is the identity.
Image gaussian_blur(const Image& img, double sigma);

// v <- clamp(v + std * g) with one standard normal per pixel value.
Image gaussian_noise(const Image& img, double std, RngStream& rng);

// Multiplies by exp(P(u,v)) for a random polynomial of the given order with
// coefficients uniform in [-coeff_scale, coeff_scale]; u,v span [-1,1].
Image bias_field_with(const Image& img, const std::vector<double>& coeffs, int order);
Image random_bias_field(const Image& img, double coeff_scale, int order, RngStream& rng);

// Pixel sigma upper bound for a view: nominal * min(w,h)/11.2, i.e. the
// nominal 0.1 maps to 2 px at the 224-px convention.
double blur_sigma_bound(double sigma_max_nominal, int view_w, int view_h);

// ---- pipelines -----------------------------------------------------------

// One augmented view: crop -> hflip -> jitter -> blur -> noise -> bias field,
// with the optional operators applied at their configured probabilities.
Image augment_view(const Image& img, const AugmentationPolicy& policy, bool global_view,
                   RngStream rng);

// n_global + n_local views; view v uses the child stream rng.split(v) with
// globals first, so every view is independently reproducible.
MultiCropViews apply_policy(const Image& img, const AugmentationPolicy& policy, RngStream rng);

// The augmentation stream for one (seed, epoch, source image); both the
// batch kernel and the trainer derive view randomness through this.
RngStream view_stream(std::uint64_t seed, std::uint64_t epoch, std::int64_t source_id);

// Batch kernel: one MultiCropViews per dataset image, stream derived from
// (seed, epoch, source_id). Serial and parallel paths are bit-identical.
std::vector<MultiCropViews> make_views_batch(const Dataset& ds, const AugmentationPolicy& policy,
                                             std::uint64_t seed, std::uint64_t epoch,
                                             par::Exec exec = par::Exec::parallel);

}  // namespace augscale
