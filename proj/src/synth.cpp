#include "augscale/synth.hpp"

#include <algorithm>
#include <cmath>

#include "augscale/error.hpp"
#include "augscale/rng.hpp"

namespace augscale {

namespace {

constexpr float kTau = 6.2831853f;

float smoothstep(float edge0, float edge1, float x) {
    const float t = std::clamp((x - edge0) / (edge1 - edge0), 0.0f, 1.0f);
    return t * t * (3.0f - 2.0f * t);
}

void stamp_gaussian(Image& img, float cx, float cy, float sigma, float amplitude) {
    const int r = static_cast<int>(std::ceil(3.0f * sigma));
    const int x0 = std::max(0, static_cast<int>(cx) - r);
    const int x1 = std::min(img.width - 1, static_cast<int>(cx) + r);
    const int y0 = std::max(0, static_cast<int>(cy) - r);
    const int y1 = std::min(img.height - 1, static_cast<int>(cy) + r);
    const float inv = 1.0f / (2.0f * sigma * sigma);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const float dx = static_cast<float>(x) - cx;
            const float dy = static_cast<float>(y) - cy;
            img.at(x, y, 0) += amplitude * std::exp(-(dx * dx + dy * dy) * inv);
        }
}

// Marches a curved stroke and stamps dark/bright dots along it.
void stamp_arc(Image& img, float cx, float cy, float theta0, float curvature, float length,
               float sigma, float amplitude) {
    const int steps = static_cast<int>(std::ceil(length / (0.5f * sigma))) + 1;
    for (int s = 0; s <= steps; ++s) {
        const float t = static_cast<float>(s) / static_cast<float>(steps);
        const float theta = theta0 + curvature * t;
        const float px = cx + length * t * std::cos(theta);
        const float py = cy + length * t * std::sin(theta);
        // thin out the amplitude toward the tip
        stamp_gaussian(img, px, py, sigma, amplitude * (1.0f - 0.4f * t));
    }
}

// Shared fundus-like backdrop of the dense family: a dark, softly shaded
// field (the bright rim sits outside the frame) crossed by thin filaments.
// Keeping the template flat at crop scales and the overall level low is what
// lets instance content, not global brightness, carry the pair distances.
Image dense_global_template(int size, RngStream rng) {
    Image img(size, size, 1);
    const float s = static_cast<float>(size);
    const float ccx = 0.5f * s, ccy = 0.5f * s;
    const float corner = 0.7071f * s;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const float dx = static_cast<float>(x) - ccx;
            const float dy = static_cast<float>(y) - ccy;
            const float r = std::sqrt(dx * dx + dy * dy) / corner;
            img.at(x, y, 0) = 0.16f - 0.06f * r * r;
        }
    // bright nerve-head blob, slightly off-center
    const float ox = (0.62f + 0.06f * rng.next_float()) * s;
    const float oy = (0.44f + 0.08f * rng.next_float()) * s;
    stamp_gaussian(img, ox, oy, 0.05f * s, 0.13f);
    // curved dark filaments radiating from the blob
    const int n_vessels = 5;
    for (int k = 0; k < n_vessels; ++k) {
        const float theta = kTau * (0.3f + static_cast<float>(k)) / n_vessels +
                            0.25f * (rng.next_float() - 0.5f);
        const float curv = 1.2f * (rng.next_float() - 0.5f);
        const float len = (0.34f + 0.14f * rng.next_float()) * s;
        stamp_arc(img, ox, oy, theta, curv, len, 0.015f * s, -0.09f);
    }
    for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
    return img;
}

// Dense-family classes are lesion distributions, not fixed overlays: a class
// fixes the lesion count, size, contrast and anchor constellation, and every
// image samples its own lesions around those anchors. Class evidence then
// lives inside the per-image structure the consistency objective has to keep.
struct LesionClass {
    int count = 2;
    float sigma = 0.03f;   // of image side
    float amp = 0.3f;
    std::vector<float> anchor_x, anchor_y;  // normalized
    float arc_angle = 0.0f, arc_radius = 0.2f, arc_amp = 0.2f;
    float arc_theta = 0.0f, arc_curve = 0.0f, arc_len = 0.14f;
    // class-typical texture: which patch-resonant harmonics carry energy
    // (orientation per class bit); each image owns phase and amplitude mix
    float wave_fx[2] = {0, 0}, wave_fy[2] = {0, 0};
    float wave_amp[2] = {0.12f, 0.10f};
    float wave_phase[2] = {0, 0};
};

LesionClass make_lesion_class(int cls, int image_size, RngStream rng) {
    LesionClass lc;
    const float grid = static_cast<float>(image_size) / 8.0f;
    for (int k = 0; k < 2; ++k) {
        const float freq = grid * static_cast<float>(k + 1);
        if ((cls >> k) & 1) {
            lc.wave_fx[k] = freq;
            lc.wave_fy[k] = 0.0f;
        } else {
            lc.wave_fx[k] = 0.0f;
            lc.wave_fy[k] = freq;
        }
        lc.wave_amp[k] = (k == 0 ? 0.16f : 0.12f) + 0.01f * static_cast<float>(cls % 3);
        lc.wave_phase[k] = kTau * rng.next_float();
    }
    lc.count = 2 + (cls % 4) * 2;
    lc.sigma = 0.022f + 0.010f * static_cast<float>((cls / 4) % 3);
    lc.amp = (cls % 2 == 0 ? 1.0f : -1.0f) * (0.30f + 0.06f * static_cast<float>(cls % 3));
    for (int k = 0; k < lc.count; ++k) {
        const float ang = kTau * rng.next_float();
        const float rad = 0.10f + 0.24f * rng.next_float();
        lc.anchor_x.push_back(0.5f + rad * std::cos(ang));
        lc.anchor_y.push_back(0.5f + rad * std::sin(ang));
    }
    lc.arc_angle = kTau * rng.next_float();
    lc.arc_radius = 0.12f + 0.18f * rng.next_float();
    lc.arc_amp = (cls % 2 == 0 ? -1.0f : 1.0f) * 0.20f;
    lc.arc_theta = kTau * rng.next_float();
    lc.arc_curve = 1.5f * (rng.next_float() - 0.5f);
    lc.arc_len = 0.10f + 0.08f * rng.next_float();
    return lc;
}

// Stamps one image's lesion draw: anchors jittered, sizes and contrasts
// scaled, all proportional to base_variation (zero keeps the class anchors).
void stamp_lesions(Image& img, const LesionClass& lc, float base_variation, RngStream& rng) {
    const float s = static_cast<float>(img.width);
    for (int k = 0; k < lc.count; ++k) {
        const float jx = base_variation * 0.35f * rng.next_gaussian();
        const float jy = base_variation * 0.35f * rng.next_gaussian();
        const float cx = std::clamp(lc.anchor_x[k] + jx, 0.08f, 0.92f) * s;
        const float cy = std::clamp(lc.anchor_y[k] + jy, 0.08f, 0.92f) * s;
        const float sigma = lc.sigma * (1.0f + base_variation * 0.8f * (rng.next_float() - 0.5f)) * s;
        const float amp = lc.amp * (1.0f + base_variation * 0.8f * (rng.next_float() - 0.5f));
        stamp_gaussian(img, cx, cy, sigma, amp);
    }
    const float pose = lc.arc_angle + base_variation * 1.2f * (rng.next_float() - 0.5f);
    const float rad = lc.arc_radius * (1.0f + base_variation * 0.5f * (rng.next_float() - 0.5f));
    const float theta = lc.arc_theta + base_variation * 1.2f * (rng.next_float() - 0.5f);
    const float curve = lc.arc_curve + base_variation * 0.8f * (rng.next_float() - 0.5f);
    const float len = lc.arc_len * (1.0f + base_variation * 0.5f * (rng.next_float() - 0.5f));
    stamp_arc(img, (0.5f + rad * std::cos(pose)) * s, (0.5f + rad * std::sin(pose)) * s,
              theta, curve, len * s, 0.014f * s, lc.arc_amp);
}

// Sparse family: an independent low-frequency texture and gray palette per
// class, so different classes land far apart in pixel space.
Image sparse_class_template(int size, RngStream rng) {
    struct Wave {
        float fx, fy, phase, amp;
    };
    Wave waves[4];
    for (Wave& w : waves) {
        w.fx = rng.next_range(-2.5, 2.5);
        w.fy = rng.next_range(-2.5, 2.5);
        w.phase = kTau * rng.next_float();
        w.amp = static_cast<float>(rng.next_range(0.10, 0.22));
    }
    const float lo = static_cast<float>(rng.next_range(0.0, 0.25));
    const float hi = static_cast<float>(rng.next_range(0.75, 1.0));
    const float gamma = static_cast<float>(rng.next_range(0.5, 2.0));

    Image img(size, size, 1);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const float u = static_cast<float>(x) / static_cast<float>(size - 1);
            const float v = static_cast<float>(y) / static_cast<float>(size - 1);
            float t = 0.5f;
            for (const Wave& w : waves)
                t += w.amp * std::sin(kTau * (w.fx * u + w.fy * v) + w.phase);
            t = std::clamp(t, 0.0f, 1.0f);
            img.at(x, y, 0) = lo + (hi - lo) * std::pow(t, gamma);
        }
    return img;
}

// base_variation-scaled instance perturbation: low-frequency sinusoidal
// warp, a brightness offset, fine mottling and per-pixel noise.
// base_variation == 0 is the identity.
Image perturb_instance(const Image& tpl_in, const LesionClass* cls, float base_variation,
                       RngStream rng) {
    const Image& tpl = tpl_in;
    const float s = static_cast<float>(tpl.width);
    const float amp = base_variation * 0.06f * s;
    const float fx1 = static_cast<float>(rng.next_range(0.7, 1.8)),
                fy1 = static_cast<float>(rng.next_range(0.7, 1.8)),
                ph1 = kTau * rng.next_float();
    const float fx2 = static_cast<float>(rng.next_range(0.7, 1.8)),
                fy2 = static_cast<float>(rng.next_range(0.7, 1.8)),
                ph2 = kTau * rng.next_float();
    const float brightness = base_variation * 0.25f * (2.0f * rng.next_float() - 1.0f);
    const float noise_std = base_variation * 0.25f;

    // per-instance texture: a couple of waves resonant with an 8-px grid (a
    // stable local-profile signature) plus free-running ones
    struct Wave {
        float fx, fy, phase, amp;
    };
    Wave mottle[4];
    const float grid = static_cast<float>(tpl.width) / 8.0f;
    for (int k = 0; k < 4; ++k) {
        Wave& w = mottle[k];
        if (k < 2) {
            if (cls) {
                w.fx = cls->wave_fx[k];
                w.fy = cls->wave_fy[k];
                // phase fully decorrelates by base_variation 0.25: the class
                // lives in the harmonic's energy, the image in its phase
                const float mix = std::min(1.0f, 4.0f * base_variation);
                w.phase = cls->wave_phase[k] + kTau * mix * (rng.next_float() - 0.5f);
                w.amp = cls->wave_amp[k] *
                        (1.0f + base_variation * (rng.next_float() - 0.5f));
            } else {
                w.fx = grid * static_cast<float>(1 + rng.next_below(2));
                w.fy = grid * static_cast<float>(rng.next_below(2));
                if (rng.next_float() < 0.5f) std::swap(w.fx, w.fy);
                w.phase = kTau * rng.next_float();
                w.amp = base_variation * static_cast<float>(rng.next_range(0.08, 0.14));
            }
        } else if (k == 2) {
            // patch-resonant identity wave: random orientation and phase
            const float freq = grid * 3.0f;
            if (rng.next_float() < 0.5f) {
                w.fx = freq;
                w.fy = 0.0f;
            } else {
                w.fx = 0.0f;
                w.fy = freq;
            }
            w.phase = kTau * rng.next_float();
            w.amp = base_variation * static_cast<float>(rng.next_range(0.30, 0.50));
        } else {
            w.fx = static_cast<float>(rng.next_range(6.0, 14.0)) *
                   (rng.next_float() < 0.5f ? -1.f : 1.f);
            w.fy = static_cast<float>(rng.next_range(6.0, 14.0)) *
                   (rng.next_float() < 0.5f ? -1.f : 1.f);
            w.phase = kTau * rng.next_float();
            w.amp = base_variation * static_cast<float>(rng.next_range(0.03, 0.06));
        }
    }

    if (base_variation <= 0.0f) {
        // still stamp the class texture so classes differ at zero variation
        Image out = tpl;
        if (cls) {
            for (int y = 0; y < tpl.height; ++y)
                for (int x = 0; x < tpl.width; ++x) {
                    const float u = static_cast<float>(x) / s;
                    const float v = static_cast<float>(y) / s;
                    float val = out.at(x, y, 0);
                    for (int k = 0; k < 2; ++k)
                        val += cls->wave_amp[k] *
                               std::sin(kTau * (cls->wave_fx[k] * u + cls->wave_fy[k] * v) +
                                        cls->wave_phase[k]);
                    out.at(x, y, 0) = std::clamp(val, 0.0f, 1.0f);
                }
        }
        return out;
    }

    Image out(tpl.width, tpl.height, 1);
    for (int y = 0; y < tpl.height; ++y)
        for (int x = 0; x < tpl.width; ++x) {
            const float u = static_cast<float>(x) / s;
            const float v = static_cast<float>(y) / s;
            float sx = static_cast<float>(x) + amp * std::sin(kTau * (fx1 * u + fy1 * v) + ph1);
            float sy = static_cast<float>(y) + amp * std::sin(kTau * (fx2 * u + fy2 * v) + ph2);
            sx = std::clamp(sx, 0.0f, s - 1.0f);
            sy = std::clamp(sy, 0.0f, static_cast<float>(tpl.height - 1));
            const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, tpl.width - 1), y1 = std::min(y0 + 1, tpl.height - 1);
            const float wx = sx - static_cast<float>(x0), wy = sy - static_cast<float>(y0);
            const float top = tpl.at(x0, y0, 0) + (tpl.at(x1, y0, 0) - tpl.at(x0, y0, 0)) * wx;
            const float bot = tpl.at(x0, y1, 0) + (tpl.at(x1, y1, 0) - tpl.at(x0, y1, 0)) * wx;
            float val = top + (bot - top) * wy + brightness;
            for (const Wave& w : mottle)
                val += w.amp * std::sin(kTau * (w.fx * u + w.fy * v) + w.phase);
            val += noise_std * rng.next_gaussian();
            out.at(x, y, 0) = std::clamp(val, 0.0f, 1.0f);
        }
    return out;
}

}  // namespace

LabeledDataset generate_synthetic(const SynthConfig& config, par::Exec exec) {
    if (config.class_count < 2) throw UsageError("synth: class_count must be >= 2");
    if (config.per_class < 2) throw UsageError("synth: per_class must be >= 2");
    if (config.image_size < 16) throw UsageError("synth: image_size must be >= 16");
    if (config.base_variation < 0.0f || config.base_variation > 1.0f)
        throw UsageError("synth: base_variation must be in [0,1]");

    const RngStream root(config.seed, 0x535D0001u);
    std::vector<Image> class_templates;
    std::vector<LesionClass> lesion_classes;
    class_templates.reserve(config.class_count);
    if (config.family == SynthFamily::dense) {
        const Image global = dense_global_template(config.image_size, root.split(1));
        for (int c = 0; c < config.class_count; ++c) {
            class_templates.push_back(global);
            lesion_classes.push_back(make_lesion_class(
                c, config.image_size, root.split(2).split(static_cast<std::uint64_t>(c))));
        }
    } else {
        for (int c = 0; c < config.class_count; ++c)
            class_templates.push_back(sparse_class_template(
                config.image_size, root.split(4).split(static_cast<std::uint64_t>(c))));
    }

    const int n = config.class_count * config.per_class;
    LabeledDataset ds;
    ds.class_count = config.class_count;
    ds.dataset.images.resize(n);
    ds.dataset.source_ids.resize(n);
    ds.labels.resize(n);

    par::for_index(n, exec, [&](std::int64_t i) {
        const int cls = static_cast<int>(i) / config.per_class;
        Image img = class_templates[cls];
        RngStream instance = root.split(3).split(static_cast<std::uint64_t>(i));
        const LesionClass* sig = nullptr;
        if (config.family == SynthFamily::dense) {
            sig = &lesion_classes[cls];
            stamp_lesions(img, *sig, config.base_variation, instance);
            for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
        }
        ds.dataset.images[i] = perturb_instance(img, sig, config.base_variation, instance);
        ds.dataset.source_ids[i] = i;
        ds.labels[i] = cls;
    });
    return ds;
}

double mean_pairwise_pixel_distance(const LabeledDataset& ds, int n_pairs, std::uint64_t seed,
                                    bool cross_class_only) {
    if (ds.size() < 2 || n_pairs < 1) throw UsageError("distance sampling needs >= 2 images");
    RngStream rng(seed, 0xD157u);
    double total = 0.0;
    for (int p = 0; p < n_pairs; ++p) {
        std::size_t i = rng.next_below(ds.size());
        std::size_t j = rng.next_below(ds.size());
        int guard = 0;
        while ((j == i || (cross_class_only && ds.labels[i] == ds.labels[j])) && guard++ < 1000)
            j = rng.next_below(ds.size());
        const Image& a = ds.dataset.images[i];
        const Image& b = ds.dataset.images[j];
        double acc = 0.0;
        for (std::size_t k = 0; k < a.data.size(); ++k) {
            const double d = static_cast<double>(a.data[k]) - static_cast<double>(b.data[k]);
            acc += d * d;
        }
        total += std::sqrt(acc);
    }
    return total / n_pairs;
}

}  // namespace augscale
