#include "augscale/augment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "augscale/error.hpp"

using nlohmann::json;

namespace augscale {

namespace {

AugmentationPolicy make_strong() {
    AugmentationPolicy p;
    p.name = "strong";
    p.local_crop_scale = {0.05, 0.4};
    p.global_crop_scale = {0.4, 1.0};
    p.brightness = 0.4;
    p.contrast = 0.4;
    return p;
}

AugmentationPolicy make_weak() {
    AugmentationPolicy p;
    p.name = "weak";
    p.local_crop_scale = {0.2, 0.5};
    p.global_crop_scale = {0.5, 1.0};
    p.brightness = 0.2;
    p.contrast = 0.2;
    return p;
}

AugmentationPolicy make_weak_med() {
    AugmentationPolicy p = make_weak();
    p.name = "weak_med";
    p.blur = BlurSettings{0.1, 0.5};
    p.noise = NoiseSettings{0.1, 0.5};
    p.bias_field = BiasFieldSettings{0.1, 3, 0.5};
    return p;
}

void validate_policy(const AugmentationPolicy& p) {
    auto check_range = [&](ScaleRange r, const char* which) {
        if (!(r.lo > 0.0 && r.lo <= r.hi && r.hi <= 1.0))
            throw UsageError(std::string("policy '") + p.name + "': bad " + which +
                             " crop scale range");
    };
    check_range(p.local_crop_scale, "local");
    check_range(p.global_crop_scale, "global");
    if (p.brightness < 0.0 || p.contrast < 0.0)
        throw UsageError("policy '" + p.name + "': brightness/contrast must be >= 0");
    auto check_p = [&](double prob, const char* which) {
        if (prob < 0.0 || prob > 1.0)
            throw UsageError(std::string("policy '") + p.name + "': " + which +
                             " probability outside [0,1]");
    };
    check_p(p.hflip_p, "hflip");
    if (p.blur) check_p(p.blur->p, "blur");
    if (p.noise) check_p(p.noise->p, "noise");
    if (p.bias_field) check_p(p.bias_field->p, "bias_field");
    if (p.n_global < 1 || p.n_local < 0 || p.global_size < 1 || p.local_size < 1)
        throw UsageError("policy '" + p.name + "': bad view counts or sizes");
}

}  // namespace

AugmentationPolicy builtin_policy(const std::string& name) {
    if (name == "strong") return make_strong();
    if (name == "weak") return make_weak();
    if (name == "weak_med") return make_weak_med();
    throw UsageError("unknown policy '" + name + "' (built-ins: strong, weak, weak_med)");
}

std::vector<std::string> builtin_policy_names() { return {"strong", "weak", "weak_med"}; }

std::string policy_to_json(const AugmentationPolicy& p) {
    json j = {{"name", p.name},
              {"local_crop_scale", {p.local_crop_scale.lo, p.local_crop_scale.hi}},
              {"global_crop_scale", {p.global_crop_scale.lo, p.global_crop_scale.hi}},
              {"n_global", p.n_global},
              {"n_local", p.n_local},
              {"global_size", p.global_size},
              {"local_size", p.local_size},
              {"brightness", p.brightness},
              {"contrast", p.contrast},
              {"hflip_p", p.hflip_p}};
    j["blur"] = p.blur ? json{{"sigma_max", p.blur->sigma_max}, {"p", p.blur->p}} : json(nullptr);
    j["noise"] = p.noise ? json{{"std", p.noise->std}, {"p", p.noise->p}} : json(nullptr);
    j["bias_field"] = p.bias_field ? json{{"coeff_scale", p.bias_field->coeff_scale},
                                          {"order", p.bias_field->order},
                                          {"p", p.bias_field->p}}
                                   : json(nullptr);
    return j.dump(2);
}

AugmentationPolicy policy_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed policy JSON: ") + e.what());
    }
    AugmentationPolicy p;
    try {
        p.name = j.at("name").get<std::string>();
        p.local_crop_scale = {j.at("local_crop_scale").at(0).get<double>(),
                              j.at("local_crop_scale").at(1).get<double>()};
        p.global_crop_scale = {j.at("global_crop_scale").at(0).get<double>(),
                               j.at("global_crop_scale").at(1).get<double>()};
        p.n_global = j.at("n_global").get<int>();
        p.n_local = j.at("n_local").get<int>();
        p.global_size = j.at("global_size").get<int>();
        p.local_size = j.at("local_size").get<int>();
        p.brightness = j.at("brightness").get<double>();
        p.contrast = j.at("contrast").get<double>();
        p.hflip_p = j.at("hflip_p").get<double>();
        if (!j.at("blur").is_null())
            p.blur = BlurSettings{j["blur"].at("sigma_max").get<double>(),
                                  j["blur"].at("p").get<double>()};
        if (!j.at("noise").is_null())
            p.noise = NoiseSettings{j["noise"].at("std").get<double>(),
                                    j["noise"].at("p").get<double>()};
        if (!j.at("bias_field").is_null())
            p.bias_field = BiasFieldSettings{j["bias_field"].at("coeff_scale").get<double>(),
                                             j["bias_field"].at("order").get<int>(),
                                             j["bias_field"].at("p").get<double>()};
    } catch (const json::exception& e) {
        throw DataError(std::string("policy JSON missing fields: ") + e.what());
    }
    validate_policy(p);
    return p;
}

AugmentationPolicy resolve_policy(const std::string& name_or_path) {
    for (const auto& n : builtin_policy_names())
        if (name_or_path == n) return builtin_policy(n);
    if (std::filesystem::exists(name_or_path)) {
        std::ifstream in(name_or_path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return policy_from_json(text);
    }
    throw UsageError("policy '" + name_or_path + "' is neither a built-in nor a file");
}

CropRect sample_crop_rect(int width, int height, ScaleRange scale, double ar_lo, double ar_hi,
                          RngStream& rng) {
    const double area = static_cast<double>(width) * height;
    for (int attempt = 0; attempt < 10; ++attempt) {
        const double target = area * rng.next_range(scale.lo, scale.hi);
        const double ar = std::exp(rng.next_range(std::log(ar_lo), std::log(ar_hi)));
        const int w = static_cast<int>(std::lround(std::sqrt(target * ar)));
        const int h = static_cast<int>(std::lround(std::sqrt(target / ar)));
        if (w >= 1 && h >= 1 && w <= width && h <= height) {
            CropRect r;
            r.w = w;
            r.h = h;
            r.x = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(width - w + 1)));
            r.y = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(height - h + 1)));
            return r;
        }
    }
    const double mid = 0.5 * (scale.lo + scale.hi);
    int side = static_cast<int>(std::lround(std::sqrt(area * mid)));
    side = std::clamp(side, 1, std::min(width, height));
    CropRect r;
    r.w = r.h = side;
    r.x = (width - side) / 2;
    r.y = (height - side) / 2;
    r.fallback = true;
    return r;
}

namespace {

Image crop(const Image& img, const CropRect& r) {
    Image out(r.w, r.h, img.channels);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(r.x + x, r.y + y, c);
    return out;
}

}  // namespace

Image random_resized_crop(const Image& img, ScaleRange scale, int out_size, RngStream& rng) {
    if (out_size < 1) throw UsageError("crop output size must be >= 1");
    const CropRect r = sample_crop_rect(img.width, img.height, scale, 0.75, 4.0 / 3.0, rng);
    if (r.x == 0 && r.y == 0 && r.w == img.width && r.h == img.height)
        return resize_bilinear(img, out_size, out_size);
    return resize_bilinear(crop(img, r), out_size, out_size);
}

Image hflip(const Image& img) {
    Image out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    return out;
}

Image color_jitter_with(const Image& img, float f_brightness, float f_contrast,
                        bool brightness_first) {
    Image out = img;
    auto apply_brightness = [&] {
        if (f_brightness == 1.0f) return;
        for (float& v : out.data) v = std::clamp(v * f_brightness, 0.0f, 1.0f);
    };
    auto apply_contrast = [&] {
        if (f_contrast == 1.0f) return;
        double mean = 0.0;
        for (float v : out.data) mean += v;
        const float m = static_cast<float>(mean / out.data.size());
        for (float& v : out.data) v = std::clamp(m + (v - m) * f_contrast, 0.0f, 1.0f);
    };
    if (brightness_first) {
        apply_brightness();
        apply_contrast();
    } else {
        apply_contrast();
        apply_brightness();
    }
    return out;
}

Image color_jitter(const Image& img, double brightness, double contrast, RngStream& rng) {
    if (brightness < 0.0 || contrast < 0.0)
        throw UsageError("jitter strengths must be >= 0");
    const float fb =
        static_cast<float>(rng.next_range(std::max(0.0, 1.0 - brightness), 1.0 + brightness));
    const float fc =
        static_cast<float>(rng.next_range(std::max(0.0, 1.0 - contrast), 1.0 + contrast));
    const bool brightness_first = rng.next_float() < 0.5f;
    return color_jitter_with(img, fb, fc, brightness_first);
}

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma < 0.0) throw UsageError("blur sigma must be >= 0");
    if (sigma == 0.0) return img;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<float> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        kernel[i + radius] = static_cast<float>(w);
        sum += w;
    }
    for (float& w : kernel) w = static_cast<float>(w / sum);

    // symmetric reflection with edge repeat
    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - 1 - i;
        }
        return i;
    };

    Image tmp(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                float acc = 0.0f;
                for (int k = -radius; k <= radius; ++k)
                    acc += kernel[k + radius] * img.at(reflect(x + k, img.width), y, c);
                tmp.at(x, y, c) = acc;
            }
    Image out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                float acc = 0.0f;
                for (int k = -radius; k <= radius; ++k)
                    acc += kernel[k + radius] * tmp.at(x, reflect(y + k, img.height), c);
                out.at(x, y, c) = std::clamp(acc, 0.0f, 1.0f);
            }
    return out;
}

Image gaussian_noise(const Image& img, double std, RngStream& rng) {
    if (std < 0.0) throw UsageError("noise std must be >= 0");
    if (std == 0.0) return img;
    Image out = img;
    const float s = static_cast<float>(std);
    for (float& v : out.data) v = std::clamp(v + s * rng.next_gaussian(), 0.0f, 1.0f);
    return out;
}

Image bias_field_with(const Image& img, const std::vector<double>& coeffs, int order) {
    Image out(img.width, img.height, img.channels);
    std::size_t expected = 0;
    for (int i = 0; i <= order; ++i) expected += static_cast<std::size_t>(order - i + 1);
    if (coeffs.size() != expected) throw UsageError("bias field coefficient count mismatch");
    for (int y = 0; y < img.height; ++y) {
        const double v = img.height > 1
                             ? 2.0 * static_cast<double>(y) / (img.height - 1) - 1.0
                             : 0.0;
        for (int x = 0; x < img.width; ++x) {
            const double u =
                img.width > 1 ? 2.0 * static_cast<double>(x) / (img.width - 1) - 1.0 : 0.0;
            double poly = 0.0;
            std::size_t idx = 0;
            double upow = 1.0;
            for (int i = 0; i <= order; ++i) {
                double vpow = 1.0;
                for (int j = 0; j <= order - i; ++j) {
                    poly += coeffs[idx++] * upow * vpow;
                    vpow *= v;
                }
                upow *= u;
            }
            const float field = static_cast<float>(std::exp(poly));
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = std::clamp(img.at(x, y, c) * field, 0.0f, 1.0f);
        }
    }
    return out;
}

Image random_bias_field(const Image& img, double coeff_scale, int order, RngStream& rng) {
    if (coeff_scale < 0.0 || order < 0) throw UsageError("bad bias field parameters");
    std::size_t n_coeffs = 0;
    for (int i = 0; i <= order; ++i) n_coeffs += static_cast<std::size_t>(order - i + 1);
    std::vector<double> coeffs(n_coeffs);
    for (double& c : coeffs) c = rng.next_range(-coeff_scale, coeff_scale);
    return bias_field_with(img, coeffs, order);
}

double blur_sigma_bound(double sigma_max_nominal, int view_w, int view_h) {
    return sigma_max_nominal * static_cast<double>(std::min(view_w, view_h)) / 11.2;
}

Image augment_view(const Image& img, const AugmentationPolicy& policy, bool global_view,
                   RngStream rng) {
    const ScaleRange scale = global_view ? policy.global_crop_scale : policy.local_crop_scale;
    const int out_size = global_view ? policy.global_size : policy.local_size;

    Image view = random_resized_crop(img, scale, out_size, rng);
    if (rng.next_float() < static_cast<float>(policy.hflip_p)) view = hflip(view);
    view = color_jitter(view, policy.brightness, policy.contrast, rng);
    if (policy.blur) {
        const bool apply = rng.next_float() < static_cast<float>(policy.blur->p);
        const double bound = blur_sigma_bound(policy.blur->sigma_max, view.width, view.height);
        const double sigma = bound * (1.0 - rng.next_double());  // (0, bound]
        if (apply) view = gaussian_blur(view, sigma);
    }
    if (policy.noise) {
        const bool apply = rng.next_float() < static_cast<float>(policy.noise->p);
        RngStream noise_rng = rng.split(0x4015Eu);
        if (apply) view = gaussian_noise(view, policy.noise->std, noise_rng);
    }
    if (policy.bias_field) {
        const bool apply = rng.next_float() < static_cast<float>(policy.bias_field->p);
        RngStream field_rng = rng.split(0xB1A5u);
        if (apply)
            view = random_bias_field(view, policy.bias_field->coeff_scale,
                                     policy.bias_field->order, field_rng);
    }
    return view;
}

MultiCropViews apply_policy(const Image& img, const AugmentationPolicy& policy, RngStream rng) {
    validate_policy(policy);
    MultiCropViews views;
    for (int g = 0; g < policy.n_global; ++g)
        views.globals.push_back(
            augment_view(img, policy, true, rng.split(static_cast<std::uint64_t>(g))));
    for (int l = 0; l < policy.n_local; ++l)
        views.locals.push_back(augment_view(
            img, policy, false, rng.split(static_cast<std::uint64_t>(policy.n_global + l))));
    return views;
}

RngStream view_stream(std::uint64_t seed, std::uint64_t epoch, std::int64_t source_id) {
    return RngStream(seed, 0xA46u).split(epoch).split(static_cast<std::uint64_t>(source_id));
}

std::vector<MultiCropViews> make_views_batch(const Dataset& ds, const AugmentationPolicy& policy,
                                             std::uint64_t seed, std::uint64_t epoch,
                                             par::Exec exec) {
    std::vector<MultiCropViews> out(ds.size());
    par::for_index(static_cast<std::int64_t>(ds.size()), exec, [&](std::int64_t i) {
        out[i] = apply_policy(ds.images[i], policy, view_stream(seed, epoch, ds.source_ids[i]));
        out[i].source_id = ds.source_ids[i];
    });
    return out;
}

}  // namespace augscale
