#include <doctest.h>

#include <cmath>

#include "augscale/augment.hpp"
#include "augscale/error.hpp"
#include "augscale/pair_analysis.hpp"
#include "augscale/synth.hpp"

using namespace augscale;

TEST_CASE("built-in policies carry the published constants verbatim") {
    const AugmentationPolicy strong = builtin_policy("strong");
    CHECK(strong.local_crop_scale.lo == 0.05);
    CHECK(strong.local_crop_scale.hi == 0.4);
    CHECK(strong.global_crop_scale.lo == 0.4);
    CHECK(strong.global_crop_scale.hi == 1.0);
    CHECK(strong.brightness == 0.4);
    CHECK(strong.contrast == 0.4);
    CHECK_FALSE(strong.blur.has_value());
    CHECK_FALSE(strong.noise.has_value());
    CHECK_FALSE(strong.bias_field.has_value());

    const AugmentationPolicy weak = builtin_policy("weak");
    CHECK(weak.local_crop_scale.lo == 0.2);
    CHECK(weak.local_crop_scale.hi == 0.5);
    CHECK(weak.global_crop_scale.lo == 0.5);
    CHECK(weak.global_crop_scale.hi == 1.0);
    CHECK(weak.brightness == 0.2);
    CHECK(weak.contrast == 0.2);
    CHECK_FALSE(weak.blur.has_value());

    const AugmentationPolicy wm = builtin_policy("weak_med");
    CHECK(wm.local_crop_scale.lo == 0.2);
    CHECK(wm.local_crop_scale.hi == 0.5);
    CHECK(wm.global_crop_scale.lo == 0.5);
    CHECK(wm.global_crop_scale.hi == 1.0);
    CHECK(wm.brightness == 0.2);
    CHECK(wm.contrast == 0.2);
    REQUIRE(wm.blur.has_value());
    CHECK(wm.blur->sigma_max == 0.1);
    CHECK(wm.blur->p == 0.5);
    REQUIRE(wm.noise.has_value());
    CHECK(wm.noise->std == 0.1);
    CHECK(wm.noise->p == 0.5);
    REQUIRE(wm.bias_field.has_value());
    CHECK(wm.bias_field->coeff_scale == 0.1);
    CHECK(wm.bias_field->order == 3);
    CHECK(wm.bias_field->p == 0.5);

    // flips are shared so the policies differ only in the published columns
    for (const auto& p : {strong, weak, wm}) {
        CHECK(p.hflip_p == 0.5);
        CHECK(p.n_global == 2);
        CHECK(p.n_local == 4);
    }
    CHECK_THROWS_AS(builtin_policy("mystery"), UsageError);
}

TEST_CASE("policy JSON roundtrip keeps every field") {
    for (const auto& name : builtin_policy_names()) {
        const AugmentationPolicy p = builtin_policy(name);
        const AugmentationPolicy q = policy_from_json(policy_to_json(p));
        CHECK(q.name == p.name);
        CHECK(q.local_crop_scale.lo == p.local_crop_scale.lo);
        CHECK(q.local_crop_scale.hi == p.local_crop_scale.hi);
        CHECK(q.global_crop_scale.lo == p.global_crop_scale.lo);
        CHECK(q.global_crop_scale.hi == p.global_crop_scale.hi);
        CHECK(q.n_global == p.n_global);
        CHECK(q.n_local == p.n_local);
        CHECK(q.global_size == p.global_size);
        CHECK(q.local_size == p.local_size);
        CHECK(q.brightness == p.brightness);
        CHECK(q.contrast == p.contrast);
        CHECK(q.hflip_p == p.hflip_p);
        CHECK(q.blur.has_value() == p.blur.has_value());
        if (p.blur) {
            CHECK(q.blur->sigma_max == p.blur->sigma_max);
            CHECK(q.blur->p == p.blur->p);
        }
        CHECK(q.noise.has_value() == p.noise.has_value());
        CHECK(q.bias_field.has_value() == p.bias_field.has_value());
        if (p.bias_field) CHECK(q.bias_field->order == p.bias_field->order);
    }
    CHECK_THROWS_AS(policy_from_json("{not json"), DataError);
    CHECK_THROWS_AS(policy_from_json("{\"name\":\"x\"}"), DataError);
}

namespace {

Image noise_image(int w, int h, std::uint64_t seed) {
    Image img(w, h, 1);
    RngStream rng(seed, 77);
    for (auto& v : img.data) v = rng.next_float();
    return img;
}

}  // namespace

TEST_CASE("random_resized_crop: degenerate scale equals plain resize") {
    const Image img = noise_image(64, 64, 1);
    RngStream rng(9, 0);
    // unit aspect on a square full-scale crop must cover the whole image
    RngStream rect_rng(9, 1);
    const CropRect r = sample_crop_rect(64, 64, {1.0, 1.0}, 1.0, 1.0, rect_rng);
    CHECK(r.x == 0);
    CHECK(r.y == 0);
    CHECK(r.w == 64);
    CHECK(r.h == 64);

    const Image out = random_resized_crop(img, {1.0, 1.0}, 32, rng);
    const Image direct = resize_bilinear(img, 32, 32);
    CHECK(out.data == direct.data);
}

TEST_CASE("random_resized_crop: constant input stays constant") {
    const Image img(48, 48, 1, 0.42f);
    RngStream rng(10, 0);
    for (int i = 0; i < 20; ++i) {
        const Image out = random_resized_crop(img, {0.05, 0.4}, 16, rng);
        for (float v : out.data) CHECK(v == 0.42f);
    }
}

TEST_CASE("random_resized_crop: realized areas stay in range up to rounding") {
    RngStream rng(11, 0);
    const int W = 64, H = 64;
    const double lo = 0.2, hi = 0.5, A = W * H;
    int fallbacks = 0;
    for (int i = 0; i < 10000; ++i) {
        const CropRect r = sample_crop_rect(W, H, {lo, hi}, 0.75, 4.0 / 3.0, rng);
        if (r.fallback) {
            ++fallbacks;
            continue;
        }
        CHECK((r.w - 0.5) * (r.h - 0.5) <= hi * A);
        CHECK((r.w + 0.5) * (r.h + 0.5) >= lo * A);
        CHECK(r.x >= 0);
        CHECK(r.y >= 0);
        CHECK(r.x + r.w <= W);
        CHECK(r.y + r.h <= H);
    }
    CHECK(fallbacks < 100);  // feasible range, retries rarely exhaust
}

TEST_CASE("color_jitter: identities and forced factors") {
    const Image img = noise_image(16, 16, 2);
    RngStream rng(12, 0);
    const Image same = color_jitter(img, 0.0, 0.0, rng);
    CHECK(same.data == img.data);

    Image px(1, 1, 1);
    px.data = {0.4f};
    const Image bright = color_jitter_with(px, 1.5f, 1.0f, true);
    CHECK(bright.data[0] == doctest::Approx(0.6f));

    const Image constant(8, 8, 1, 0.3f);
    const Image contrasted = color_jitter_with(constant, 1.0f, 1.7f, false);
    for (float v : contrasted.data) CHECK(v == doctest::Approx(0.3f));

    // clamp keeps output valid for any factor
    const Image wild = color_jitter_with(img, 3.0f, 2.5f, true);
    CHECK(image_valid(wild));
}

TEST_CASE("gaussian_blur: identity, constants and impulse response") {
    const Image img = noise_image(16, 16, 3);
    const Image same = gaussian_blur(img, 0.0);
    CHECK(same.data == img.data);

    const Image constant(9, 9, 1, 0.8f);
    const Image blurred_const = gaussian_blur(constant, 1.7);
    for (float v : blurred_const.data) CHECK(v == doctest::Approx(0.8f).epsilon(1e-6));

    // impulse at the center reproduces the independently computed kernel
    Image impulse(11, 11, 1, 0.0f);
    impulse.at(5, 5, 0) = 1.0f;
    const double sigma = 1.0;
    const Image response = gaussian_blur(impulse, sigma);
    const int radius = 3;  // ceil(3*sigma)
    double kernel_sum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            kernel_sum += std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    double response_sum = 0.0;
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x) {
            const int dx = x - 5, dy = y - 5;
            double expect = 0.0;
            if (std::abs(dx) <= radius && std::abs(dy) <= radius)
                expect = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) / kernel_sum;
            CHECK(response.at(x, y, 0) == doctest::Approx(expect).epsilon(1e-6));
            response_sum += response.at(x, y, 0);
        }
    CHECK(response_sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gaussian_noise: identity at zero, clamped output, empirical std") {
    const Image img = noise_image(16, 16, 4);
    RngStream rng(13, 0);
    const Image same = gaussian_noise(img, 0.0, rng);
    CHECK(same.data == img.data);

    const Image base(400, 250, 1, 0.5f);  // 1e5 pixels
    RngStream rng2(13, 1);
    const Image noisy = gaussian_noise(base, 0.1, rng2);
    CHECK(image_valid(noisy));
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < noisy.data.size(); ++i) {
        const double d = noisy.data[i] - 0.5;
        sum += d;
        sum2 += d * d;
    }
    const double n = static_cast<double>(noisy.data.size());
    const double stdev = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    CHECK(stdev >= 0.095);
    CHECK(stdev <= 0.105);
}

TEST_CASE("bias field: identity, constant polynomial, positivity") {
    const Image img = noise_image(16, 16, 5);
    RngStream rng(14, 0);
    const Image same = random_bias_field(img, 0.0, 3, rng);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(same.data[i] == doctest::Approx(img.data[i]));

    // order 0 with forced c00
    const Image half(8, 8, 1, 0.5f);
    const Image scaled = bias_field_with(half, {0.3}, 0);
    for (float v : scaled.data) CHECK(v == doctest::Approx(0.5 * std::exp(0.3)));

    const Image dark(8, 8, 1, 0.25f);
    RngStream rng2(14, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const Image out = random_bias_field(dark, 0.5, 3, rng2);
        for (float v : out.data) CHECK(v > 0.0f);  // exp field never kills signal
    }
}

TEST_CASE("apply_policy: cardinality, degenerate identity, determinism") {
    const Image img = noise_image(64, 64, 6);
    const AugmentationPolicy weak = builtin_policy("weak");
    const MultiCropViews views = apply_policy(img, weak, RngStream(15, 0));
    CHECK(views.globals.size() == 2);
    CHECK(views.locals.size() == 4);
    for (const Image& g : views.globals) {
        CHECK(g.width == weak.global_size);
        CHECK(image_valid(g));
    }
    for (const Image& l : views.locals) {
        CHECK(l.width == weak.local_size);
        CHECK(image_valid(l));
    }

    AugmentationPolicy degenerate = weak;
    degenerate.local_crop_scale = degenerate.global_crop_scale = {1.0, 1.0};
    degenerate.brightness = degenerate.contrast = 0.0;
    degenerate.hflip_p = 0.0;
    const MultiCropViews plain = apply_policy(img, degenerate, RngStream(15, 1));
    const Image global_direct = resize_bilinear(img, weak.global_size, weak.global_size);
    const Image local_direct = resize_bilinear(img, weak.local_size, weak.local_size);
    for (const Image& g : plain.globals) CHECK(g.data == global_direct.data);
    for (const Image& l : plain.locals) CHECK(l.data == local_direct.data);

    const MultiCropViews rerun = apply_policy(img, weak, RngStream(15, 0));
    for (std::size_t i = 0; i < views.globals.size(); ++i)
        CHECK(rerun.globals[i].data == views.globals[i].data);
    for (std::size_t i = 0; i < views.locals.size(); ++i)
        CHECK(rerun.locals[i].data == views.locals[i].data);
}

TEST_CASE("weak_med medical operators fire and preserve validity") {
    const Image img = noise_image(64, 64, 7);
    const AugmentationPolicy wm = builtin_policy("weak_med");
    int differs = 0;
    for (std::uint64_t i = 0; i < 8; ++i) {
        const MultiCropViews v = apply_policy(img, wm, RngStream(16, i));
        for (const Image& g : v.globals) CHECK(image_valid(g));
        const MultiCropViews w = apply_policy(img, builtin_policy("weak"), RngStream(16, i));
        if (v.globals[0].data != w.globals[0].data) ++differs;
    }
    CHECK(differs > 0);
}

TEST_CASE("make_views_batch: serial and parallel agree bit-for-bit") {
    SynthConfig cfg;
    cfg.class_count = 2;
    cfg.per_class = 10;
    cfg.image_size = 64;
    cfg.seed = 31;
    const LabeledDataset ds = generate_synthetic(cfg);
    const AugmentationPolicy weak = builtin_policy("weak");
    const auto a = make_views_batch(ds.dataset, weak, 5, 2, par::Exec::serial);
    const auto b = make_views_batch(ds.dataset, weak, 5, 2, par::Exec::parallel);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].source_id == b[i].source_id);
        for (std::size_t g = 0; g < a[i].globals.size(); ++g)
            CHECK(a[i].globals[g].data == b[i].globals[g].data);
        for (std::size_t l = 0; l < a[i].locals.size(); ++l)
            CHECK(a[i].locals[l].data == b[i].locals[l].data);
    }
}

// Positives must sit strictly closer under the weak policy. For negatives,
// "weak does not collapse them" is asserted on jitter-normalized statistics
// (neg/pos mean ratio and pair AUROC): the stronger brightness jitter
// inflates every raw pixel distance multiplicatively, so the absolute
// negative means are not comparable across policies in pixel space.
TEST_CASE("policy monotonicity: weak keeps positives closer than strong") {
    SynthConfig cfg;
    cfg.class_count = 4;
    cfg.per_class = 50;
    cfg.image_size = 64;
    cfg.seed = 41;
    const LabeledDataset ds = generate_synthetic(cfg);

    struct Summary {
        double mean_pos, mean_neg, auroc;
    };
    auto run = [&](const std::string& policy_name, std::uint64_t seed) {
        const PairSet pairs = sample_pairs(ds.dataset, builtin_policy(policy_name), 1000, 1000,
                                           RngStream(seed, 0));
        const DistanceStats stats =
            analyze_pairs(pairs, DistanceMetric::l2, DistanceSpace::pixel, nullptr, 64);
        return Summary{stats.mean_pos, stats.mean_neg, separability(stats).auroc_pairs};
    };
    for (std::uint64_t seed : {1ull, 2ull}) {
        const Summary weak = run("weak", seed);
        const Summary strong = run("strong", seed);
        CAPTURE(seed);
        CHECK(weak.mean_pos < strong.mean_pos);
        const double weak_ratio = weak.mean_neg / weak.mean_pos;
        const double strong_ratio = strong.mean_neg / strong.mean_pos;
        CHECK(weak_ratio >= strong_ratio - 1e-3);
        CHECK(weak.auroc >= strong.auroc);
    }
}
