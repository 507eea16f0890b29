#include <doctest.h>

#include <cmath>

#include "augscale/dino.hpp"
#include "augscale/error.hpp"
#include "augscale/optim.hpp"
#include "augscale/synth.hpp"
#include "augscale/tape.hpp"

using namespace augscale;

namespace {

LabeledDataset dense_set(int per_class, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.class_count = 4;
    cfg.per_class = per_class;
    cfg.image_size = 64;
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

bool weights_equal(const EncoderWeights& a, const EncoderWeights& b) {
    const auto at = a.named_tensors();
    const auto bt = b.named_tensors();
    for (std::size_t i = 0; i < at.size(); ++i)
        if (at[i].second->v != bt[i].second->v) return false;
    return true;
}

}  // namespace

TEST_CASE("dino_loss: one-hot teacher against a flat student") {
    // teacher logits force probability (1, 0); equal student logits give 0.5
    const std::vector<std::vector<float>> student = {{0.0f, 0.0f}, {0.0f, 0.0f}};
    const std::vector<std::vector<float>> teacher = {{100.0f, 0.0f}};
    const std::vector<float> center = {0.0f, 0.0f};
    const double loss = dino_loss(student, teacher, center, 1.0, 0.04);
    CHECK(loss == doctest::Approx(0.6931471805599453).epsilon(1e-9));
}

TEST_CASE("dino_loss: cross-entropy is bounded below by the teacher entropy") {
    RngStream rng(1, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const int k = 4;
        std::vector<float> t_logits(k), center(k, 0.0f);
        for (auto& v : t_logits) v = 2.0f * rng.next_gaussian();
        const std::vector<float> t = teacher_target(t_logits, center, 0.5);
        double teacher_entropy = 0.0;
        for (float p : t)
            if (p > 0) teacher_entropy -= p * std::log(static_cast<double>(p));

        std::vector<float> s_logits(k);
        for (auto& v : s_logits) v = 2.0f * rng.next_gaussian();
        const double loss =
            dino_loss({t_logits, s_logits}, {t_logits}, center, 0.5, 0.5);
        // pair (g=0, v=1): H(t, softmax(s/tau)) >= H(t)
        CHECK(loss >= teacher_entropy - 1e-9);
        CHECK(loss >= 0.0);
    }
}

TEST_CASE("dino_loss matches its tape construction; gradients pass FD") {
    RngStream rng(2, 0);
    const int K = 6;
    const int n_views = 4, n_global = 2;
    std::vector<std::vector<float>> student(n_views, std::vector<float>(K));
    std::vector<std::vector<float>> teacher(n_global, std::vector<float>(K));
    std::vector<float> center(K);
    for (auto& row : student)
        for (auto& v : row) v = rng.next_gaussian();
    for (auto& row : teacher)
        for (auto& v : row) v = rng.next_gaussian();
    for (auto& v : center) v = 0.3f * rng.next_gaussian();
    const double tau_s = 0.1, tau_t = 0.04;

    const double reference = dino_loss(student, teacher, center, tau_s, tau_t);

    auto build = [&](const std::vector<Mat<double>>& params, Tape<double>& tape) {
        std::vector<Tape<double>::NodeId> logits;
        for (const auto& p : params) logits.push_back(tape.param(p));
        Tape<double>::NodeId total = -1;
        int count = 0;
        for (int g = 0; g < n_global; ++g) {
            const std::vector<float> t = teacher_target(teacher[g], center, tau_t);
            Mat<double> target(1, K);
            for (int c = 0; c < K; ++c) target(0, c) = t[c];
            for (int v = 0; v < n_views; ++v) {
                if (v == g) continue;
                const auto ce = tape.ce_temp(logits[v], target, tau_s);
                total = total < 0 ? ce : tape.add(total, ce);
                ++count;
            }
        }
        return std::pair(tape.scale(total, 1.0 / count), logits);
    };

    std::vector<Mat<double>> params;
    for (const auto& row : student) {
        Mat<double> m(1, K);
        for (int c = 0; c < K; ++c) m(0, c) = row[c];
        params.push_back(m);
    }
    Tape<double> tape;
    auto [loss_node, logit_nodes] = build(params, tape);
    CHECK(tape.val(loss_node)(0, 0) == doctest::Approx(reference).epsilon(1e-6));
    tape.backward(loss_node);

    // central finite differences on every student logit
    const double h = 1e-5;
    for (int v = 0; v < n_views; ++v) {
        for (int c = 0; c < K; ++c) {
            auto eval = [&](double delta) {
                std::vector<Mat<double>> p = params;
                p[v](0, c) += delta;
                Tape<double> t;
                auto [l, ln] = build(p, t);
                (void)ln;
                return t.val(l)(0, 0);
            };
            const double numeric = (eval(h) - eval(-h)) / (2.0 * h);
            const double analytic = tape.grad(logit_nodes[v])(0, c);
            const double rel = std::abs(numeric - analytic) /
                               std::max({std::abs(numeric), std::abs(analytic), 1e-3});
            CHECK(rel <= 1e-4);
        }
    }
}

TEST_CASE("dino_loss rejects bad inputs") {
    CHECK_THROWS_AS(dino_loss({}, {{1.0f}}, {0.0f}, 0.1, 0.04), UsageError);
    CHECK_THROWS_AS(dino_loss({{1.0f}}, {}, {0.0f}, 0.1, 0.04), UsageError);
    CHECK_THROWS_AS(dino_loss({{1.0f}, {1.0f}}, {{1.0f}}, {0.0f}, -0.1, 0.04), UsageError);
}

TEST_CASE("teacher_target sums to one and sharpens") {
    RngStream rng(3, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<float> logits(8), center(8);
        for (auto& v : logits) v = 3.0f * rng.next_gaussian();
        for (auto& v : center) v = rng.next_gaussian();
        const std::vector<float> t = teacher_target(logits, center, 0.04);
        double sum = 0.0;
        for (float p : t) sum += p;
        CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
}

TEST_CASE("update_center: one-step EMA, fixed point, m=0") {
    const std::vector<float> zero = {0.0f, 0.0f};
    const std::vector<std::vector<float>> batch = {{1.0f, 1.0f}, {1.0f, 1.0f}};
    const auto stepped = update_center(zero, batch, 0.9);
    CHECK(stepped[0] == doctest::Approx(0.1f));
    CHECK(stepped[1] == doctest::Approx(0.1f));

    // repeated constant batch converges geometrically: error = m^n |mu - c0|
    std::vector<float> c = {0.0f};
    const double m = 0.9;
    for (int n = 1; n <= 20; ++n) {
        c = update_center(c, {{1.0f}}, m);
        CHECK(std::abs(1.0 - c[0]) == doctest::Approx(std::pow(m, n)).epsilon(1e-4));
    }

    const auto direct = update_center({5.0f}, {{2.0f}, {4.0f}}, 0.0);
    CHECK(direct[0] == doctest::Approx(3.0f));

    CHECK_THROWS_AS(update_center(zero, {}, 0.9), UsageError);
}

TEST_CASE("ema_update: endpoints and one step") {
    EncoderConfig cfg;
    cfg.embed_dim = 8;
    cfg.hidden_dim = 8;
    cfg.out_dim = 4;
    EncoderWeights teacher = init_encoder(cfg, 1);
    const EncoderWeights student = init_encoder(cfg, 2);

    EncoderWeights t1 = teacher;
    ema_update(t1, student, 1.0);
    CHECK(weights_equal(t1, teacher));

    EncoderWeights t0 = teacher;
    ema_update(t0, student, 0.0);
    CHECK(weights_equal(t0, student));

    EncoderWeights ones = teacher, zeros = student;
    for (auto& [n, m] : ones.named_tensors())
        for (auto& v : m->v) v = 1.0f;
    for (auto& [n, m] : zeros.named_tensors())
        for (auto& v : m->v) v = 0.0f;
    ema_update(ones, zeros, 0.9);
    for (auto& [n, m] : ones.named_tensors())
        for (float v : m->v) CHECK(v == doctest::Approx(0.9f));
}

TEST_CASE("optimizer steps never touch the teacher; only ema_update does") {
    const LabeledDataset ds = dense_set(4, 7);
    DinoConfig cfg;
    cfg.encoder.out_dim = 32;
    cfg.seed = 5;
    EncoderWeights student = init_encoder(cfg.encoder, cfg.seed);
    EncoderWeights teacher = student;
    const EncoderWeights teacher_before = teacher;
    std::vector<float> center(cfg.encoder.out_dim, 0.0f);

    const MultiCropViews views = apply_policy(ds.dataset.images[0], builtin_policy("weak"),
                                              RngStream(1, 1));
    const ImageStepResult step = image_step(views, student, teacher, center, cfg);
    auto params = student.named_tensors();
    std::vector<Mat<float>*> ptrs;
    for (auto& [n, m] : params) ptrs.push_back(m);
    AdamWState state = make_adamw_state(ptrs);
    adamw_step(ptrs, step.grads, state, AdamWConfig{});

    CHECK(weights_equal(teacher, teacher_before));        // optimizer left it alone
    CHECK_FALSE(weights_equal(student, teacher_before));  // student moved
    ema_update(teacher, student, 0.5);
    CHECK_FALSE(weights_equal(teacher, teacher_before));  // only EMA moves it
}

TEST_CASE("pretrain: epochs=0 returns the initialization, log empty") {
    const LabeledDataset ds = dense_set(3, 11);
    DinoConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 9;
    const DinoCheckpoint ck = pretrain(ds.dataset, cfg, builtin_policy("weak"));
    CHECK(ck.log.empty());
    CHECK(weights_equal(ck.student, ck.teacher));
    const EncoderWeights init = init_encoder(cfg.encoder, cfg.seed);
    CHECK(weights_equal(ck.student, init));
    for (float c : ck.center) CHECK(c == 0.0f);
}

TEST_CASE("pretrain: deterministic and thread-count independent") {
    const LabeledDataset ds = dense_set(8, 13);
    DinoConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.seed = 21;
    const DinoCheckpoint a = pretrain(ds.dataset, cfg, builtin_policy("weak"));
    const DinoCheckpoint b = pretrain(ds.dataset, cfg, builtin_policy("weak"));
    const DinoCheckpoint c =
        pretrain(ds.dataset, cfg, builtin_policy("weak"), par::Exec::serial);
    CHECK(weights_equal(a.student, b.student));
    CHECK(weights_equal(a.teacher, b.teacher));
    CHECK(a.center == b.center);
    CHECK(weights_equal(a.student, c.student));
    CHECK(weights_equal(a.teacher, c.teacher));
    CHECK(a.center == c.center);
    REQUIRE(a.log.size() == 2);
    CHECK(a.log[0].mean_loss == b.log[0].mean_loss);
    CHECK(a.log[0].mean_loss == c.log[0].mean_loss);
}

TEST_CASE("pretrain: loss decreases over a short dense run") {
    const LabeledDataset ds = dense_set(50, 17);  // 200 images
    DinoConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 1;
    const DinoCheckpoint ck = pretrain(ds.dataset, cfg, builtin_policy("weak"));
    REQUIRE(ck.log.size() == 10);
    CAPTURE(ck.log.front().mean_loss);
    CAPTURE(ck.log.back().mean_loss);
    CHECK(ck.log.back().mean_loss < ck.log.front().mean_loss);
    for (const EpochLog& e : ck.log) {
        CHECK(std::isfinite(e.mean_loss));
        CHECK(e.mean_loss >= 0.0);
        CHECK(e.teacher_entropy >= 0.0);
    }
}

TEST_CASE("collapse telemetry: entropy logged with centering disabled") {
    const LabeledDataset ds = dense_set(6, 19);
    DinoConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.seed = 2;
    cfg.disable_centering = true;
    const DinoCheckpoint ck = pretrain(ds.dataset, cfg, builtin_policy("weak"));
    REQUIRE(ck.log.size() == 3);
    for (const EpochLog& e : ck.log) {
        CHECK(std::isfinite(e.teacher_entropy));
        CHECK(e.teacher_entropy >= 0.0);
    }
    // trend is telemetry, not a contract; keep it visible in the test log
    MESSAGE("entropy without centering: ", ck.log[0].teacher_entropy, " -> ",
            ck.log[2].teacher_entropy);
    for (float c : ck.center) CHECK(c == 0.0f);  // center never updated
}
