#include "augscale/dino.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "augscale/error.hpp"
#include "augscale/optim.hpp"

using nlohmann::json;

namespace augscale {

std::string dino_config_to_json(const DinoConfig& c) {
    json j = {{"policy_name", c.policy_name},
              {"teacher_temp", c.teacher_temp},
              {"student_temp", c.student_temp},
              {"center_momentum", c.center_momentum},
              {"ema_momentum", c.ema_momentum},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"weight_decay", c.weight_decay},
              {"seed", c.seed},
              {"disable_centering", c.disable_centering},
              {"encoder",
               {{"patch_size", c.encoder.patch_size},
                {"embed_dim", c.encoder.embed_dim},
                {"hidden_dim", c.encoder.hidden_dim},
                {"out_dim", c.encoder.out_dim},
                {"channels", c.encoder.channels}}}};
    return j.dump();
}

DinoConfig dino_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed dino config JSON: ") + e.what());
    }
    DinoConfig c;
    try {
        c.policy_name = j.at("policy_name").get<std::string>();
        c.teacher_temp = j.at("teacher_temp").get<double>();
        c.student_temp = j.at("student_temp").get<double>();
        c.center_momentum = j.at("center_momentum").get<double>();
        c.ema_momentum = j.at("ema_momentum").get<double>();
        c.epochs = j.at("epochs").get<int>();
        c.batch_size = j.at("batch_size").get<int>();
        c.lr = j.at("lr").get<double>();
        c.weight_decay = j.at("weight_decay").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("disable_centering"))
            c.disable_centering = j.at("disable_centering").get<bool>();
        const json& e = j.at("encoder");
        c.encoder.patch_size = e.at("patch_size").get<int>();
        c.encoder.embed_dim = e.at("embed_dim").get<int>();
        c.encoder.hidden_dim = e.at("hidden_dim").get<int>();
        c.encoder.out_dim = e.at("out_dim").get<int>();
        c.encoder.channels = e.at("channels").get<int>();
    } catch (const json::exception& e) {
        throw DataError(std::string("dino config JSON missing fields: ") + e.what());
    }
    return c;
}

namespace {

void validate_dino_config(const DinoConfig& c) {
    if (!(c.teacher_temp > 0.0) || !(c.student_temp > 0.0))
        throw UsageError("dino: temperatures must be positive");
    if (c.center_momentum < 0.0 || c.center_momentum >= 1.0 || c.ema_momentum < 0.0 ||
        c.ema_momentum >= 1.0)
        throw UsageError("dino: momenta must lie in [0,1)");
    if (c.epochs < 0 || c.batch_size < 1) throw UsageError("dino: bad epochs or batch size");
}

double entropy(const std::vector<float>& p) {
    double h = 0.0;
    for (float v : p)
        if (v > 0.0f) h -= static_cast<double>(v) * std::log(static_cast<double>(v));
    return h;
}

}  // namespace

std::vector<float> teacher_target(const std::vector<float>& logits,
                                  const std::vector<float>& center, double tau_t) {
    if (logits.size() != center.size())
        throw NumericalError("teacher_target: center length mismatch");
    std::vector<double> shifted(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k)
        shifted[k] = (static_cast<double>(logits[k]) - center[k]);
    const std::vector<double> p = softmax_temp(shifted, tau_t);
    std::vector<float> out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) out[k] = static_cast<float>(p[k]);
    return out;
}

double dino_loss(const std::vector<std::vector<float>>& student_logits,
                 const std::vector<std::vector<float>>& teacher_logits,
                 const std::vector<float>& center, double tau_s, double tau_t) {
    if (student_logits.empty() || teacher_logits.empty())
        throw UsageError("dino_loss: empty view lists");
    if (!(tau_s > 0.0) || !(tau_t > 0.0))
        throw UsageError("dino_loss: temperatures must be positive");
    double total = 0.0;
    int count = 0;
    for (std::size_t g = 0; g < teacher_logits.size(); ++g) {
        const std::vector<float> t = teacher_target(teacher_logits[g], center, tau_t);
        for (std::size_t v = 0; v < student_logits.size(); ++v) {
            if (v == g) continue;  // same view: teacher global g vs student view g
            std::vector<double> s(student_logits[v].begin(), student_logits[v].end());
            const std::vector<double> q = softmax_temp(s, tau_s);
            double h = 0.0;
            for (std::size_t k = 0; k < q.size(); ++k)
                if (t[k] > 0.0f) h -= t[k] * std::log(std::max(q[k], 1e-300));
            total += h;
            ++count;
        }
    }
    if (count == 0) throw UsageError("dino_loss: no teacher/student view pairs");
    return total / count;
}

std::vector<float> update_center(const std::vector<float>& center,
                                 const std::vector<std::vector<float>>& batch, double m) {
    if (batch.empty()) throw UsageError("update_center: empty batch");
    if (m < 0.0 || m >= 1.0) throw UsageError("update_center: momentum must be in [0,1)");
    std::vector<double> mean(center.size(), 0.0);
    for (const auto& row : batch) {
        if (row.size() != center.size()) throw NumericalError("update_center: length mismatch");
        for (std::size_t k = 0; k < row.size(); ++k) mean[k] += row[k];
    }
    std::vector<float> out(center.size());
    for (std::size_t k = 0; k < center.size(); ++k)
        out[k] = static_cast<float>(m * center[k] + (1.0 - m) * mean[k] / batch.size());
    return out;
}

void ema_update(EncoderWeights& teacher, const EncoderWeights& student, double m) {
    if (m < 0.0 || m > 1.0) throw UsageError("ema_update: momentum must be in [0,1]");
    auto t = teacher.named_tensors();
    auto s = student.named_tensors();
    for (std::size_t k = 0; k < t.size(); ++k) {
        Mat<float>& dst = *t[k].second;
        const Mat<float>& src = *s[k].second;
        if (!dst.same_shape(src)) throw NumericalError("ema_update: shape mismatch");
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst.v[i] = static_cast<float>(m * dst.v[i] + (1.0 - m) * src.v[i]);
    }
}

ImageStepResult image_step(const MultiCropViews& views, const EncoderWeights& student,
                           const EncoderWeights& teacher, const std::vector<float>& center,
                           const DinoConfig& config) {
    ImageStepResult out;

    // teacher consumes the globals only, no gradient path
    for (const Image& g : views.globals) {
        out.teacher_logits.push_back(forward_encoder(teacher, g).logits);
    }

    Tape<float> tape;
    const EncoderNodes<float> params = register_encoder_params(tape, student);
    std::vector<Tape<float>::NodeId> student_logits;
    for (const Image& g : views.globals)
        student_logits.push_back(
            forward_encoder_tape(tape, params, image_to_patches(g, student.config)).logits);
    for (const Image& l : views.locals)
        student_logits.push_back(
            forward_encoder_tape(tape, params, image_to_patches(l, student.config)).logits);

    Tape<float>::NodeId total = -1;
    int count = 0;
    for (std::size_t g = 0; g < out.teacher_logits.size(); ++g) {
        const std::vector<float> t =
            teacher_target(out.teacher_logits[g], center, config.teacher_temp);
        out.teacher_entropy_sum += entropy(t);
        Mat<float> target(1, static_cast<int>(t.size()));
        for (std::size_t k = 0; k < t.size(); ++k) target(0, k) = t[k];
        for (std::size_t v = 0; v < student_logits.size(); ++v) {
            if (v == g) continue;
            const auto ce = tape.ce_temp(student_logits[v], target,
                                         static_cast<float>(config.student_temp));
            total = (total < 0) ? ce : tape.add(total, ce);
            ++count;
        }
    }
    if (count == 0) throw UsageError("image_step: no view pairs (need n_local or n_global > 1)");
    const auto loss = tape.scale(total, 1.0f / static_cast<float>(count));
    out.loss = tape.val(loss)(0, 0);
    tape.backward(loss);

    const Tape<float>::NodeId ids[] = {params.patch_w,  params.patch_b,  params.trunk_w1,
                                       params.trunk_b1, params.trunk_w2, params.trunk_b2,
                                       params.head_w1,  params.head_b1,  params.head_w2};
    for (auto id : ids) out.grads.push_back(tape.grad(id));
    return out;
}

DinoCheckpoint pretrain(const Dataset& ds, const DinoConfig& config, par::Exec exec) {
    return pretrain(ds, config, resolve_policy(config.policy_name), exec);
}

DinoCheckpoint pretrain(const Dataset& ds, const DinoConfig& config,
                        const AugmentationPolicy& policy, par::Exec exec) {
    validate_dino_config(config);
    if (ds.size() == 0) throw DataError("pretrain: empty dataset");

    DinoCheckpoint ck;
    ck.config = config;
    ck.config.policy_name = policy.name;
    ck.student = init_encoder(config.encoder, config.seed);
    ck.teacher = ck.student;
    ck.center.assign(config.encoder.out_dim, 0.0f);

    auto params = ck.student.named_tensors();
    std::vector<Mat<float>*> param_ptrs;
    for (auto& [name, mat] : params) param_ptrs.push_back(mat);
    AdamWState opt_state = make_adamw_state(param_ptrs);
    AdamWConfig opt_cfg;
    opt_cfg.lr = config.lr;
    opt_cfg.weight_decay = config.weight_decay;

    const RngStream root(config.seed, 0xD1400);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        // deterministic shuffle
        std::vector<std::size_t> order(ds.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        RngStream shuffle_rng = root.split(1).split(static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.next_below(i + 1)]);

        double loss_sum = 0.0;
        double entropy_sum = 0.0;
        std::size_t entropy_count = 0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::size_t bsz = end - start;

            // phase A, parallel over images: views and constant teacher targets
            struct ImagePrep {
                MultiCropViews views;
                std::vector<std::vector<float>> teacher_logits;
                std::vector<Mat<float>> targets;  // centered, sharpened rows
            };
            std::vector<ImagePrep> prep(bsz);
            par::for_index(static_cast<std::int64_t>(bsz), exec, [&](std::int64_t bi) {
                const std::size_t idx = order[start + bi];
                ImagePrep& p = prep[bi];
                p.views = apply_policy(ds.images[idx], policy,
                                       view_stream(config.seed,
                                                   static_cast<std::uint64_t>(epoch),
                                                   ds.source_ids[idx]));
                p.views.source_id = ds.source_ids[idx];
                for (const Image& g : p.views.globals) {
                    p.teacher_logits.push_back(forward_encoder(ck.teacher, g).logits);
                    const std::vector<float> t =
                        teacher_target(p.teacher_logits.back(), ck.center, config.teacher_temp);
                    Mat<float> row(1, static_cast<int>(t.size()));
                    for (std::size_t k = 0; k < t.size(); ++k) row(0, k) = t[k];
                    p.targets.push_back(std::move(row));
                }
            });

            // phase B, parallel over (image, view): one small tape per view
            struct ViewResult {
                double loss = 0.0;
                std::vector<Mat<float>> grads;
            };
            const int n_views = policy.n_global + policy.n_local;
            std::vector<ViewResult> view_results(bsz * n_views);
            par::for_index(static_cast<std::int64_t>(bsz * n_views), exec, [&](std::int64_t w) {
                const std::size_t bi = static_cast<std::size_t>(w) / n_views;
                const int v = static_cast<int>(w % n_views);
                const ImagePrep& p = prep[bi];
                const Image& view = v < policy.n_global
                                        ? p.views.globals[v]
                                        : p.views.locals[v - policy.n_global];
                const int pair_count =
                    policy.n_global * (n_views - 1);  // per-image normalization
                Tape<float> tape;
                const EncoderNodes<float> params = register_encoder_params(tape, ck.student);
                const auto fwd = forward_encoder_tape(tape, params,
                                                      image_to_patches(view, config.encoder));
                Tape<float>::NodeId total = -1;
                for (int g = 0; g < policy.n_global; ++g) {
                    if (g == v) continue;
                    const auto ce = tape.ce_temp(fwd.logits, p.targets[g],
                                                 static_cast<float>(config.student_temp));
                    total = total < 0 ? ce : tape.add(total, ce);
                }
                ViewResult& out = view_results[w];
                if (total < 0) return;  // a lone global view with n_global == 1
                const auto loss =
                    tape.scale(total, 1.0f / static_cast<float>(pair_count));
                out.loss = tape.val(loss)(0, 0);
                tape.backward(loss);
                const Tape<float>::NodeId ids[] = {params.patch_w,  params.patch_b,
                                                   params.trunk_w1, params.trunk_b1,
                                                   params.trunk_w2, params.trunk_b2,
                                                   params.head_w1,  params.head_b1,
                                                   params.head_w2};
                for (auto id : ids) out.grads.push_back(tape.grad(id));
            });

            // ordered reduction keeps results independent of thread count
            std::vector<Mat<float>> grads;
            for (auto& [name, mat] : params) grads.emplace_back(mat->rows, mat->cols);
            double batch_loss = 0.0;
            std::vector<std::vector<float>> teacher_rows;
            for (std::size_t w = 0; w < view_results.size(); ++w) {
                const ViewResult& r = view_results[w];
                batch_loss += r.loss;
                for (std::size_t k = 0; k < r.grads.size(); ++k)
                    for (std::size_t i = 0; i < grads[k].size(); ++i)
                        grads[k].v[i] += r.grads[k].v[i];
            }
            for (std::size_t bi = 0; bi < bsz; ++bi) {
                for (std::size_t g = 0; g < prep[bi].targets.size(); ++g) {
                    double h = 0.0;
                    for (int k = 0; k < prep[bi].targets[g].cols; ++k) {
                        const float pv = prep[bi].targets[g](0, k);
                        if (pv > 0.0f) h -= static_cast<double>(pv) * std::log(pv);
                    }
                    entropy_sum += h;
                    ++entropy_count;
                }
                for (auto& row : prep[bi].teacher_logits)
                    teacher_rows.push_back(std::move(row));
            }
            batch_loss /= static_cast<double>(bsz);
            for (auto& g : grads)
                for (auto& v : g.v) v /= static_cast<float>(bsz);

            if (!std::isfinite(batch_loss))
                throw NumericalError("pretrain: non-finite loss at epoch " +
                                     std::to_string(epoch));

            adamw_step(param_ptrs, grads, opt_state, opt_cfg);
            ema_update(ck.teacher, ck.student, config.ema_momentum);
            if (!config.disable_centering)
                ck.center = update_center(ck.center, teacher_rows, config.center_momentum);

            loss_sum += batch_loss;
            ++batches;
        }

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ck.log.push_back({epoch, loss_sum / static_cast<double>(batches),
                          entropy_sum / static_cast<double>(entropy_count), wall});
    }
    return ck;
}

}  // namespace augscale
