#include "augscale/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "augscale/checkpoint_io.hpp"
#include "augscale/error.hpp"
#include "augscale/format.hpp"
#include "augscale/probe.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace augscale {

namespace {

json synth_to_json(const SynthConfig& c) {
    return {{"family", c.family == SynthFamily::dense ? "dense" : "sparse"},
            {"class_count", c.class_count},
            {"per_class", c.per_class},
            {"image_size", c.image_size},
            {"base_variation", c.base_variation},
            {"seed", c.seed}};
}

SynthConfig synth_from_json(const json& j) {
    SynthConfig c;
    if (j.contains("family")) {
        const std::string f = j.at("family").get<std::string>();
        if (f == "dense")
            c.family = SynthFamily::dense;
        else if (f == "sparse")
            c.family = SynthFamily::sparse;
        else
            throw DataError("synth family must be 'dense' or 'sparse'");
    }
    if (j.contains("class_count")) c.class_count = j.at("class_count").get<int>();
    if (j.contains("per_class")) c.per_class = j.at("per_class").get<int>();
    if (j.contains("image_size")) c.image_size = j.at("image_size").get<int>();
    if (j.contains("base_variation")) c.base_variation = j.at("base_variation").get<float>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

void apply_dino_overrides(DinoConfig& c, const json& j) {
    if (j.contains("policy_name")) c.policy_name = j.at("policy_name").get<std::string>();
    if (j.contains("teacher_temp")) c.teacher_temp = j.at("teacher_temp").get<double>();
    if (j.contains("student_temp")) c.student_temp = j.at("student_temp").get<double>();
    if (j.contains("center_momentum")) c.center_momentum = j.at("center_momentum").get<double>();
    if (j.contains("ema_momentum")) c.ema_momentum = j.at("ema_momentum").get<double>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("lr")) c.lr = j.at("lr").get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("encoder")) {
        const json& e = j.at("encoder");
        if (e.contains("patch_size")) c.encoder.patch_size = e.at("patch_size").get<int>();
        if (e.contains("embed_dim")) c.encoder.embed_dim = e.at("embed_dim").get<int>();
        if (e.contains("hidden_dim")) c.encoder.hidden_dim = e.at("hidden_dim").get<int>();
        if (e.contains("out_dim")) c.encoder.out_dim = e.at("out_dim").get<int>();
        if (e.contains("channels")) c.encoder.channels = e.at("channels").get<int>();
    }
}

std::string metric_name(DistanceMetric m) { return m == DistanceMetric::l1 ? "l1" : "l2"; }
std::string space_name(DistanceSpace s) {
    return s == DistanceSpace::pixel ? "pixel" : "feature";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path);
    out << text;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed experiment config: ") + e.what());
    }
    ExperimentConfig c;
    if (j.contains("synth")) c.synth = synth_from_json(j.at("synth"));
    if (j.contains("policies")) {
        for (const auto& p : j.at("policies")) {
            if (p.is_string())
                c.policies.push_back(builtin_policy(p.get<std::string>()));
            else
                c.policies.push_back(policy_from_json(p.dump()));
        }
    }
    if (c.policies.empty())
        for (const auto& n : builtin_policy_names()) c.policies.push_back(builtin_policy(n));
    if (j.contains("dino")) apply_dino_overrides(c.dino, j.at("dino"));
    if (j.contains("probe")) {
        const json& p = j.at("probe");
        if (p.contains("kind")) c.probe.kind = p.at("kind").get<std::string>();
        if (p.contains("epochs")) c.probe.epochs = p.at("epochs").get<int>();
        if (p.contains("lr")) c.probe.lr = p.at("lr").get<double>();
        if (p.contains("k")) c.probe.k = p.at("k").get<int>();
        if (c.probe.kind != "linear" && c.probe.kind != "knn")
            throw DataError("probe kind must be 'linear' or 'knn'");
    }
    if (j.contains("pairs")) {
        const json& p = j.at("pairs");
        if (p.contains("n_pos")) c.pairs.n_pos = p.at("n_pos").get<int>();
        if (p.contains("n_neg")) c.pairs.n_neg = p.at("n_neg").get<int>();
        if (p.contains("bins")) c.pairs.bins = p.at("bins").get<int>();
        if (p.contains("metric"))
            c.pairs.metric = p.at("metric").get<std::string>() == "l1" ? DistanceMetric::l1
                                                                       : DistanceMetric::l2;
    }
    if (j.contains("seeds"))
        for (const auto& s : j.at("seeds")) c.seeds.push_back(s.get<std::uint64_t>());
    if (c.seeds.empty()) c.seeds = {1, 2, 3, 4, 5};
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
    json policies = json::array();
    for (const auto& p : c.policies) policies.push_back(json::parse(policy_to_json(p)));
    json j = {{"synth", synth_to_json(c.synth)},
              {"policies", policies},
              {"dino", json::parse(dino_config_to_json(c.dino))},
              {"probe",
               {{"kind", c.probe.kind},
                {"epochs", c.probe.epochs},
                {"lr", c.probe.lr},
                {"k", c.probe.k}}},
              {"pairs",
               {{"n_pos", c.pairs.n_pos},
                {"n_neg", c.pairs.n_neg},
                {"metric", metric_name(c.pairs.metric)},
                {"bins", c.pairs.bins}}},
              {"seeds", c.seeds},
              {"output_dir", c.output_dir}};
    return j.dump(2);
}

std::string experiment_config_hash(const ExperimentConfig& config) {
    json j = json::parse(experiment_config_to_json(config));
    j.erase("output_dir");
    return hex16(fnv1a64(j.dump()));
}

LabeledDataset stage_synth(const SynthConfig& config, const std::string& dir, par::Exec exec) {
    LabeledDataset ds = generate_synthetic(config, exec);
    write_dataset_dir(ds, dir);
    return ds;
}

SeparabilityReport stage_pairs(const Dataset& ds, const AugmentationPolicy& policy,
                               const DinoCheckpoint* checkpoint, const PairRunSpec& spec,
                               const std::string& out_prefix, const std::string& config_hash,
                               par::Exec exec) {
    if (spec.n_pos < 1 || spec.n_neg < 1) throw UsageError("pairs: n must be >= 1");
    const PairSet pairs =
        sample_pairs(ds, policy, spec.n_pos, spec.n_neg, RngStream(spec.seed, 0x9A125), exec);
    const DistanceStats stats =
        analyze_pairs(pairs, spec.metric, spec.space, checkpoint, spec.bins, true, exec);
    const SeparabilityReport rep = separability(stats);

    std::string csv = "pair_kind,distance\n";
    for (double v : stats.values_pos) csv += "pos," + fmt_g9(v) + "\n";
    for (double v : stats.values_neg) csv += "neg," + fmt_g9(v) + "\n";
    write_text_file(out_prefix + ".csv", csv);

    json j = {{"gap", rep.gap},
              {"overlap", rep.overlap},
              {"auroc_pairs", rep.auroc_pairs},
              {"mean_pos", stats.mean_pos},
              {"mean_neg", stats.mean_neg},
              {"std_pos", stats.std_pos},
              {"std_neg", stats.std_neg},
              {"metric", metric_name(spec.metric)},
              {"space", space_name(spec.space)},
              {"n_pos", spec.n_pos},
              {"n_neg", spec.n_neg},
              {"seed", spec.seed},
              {"policy", policy.name},
              {"config_hash", config_hash}};
    write_text_file(out_prefix + ".json", j.dump(2) + "\n");
    return rep;
}

DinoCheckpoint stage_pretrain(const Dataset& ds, const DinoConfig& config,
                              const AugmentationPolicy& policy, const std::string& run_dir,
                              const std::string& config_hash, bool deterministic_log,
                              par::Exec exec) {
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    DinoCheckpoint ck = pretrain(ds, config, policy, exec);
    if (deterministic_log)
        for (EpochLog& e : ck.log) e.wall_seconds = 0.0;
    save_checkpoint(ck, (fs::path(run_dir) / "checkpoint.aslb").string());

    std::string csv = "# policy=" + policy.name + " seed=" + std::to_string(config.seed) +
                      " config=" + config_hash + "\n";
    csv += "epoch,mean_loss,teacher_entropy,wall_seconds\n";
    for (const EpochLog& e : ck.log) {
        const double wall = deterministic_log ? 0.0 : e.wall_seconds;
        csv += std::to_string(e.epoch) + "," + fmt_g9(e.mean_loss) + "," +
               fmt_g9(e.teacher_entropy) + "," + fmt_g9(wall) + "\n";
    }
    write_text_file((fs::path(run_dir) / "log.csv").string(), csv);
    return ck;
}

ProbeResult stage_probe(const DinoCheckpoint& ck, const LabeledDataset& ds,
                        const ProbeSpec& spec, std::uint64_t probe_seed,
                        std::uint64_t split_seed, const std::string& out_path,
                        const std::string& config_hash, par::Exec exec) {
    const SplitResult split = split_stratified(ds, SplitFractions{}, split_seed);
    const FeatureTable train = extract_features(ck, split.train, true, true, exec);
    const FeatureTable test = extract_features(ck, split.test, true, true, exec);

    ProbeResult result;
    if (spec.kind == "linear") {
        LinearProbeConfig cfg;
        cfg.epochs = spec.epochs;
        cfg.lr = spec.lr;
        cfg.seed = probe_seed;
        result = train_linear_probe(train, test, cfg).result;
    } else if (spec.kind == "knn") {
        result = knn_probe(train, test, spec.k);
        result.seed = probe_seed;
    } else {
        throw UsageError("probe kind must be 'linear' or 'knn'");
    }

    json j = {{"auroc_macro", result.auroc_macro},
              {"aupr_macro", result.aupr_macro},
              {"per_class_auroc", result.per_class_auroc},
              {"per_class_aupr", result.per_class_aupr},
              {"class_ids", result.class_ids},
              {"skipped_classes", result.skipped_classes},
              {"accuracy", result.accuracy},
              {"seed", result.seed},
              {"probe_kind", result.probe_kind},
              {"policy", ck.config.policy_name},
              {"config_hash", config_hash}};
    write_text_file(out_path, j.dump(2) + "\n");
    return result;
}

double augmentation_cluster_score(const DinoCheckpoint& ck, const Dataset& ds,
                                  const AugmentationPolicy& policy, int n_groups,
                                  int views_per_group, std::uint64_t seed, par::Exec exec) {
    if (n_groups < 2 || views_per_group < 2)
        throw UsageError("cluster score needs >= 2 groups of >= 2 views");
    if (ds.size() < static_cast<std::size_t>(n_groups))
        throw DataError("cluster score: dataset smaller than group count");

    const int total = n_groups * views_per_group;
    const std::size_t stride = ds.size() / static_cast<std::size_t>(n_groups);
    Mat<double> feats(total, ck.config.encoder.embed_dim);
    std::vector<int> groups(total);
    par::for_index(total, exec, [&](std::int64_t t) {
        const int g = static_cast<int>(t) / views_per_group;
        const int v = static_cast<int>(t) % views_per_group;
        const RngStream rng = RngStream(seed, 0xC7057E4)
                                  .split(static_cast<std::uint64_t>(g))
                                  .split(static_cast<std::uint64_t>(v));
        // stride across the dataset so groups span all classes; raw
        // embeddings, since unit-normalizing a near-constant feature field
        // just amplifies its direction noise
        const Image& source = ds.images[static_cast<std::size_t>(g) * stride];
        const Image view = augment_view(source, policy, true, rng);
        const std::vector<float> e = forward_encoder(ck.teacher, view).embedding;
        for (int c = 0; c < feats.cols; ++c) feats(t, c) = e[c];
        groups[t] = g;
    });
    return silhouette_score(feats, groups);
}

ReportOutcome stage_report(const std::string& results_dir) {
    const fs::path runs = fs::path(results_dir) / "runs";
    if (!fs::is_directory(runs)) throw DataError("no runs directory under " + results_dir);

    // metric -> policy -> seed values
    std::map<std::string, std::map<std::string, std::vector<double>>> cells;
    std::vector<std::string> policies;
    int warnings = 0;

    for (const auto& policy_dir : fs::directory_iterator(runs)) {
        if (!policy_dir.is_directory()) continue;
        const std::string policy = policy_dir.path().filename().string();
        policies.push_back(policy);
        for (const auto& seed_dir : fs::directory_iterator(policy_dir.path())) {
            if (!seed_dir.is_directory()) continue;
            auto read_json = [&](const char* file) -> std::optional<json> {
                std::ifstream in(seed_dir.path() / file);
                if (!in) {
                    ++warnings;
                    return std::nullopt;
                }
                json j;
                try {
                    in >> j;
                } catch (const json::exception&) {
                    ++warnings;
                    return std::nullopt;
                }
                return j;
            };
            if (auto probe = read_json("probe.json")) {
                cells["auroc_macro"][policy].push_back(probe->at("auroc_macro").get<double>());
                cells["aupr_macro"][policy].push_back(probe->at("aupr_macro").get<double>());
                cells["accuracy"][policy].push_back(probe->at("accuracy").get<double>());
            }
            if (auto pairs = read_json("pairs_feature.json")) {
                cells["pair_gap"][policy].push_back(pairs->at("gap").get<double>());
                cells["pair_overlap"][policy].push_back(pairs->at("overlap").get<double>());
                cells["pair_auroc"][policy].push_back(pairs->at("auroc_pairs").get<double>());
            }
            if (auto cluster = read_json("cluster.json")) {
                cells["silhouette"][policy].push_back(cluster->at("silhouette").get<double>());
            }
        }
    }
    if (cells.empty()) throw DataError("no run results found under " + results_dir);
    std::sort(policies.begin(), policies.end());

    const std::size_t expected_seeds = [&] {
        std::size_t mx = 0;
        for (auto& [metric, per_policy] : cells)
            for (auto& [policy, values] : per_policy) mx = std::max(mx, values.size());
        return mx;
    }();

    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };

    // lower-is-better metrics invert the "best" marking
    auto lower_is_better = [](const std::string& metric) { return metric == "pair_overlap"; };

    std::string csv = "metric";
    for (const auto& p : policies) csv += "," + p + "_median," + p + "_min," + p + "_max";
    csv += ",best\n";
    std::string text = "policy comparison (median over seeds, min/max in parentheses)\n";

    for (auto& [metric, per_policy] : cells) {
        csv += metric;
        text += "\n  " + metric + ":\n";
        std::string best;
        double best_median = 0.0;
        for (const auto& p : policies) {
            auto it = per_policy.find(p);
            if (it == per_policy.end() || it->second.empty()) {
                ++warnings;
                csv += ",,,";
                text += "    " + p + ": MISSING\n";
                continue;
            }
            if (it->second.size() < expected_seeds) ++warnings;
            std::vector<double> v = it->second;
            const double med = median_of(v);
            const double lo = *std::min_element(v.begin(), v.end());
            const double hi = *std::max_element(v.begin(), v.end());
            csv += "," + fmt_g9(med) + "," + fmt_g9(lo) + "," + fmt_g9(hi);
            char line[160];
            std::snprintf(line, sizeof(line), "    %-10s %.4f (%.4f, %.4f) [n=%zu]\n", p.c_str(),
                          med, lo, hi, v.size());
            text += line;
            const bool better = best.empty() || (lower_is_better(metric) ? med < best_median
                                                                         : med > best_median);
            if (better) {
                best = p;
                best_median = med;
            }
        }
        csv += "," + best + "\n";
        text += "    best: " + best + "\n";
    }
    if (warnings > 0)
        text += "\nwarnings: " + std::to_string(warnings) + " (missing or short results)\n";

    ReportOutcome out;
    out.csv = csv;
    out.text = text;
    out.warnings = warnings;
    write_text_file((fs::path(results_dir) / "report.csv").string(), csv);
    write_text_file((fs::path(results_dir) / "report.txt").string(), text);
    return out;
}

ReportOutcome run_experiment(const ExperimentConfig& config, par::Exec exec) {
    const std::string hash = experiment_config_hash(config);
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (!fs::is_directory(config.output_dir))
        throw DataError("cannot create output directory: " + config.output_dir);
    write_text_file((fs::path(config.output_dir) / "config.json").string(),
                    experiment_config_to_json(config) + "\n");

    const LabeledDataset ds =
        stage_synth(config.synth, (fs::path(config.output_dir) / "data").string(), exec);

    for (const AugmentationPolicy& policy : config.policies) {
        for (std::uint64_t seed : config.seeds) {
            const fs::path run_dir =
                fs::path(config.output_dir) / "runs" / policy.name / ("seed_" + std::to_string(seed));
            fs::create_directories(run_dir, ec);

            DinoConfig dc = config.dino;
            dc.policy_name = policy.name;
            dc.seed = seed;
            dc.encoder.channels = ds.dataset.images.front().channels;

            PairRunSpec pixel_spec;
            pixel_spec.metric = config.pairs.metric;
            pixel_spec.space = DistanceSpace::pixel;
            pixel_spec.n_pos = config.pairs.n_pos;
            pixel_spec.n_neg = config.pairs.n_neg;
            pixel_spec.bins = config.pairs.bins;
            pixel_spec.seed = seed;
            stage_pairs(ds.dataset, policy, nullptr, pixel_spec,
                        (run_dir / "pairs_pixel").string(), hash, exec);

            const DinoCheckpoint ck =
                stage_pretrain(ds.dataset, dc, policy, run_dir.string(), hash, true, exec);

            PairRunSpec feature_spec = pixel_spec;
            feature_spec.space = DistanceSpace::feature;
            stage_pairs(ds.dataset, policy, &ck, feature_spec,
                        (run_dir / "pairs_feature").string(), hash, exec);

            stage_probe(ck, ds, config.probe, seed, config.synth.seed,
                        (run_dir / "probe.json").string(), hash, exec);

            const double silhouette = augmentation_cluster_score(
                ck, ds.dataset, policy, std::min<int>(20, static_cast<int>(ds.size())), 10, seed,
                exec);
            json cluster = {{"silhouette", silhouette},
                            {"n_groups", std::min<int>(20, static_cast<int>(ds.size()))},
                            {"views_per_group", 10},
                            {"policy", policy.name},
                            {"seed", seed},
                            {"config_hash", hash}};
            write_text_file((run_dir / "cluster.json").string(), cluster.dump(2) + "\n");
        }
    }
    return stage_report(config.output_dir);
}

}  // namespace augscale
