#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "augscale/checkpoint_io.hpp"
#include "augscale/error.hpp"
#include "augscale/embed.hpp"
#include "augscale/experiment.hpp"
#include "augscale/format.hpp"
#include "augscale/probe.hpp"

namespace fs = std::filesystem;
using namespace augscale;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return experiment_config_from_json(read_file(path));
}

DistanceMetric parse_metric(const std::string& s) {
    if (s == "l1") return DistanceMetric::l1;
    if (s == "l2") return DistanceMetric::l2;
    throw UsageError("--metric must be l1 or l2");
}

DistanceSpace parse_space(const std::string& s) {
    if (s == "pixel") return DistanceSpace::pixel;
    if (s == "feature") return DistanceSpace::feature;
    throw UsageError("--space must be pixel or feature");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"augscale: augmentation-scale laboratory for dense-image contrastive learning"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
    std::string synth_config, synth_family = "dense", synth_out = "out/data";
    int synth_classes = 4, synth_per_class = 50, synth_size = 64;
    double synth_variation = 0.25;
    std::uint64_t synth_seed = 1;
    synth->add_option("--config", synth_config, "experiment JSON; its synth section wins");
    synth->add_option("--family", synth_family, "dense|sparse");
    synth->add_option("--classes", synth_classes, "class count");
    synth->add_option("--per-class", synth_per_class, "images per class");
    synth->add_option("--size", synth_size, "image side in pixels");
    synth->add_option("--variation", synth_variation, "instance perturbation amplitude [0,1]");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output dataset directory");

    // ---- pairs ----
    auto* pairs = app.add_subcommand("pairs", "positive/negative pair distance analysis");
    std::string pairs_data, pairs_policy = "weak", pairs_checkpoint, pairs_metric = "l2",
                pairs_space = "pixel", pairs_out = "pairs";
    int pairs_n = 1000, pairs_bins = 64;
    std::uint64_t pairs_seed = 1;
    pairs->add_option("--data", pairs_data, "dataset directory")->required();
    pairs->add_option("--policy", pairs_policy, "built-in name or policy JSON path");
    pairs->add_option("--checkpoint", pairs_checkpoint, "checkpoint for feature space");
    pairs->add_option("--metric", pairs_metric, "l1|l2");
    pairs->add_option("--space", pairs_space, "pixel|feature");
    pairs->add_option("--n", pairs_n, "pairs per kind");
    pairs->add_option("--bins", pairs_bins, "histogram bins");
    pairs->add_option("--seed", pairs_seed, "sampling seed");
    pairs->add_option("--out", pairs_out, "output prefix (writes .json and .csv)");

    // ---- pretrain ----
    auto* pretrain_cmd = app.add_subcommand("pretrain", "DINO-style self-distillation run");
    std::string pre_data, pre_policy = "weak", pre_out = "run", pre_config;
    std::uint64_t pre_seed = 1;
    int pre_epochs = -1, pre_batch = -1;
    double pre_lr = -1.0;
    bool pre_zero_wall = false;
    pretrain_cmd->add_option("--data", pre_data, "dataset directory")->required();
    pretrain_cmd->add_option("--policy", pre_policy, "built-in name or policy JSON path");
    pretrain_cmd->add_option("--config", pre_config, "experiment JSON; its dino section wins");
    pretrain_cmd->add_option("--seed", pre_seed, "training seed");
    pretrain_cmd->add_option("--epochs", pre_epochs, "override epochs");
    pretrain_cmd->add_option("--batch", pre_batch, "override batch size");
    pretrain_cmd->add_option("--lr", pre_lr, "override learning rate");
    pretrain_cmd->add_flag("--zero-wall", pre_zero_wall,
                           "zero the wall_seconds log column for byte-stable reruns");
    pretrain_cmd->add_option("--out", pre_out, "run output directory");

    // ---- probe ----
    auto* probe_cmd = app.add_subcommand("probe", "linear or k-NN probe of a checkpoint");
    std::string probe_ck, probe_data, probe_kind = "linear", probe_out = "probe.json";
    int probe_epochs = 300, probe_k = 5;
    double probe_lr = 1.0;
    std::uint64_t probe_seed = 1, probe_split_seed = 0;
    bool probe_split_seed_set = false;
    probe_cmd->add_option("--checkpoint", probe_ck, "checkpoint file")->required();
    probe_cmd->add_option("--data", probe_data, "labeled dataset directory")->required();
    probe_cmd->add_option("--kind", probe_kind, "linear|knn");
    probe_cmd->add_option("--epochs", probe_epochs, "linear probe epochs");
    probe_cmd->add_option("--lr", probe_lr, "linear probe learning rate");
    probe_cmd->add_option("--k", probe_k, "k for knn");
    probe_cmd->add_option("--seed", probe_seed, "probe seed");
    probe_cmd->add_option("--split-seed", probe_split_seed, "stratified split seed")
        ->each([&](const std::string&) { probe_split_seed_set = true; });
    probe_cmd->add_option("--out", probe_out, "output JSON path");

    // ---- embed ----
    auto* embed_cmd = app.add_subcommand("embed", "2-D embedding map of checkpoint features");
    std::string emb_ck, emb_data, emb_method = "tsne", emb_out = "embedding";
    double emb_perplexity = 30.0;
    int emb_iterations = 500, emb_raster = 0;
    std::uint64_t emb_seed = 1;
    embed_cmd->add_option("--checkpoint", emb_ck, "checkpoint file")->required();
    embed_cmd->add_option("--data", emb_data, "labeled dataset directory")->required();
    embed_cmd->add_option("--method", emb_method, "tsne|pca");
    embed_cmd->add_option("--perplexity", emb_perplexity, "t-SNE perplexity");
    embed_cmd->add_option("--iterations", emb_iterations, "t-SNE iterations");
    embed_cmd->add_option("--seed", emb_seed, "t-SNE seed");
    embed_cmd->add_option("--raster", emb_raster, "also write a PGM scatter of this size");
    embed_cmd->add_option("--out", emb_out, "output prefix (.csv, optional .pgm)");

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "aggregate run results into a table");
    std::string report_dir;
    report_cmd->add_option("--results", report_dir, "experiment output directory")->required();

    // ---- run ----
    auto* run_cmd = app.add_subcommand("run", "full pipeline from an experiment config");
    std::string run_config, run_out;
    run_cmd->add_option("--config", run_config, "experiment JSON")->required();
    run_cmd->add_option("--out", run_out, "override output_dir");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*synth) {
            SynthConfig cfg;
            if (!synth_config.empty()) {
                cfg = load_experiment_config(synth_config).synth;
            } else {
                if (synth_family == "dense")
                    cfg.family = SynthFamily::dense;
                else if (synth_family == "sparse")
                    cfg.family = SynthFamily::sparse;
                else
                    throw UsageError("--family must be dense or sparse");
                cfg.class_count = synth_classes;
                cfg.per_class = synth_per_class;
                cfg.image_size = synth_size;
                cfg.base_variation = static_cast<float>(synth_variation);
                cfg.seed = synth_seed;
            }
            const LabeledDataset ds = stage_synth(cfg, synth_out);
            std::printf("wrote %zu images (%d classes) to %s\n", ds.size(), ds.class_count,
                        synth_out.c_str());
        } else if (*pairs) {
            if (pairs_n < 1) throw UsageError("--n must be >= 1");
            const LabeledDataset ds = load_dataset_dir(pairs_data);
            const AugmentationPolicy policy = resolve_policy(pairs_policy);
            PairRunSpec spec;
            spec.metric = parse_metric(pairs_metric);
            spec.space = parse_space(pairs_space);
            spec.n_pos = spec.n_neg = pairs_n;
            spec.bins = pairs_bins;
            spec.seed = pairs_seed;
            std::optional<DinoCheckpoint> ck;
            if (spec.space == DistanceSpace::feature) {
                if (pairs_checkpoint.empty())
                    throw UsageError("feature space requires --checkpoint");
                ck = load_checkpoint(pairs_checkpoint);
            }
            const SeparabilityReport rep = stage_pairs(
                ds.dataset, policy, ck ? &*ck : nullptr, spec, pairs_out,
                hex16(fnv1a64(pairs_policy + "/" + std::to_string(pairs_seed))));
            std::printf("gap=%s overlap=%s auroc_pairs=%s -> %s.{json,csv}\n",
                        fmt_g9(rep.gap).c_str(), fmt_g9(rep.overlap).c_str(),
                        fmt_g9(rep.auroc_pairs).c_str(), pairs_out.c_str());
        } else if (*pretrain_cmd) {
            const LabeledDataset ds = load_dataset_dir(pre_data);
            const AugmentationPolicy policy = resolve_policy(pre_policy);
            DinoConfig dc;
            std::string hash = "none";
            if (!pre_config.empty()) {
                const ExperimentConfig ec = load_experiment_config(pre_config);
                dc = ec.dino;
                hash = experiment_config_hash(ec);
            }
            dc.policy_name = policy.name;
            dc.seed = pre_seed;
            dc.encoder.channels = ds.dataset.images.front().channels;
            if (pre_epochs >= 0) dc.epochs = pre_epochs;
            if (pre_batch >= 1) dc.batch_size = pre_batch;
            if (pre_lr > 0.0) dc.lr = pre_lr;
            const DinoCheckpoint ck =
                stage_pretrain(ds.dataset, dc, policy, pre_out, hash, pre_zero_wall);
            const double final_loss = ck.log.empty() ? 0.0 : ck.log.back().mean_loss;
            std::printf("pretrained %d epochs (final mean loss %s) -> %s\n", dc.epochs,
                        fmt_g9(final_loss).c_str(), pre_out.c_str());
        } else if (*probe_cmd) {
            const DinoCheckpoint ck = load_checkpoint(probe_ck);
            const LabeledDataset ds = load_dataset_dir(probe_data);
            ProbeSpec spec;
            spec.kind = probe_kind;
            spec.epochs = probe_epochs;
            spec.lr = probe_lr;
            spec.k = probe_k;
            const std::uint64_t split_seed = probe_split_seed_set ? probe_split_seed : 0;
            const ProbeResult res = stage_probe(ck, ds, spec, probe_seed, split_seed, probe_out,
                                                "none");
            std::printf("auroc_macro=%s aupr_macro=%s accuracy=%s -> %s\n",
                        fmt_g9(res.auroc_macro).c_str(), fmt_g9(res.aupr_macro).c_str(),
                        fmt_g9(res.accuracy).c_str(), probe_out.c_str());
        } else if (*embed_cmd) {
            const DinoCheckpoint ck = load_checkpoint(emb_ck);
            const LabeledDataset ds = load_dataset_dir(emb_data);
            const FeatureTable table = extract_features(ck, ds);
            Mat<double> feats(table.features.rows, table.features.cols);
            for (std::size_t i = 0; i < feats.size(); ++i) feats.v[i] = table.features.v[i];
            Mat<double> coords;
            if (emb_method == "tsne") {
                TsneParams params;
                params.perplexity = emb_perplexity;
                params.iterations = emb_iterations;
                params.seed = emb_seed;
                coords = tsne_2d(feats, params);
            } else if (emb_method == "pca") {
                coords = pca_2d(feats).coords;
            } else {
                throw UsageError("--method must be tsne or pca");
            }
            std::string csv = "id,label,x,y\n";
            for (int r = 0; r < coords.rows; ++r)
                csv += std::to_string(ds.dataset.source_ids[r]) + "," +
                       std::to_string(ds.labels[r]) + "," + fmt_g9(coords(r, 0)) + "," +
                       fmt_g9(coords(r, 1)) + "\n";
            std::ofstream out_csv(emb_out + ".csv", std::ios::trunc);
            if (!out_csv) throw DataError("cannot write " + emb_out + ".csv");
            out_csv << csv;
            if (emb_raster > 0)
                save_image(rasterize_scatter(coords, ds.labels, emb_raster), emb_out + ".pgm");
            std::printf("embedded %d points -> %s.csv%s\n", coords.rows, emb_out.c_str(),
                        emb_raster > 0 ? " (+ .pgm scatter)" : "");
        } else if (*report_cmd) {
            const ReportOutcome rep = stage_report(report_dir);
            std::fputs(rep.text.c_str(), stdout);
            if (rep.warnings > 0)
                std::fprintf(stderr, "report finished with %d warning(s)\n", rep.warnings);
        } else if (*run_cmd) {
            ExperimentConfig cfg = load_experiment_config(run_config);
            if (!run_out.empty()) cfg.output_dir = run_out;
            const ReportOutcome rep = run_experiment(cfg);
            std::fputs(rep.text.c_str(), stdout);
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    }
    return 0;
}
