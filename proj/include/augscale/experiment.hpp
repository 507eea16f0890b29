#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "augscale/augment.hpp"
#include "augscale/dino.hpp"
#include "augscale/metrics.hpp"
#include "augscale/pair_analysis.hpp"
#include "augscale/synth.hpp"

namespace augscale {

struct ProbeSpec {
    std::string kind = "linear";  // "linear" | "knn"
    int epochs = 300;
    double lr = 1.0;
    int k = 5;
};

struct PairSpec {
    int n_pos = 1000;
    int n_neg = 1000;
    DistanceMetric metric = DistanceMetric::l2;
    int bins = 64;
};

// One JSON document drives the whole pipeline: synth -> pairs -> pretrain
// per policy -> probe -> report.
struct ExperimentConfig {
    SynthConfig synth;
    std::vector<AugmentationPolicy> policies;
    DinoConfig dino;  // per-run seed/policy substituted; encoder shared
    ProbeSpec probe;
    PairSpec pairs;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "out";
};

ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& config);

// FNV-1a of the resolved config JSON with output_dir removed, so runs into
// different directories stay comparable byte-for-byte.
std::string experiment_config_hash(const ExperimentConfig& config);

// ---- pipeline stages (shared by the CLI subcommands) ---------------------

// Writes images + manifest; returns the dataset.
LabeledDataset stage_synth(const SynthConfig& config, const std::string& dir,
                           par::Exec exec = par::Exec::parallel);

struct PairRunSpec {
    DistanceMetric metric = DistanceMetric::l2;
    DistanceSpace space = DistanceSpace::pixel;
    int n_pos = 1000;
    int n_neg = 1000;
    int bins = 64;
    std::uint64_t seed = 1;
};

// Samples pairs, analyzes, writes <prefix>.csv (pair_kind,distance) and
// <prefix>.json (gap/overlap/auroc_pairs plus run provenance).
SeparabilityReport stage_pairs(const Dataset& ds, const AugmentationPolicy& policy,
                               const DinoCheckpoint* checkpoint, const PairRunSpec& spec,
                               const std::string& out_prefix, const std::string& config_hash,
                               par::Exec exec = par::Exec::parallel);

// Pretrains and writes checkpoint.aslb + log.csv under run_dir. When
// deterministic_log, the wall_seconds column is zeroed so reruns are
// byte-identical.
DinoCheckpoint stage_pretrain(const Dataset& ds, const DinoConfig& config,
                              const AugmentationPolicy& policy, const std::string& run_dir,
                              const std::string& config_hash, bool deterministic_log,
                              par::Exec exec = par::Exec::parallel);

// Splits (stratified 0.6/0.2/0.2 on the synth seed), probes the test split
// with frozen teacher features, writes probe.json; returns the result.
ProbeResult stage_probe(const DinoCheckpoint& ck, const LabeledDataset& ds,
                        const ProbeSpec& spec, std::uint64_t probe_seed,
                        std::uint64_t split_seed, const std::string& out_path,
                        const std::string& config_hash, par::Exec exec = par::Exec::parallel);

// Silhouette of augmentation groups (n_groups images x views_per_group
// augmented views, teacher features).
double augmentation_cluster_score(const DinoCheckpoint& ck, const Dataset& ds,
                                  const AugmentationPolicy& policy, int n_groups,
                                  int views_per_group, std::uint64_t seed,
                                  par::Exec exec = par::Exec::parallel);

struct ReportOutcome {
    std::string csv;
    std::string text;
    int warnings = 0;  // missing seed files etc.
};

// Aggregates probe.json/pairs_feature.json/cluster.json under
// <results_dir>/runs into median (min, max) per policy with a "best"
// column; writes report.csv and report.txt.
ReportOutcome stage_report(const std::string& results_dir);

// Full pipeline; every artifact embeds {policy, seed, config hash}.
ReportOutcome run_experiment(const ExperimentConfig& config,
                             par::Exec exec = par::Exec::parallel);

}  // namespace augscale
