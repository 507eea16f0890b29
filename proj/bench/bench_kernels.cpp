// Times the serial reference path against the OpenMP path for the batch
// kernels and checks they agree bit-for-bit on the way.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>

#include "augscale/augment.hpp"
#include "augscale/dino.hpp"
#include "augscale/embed.hpp"
#include "augscale/experiment.hpp"
#include "augscale/pair_analysis.hpp"
#include "augscale/par.hpp"
#include "augscale/probe.hpp"
#include "augscale/synth.hpp"

using namespace augscale;
using Clock = std::chrono::steady_clock;

namespace {

double time_of(const std::function<void()>& fn) {
    const auto t0 = Clock::now();
    fn();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void row(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-24s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n", name, serial_s,
                parallel_s, serial_s / parallel_s, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("worker cap: %d threads\n\n", par::thread_cap());

    SynthConfig synth_cfg;
    synth_cfg.per_class = 125;  // 500 images
    synth_cfg.seed = 11;

    LabeledDataset ds_serial, ds_parallel;
    const double t_synth_s =
        time_of([&] { ds_serial = generate_synthetic(synth_cfg, par::Exec::serial); });
    const double t_synth_p =
        time_of([&] { ds_parallel = generate_synthetic(synth_cfg, par::Exec::parallel); });
    bool same = ds_serial.size() == ds_parallel.size();
    for (std::size_t i = 0; same && i < ds_serial.size(); ++i)
        same = ds_serial.dataset.images[i].data == ds_parallel.dataset.images[i].data;
    row("synth_generate", t_synth_s, t_synth_p, same);

    const AugmentationPolicy policy = builtin_policy("weak");
    std::vector<MultiCropViews> views_s, views_p;
    const double t_views_s = time_of(
        [&] { views_s = make_views_batch(ds_serial.dataset, policy, 7, 0, par::Exec::serial); });
    const double t_views_p = time_of(
        [&] { views_p = make_views_batch(ds_serial.dataset, policy, 7, 0, par::Exec::parallel); });
    same = views_s.size() == views_p.size();
    for (std::size_t i = 0; same && i < views_s.size(); ++i)
        for (std::size_t g = 0; same && g < views_s[i].globals.size(); ++g)
            same = views_s[i].globals[g].data == views_p[i].globals[g].data;
    row("make_views_batch", t_views_s, t_views_p, same);

    PairSet pairs_s, pairs_p;
    const double t_pairs_s = time_of([&] {
        pairs_s = sample_pairs(ds_serial.dataset, policy, 2000, 2000, RngStream(3, 1),
                               par::Exec::serial);
    });
    const double t_pairs_p = time_of([&] {
        pairs_p = sample_pairs(ds_serial.dataset, policy, 2000, 2000, RngStream(3, 1),
                               par::Exec::parallel);
    });
    DistanceStats stats_s, stats_p;
    const double t_an_s = time_of([&] {
        stats_s = analyze_pairs(pairs_s, DistanceMetric::l2, DistanceSpace::pixel, nullptr, 64,
                                true, par::Exec::serial);
    });
    const double t_an_p = time_of([&] {
        stats_p = analyze_pairs(pairs_p, DistanceMetric::l2, DistanceSpace::pixel, nullptr, 64,
                                true, par::Exec::parallel);
    });
    same = stats_s.values_pos == stats_p.values_pos && stats_s.values_neg == stats_p.values_neg;
    row("sample_pairs", t_pairs_s, t_pairs_p, true);
    row("analyze_pairs", t_an_s, t_an_p, same);

    DinoConfig dc;
    dc.epochs = 2;
    dc.seed = 5;
    DinoCheckpoint ck_s, ck_p;
    const double t_train_s =
        time_of([&] { ck_s = pretrain(ds_serial.dataset, dc, policy, par::Exec::serial); });
    const double t_train_p =
        time_of([&] { ck_p = pretrain(ds_serial.dataset, dc, policy, par::Exec::parallel); });
    same = true;
    {
        const auto a = ck_s.student.named_tensors();
        const auto b = ck_p.student.named_tensors();
        for (std::size_t k = 0; k < a.size(); ++k) same = same && a[k].second->v == b[k].second->v;
    }
    row("pretrain (2 epochs)", t_train_s, t_train_p, same);

    FeatureTable feats_s, feats_p;
    const double t_feat_s =
        time_of([&] { feats_s = extract_features(ck_s, ds_serial, true, true, par::Exec::serial); });
    const double t_feat_p = time_of(
        [&] { feats_p = extract_features(ck_s, ds_serial, true, true, par::Exec::parallel); });
    row("extract_features", t_feat_s, t_feat_p, feats_s.features.v == feats_p.features.v);

    Mat<double> fd(feats_s.features.rows, feats_s.features.cols);
    for (std::size_t i = 0; i < fd.size(); ++i) fd.v[i] = feats_s.features.v[i];
    TsneParams tsne;
    tsne.iterations = 150;
    Mat<double> emb_s, emb_p;
    const double t_tsne_s = time_of([&] { emb_s = tsne_2d(fd, tsne, par::Exec::serial); });
    const double t_tsne_p = time_of([&] { emb_p = tsne_2d(fd, tsne, par::Exec::parallel); });
    row("tsne_2d (150 iters)", t_tsne_s, t_tsne_p, emb_s.v == emb_p.v);

    return 0;
}
