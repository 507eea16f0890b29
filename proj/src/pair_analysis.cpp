#include "augscale/pair_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "augscale/dino.hpp"
#include "augscale/error.hpp"

namespace augscale {

PairSet sample_pairs(const Dataset& ds, const AugmentationPolicy& policy, int n_pos, int n_neg,
                     RngStream rng, par::Exec exec) {
    if (ds.size() < 2) throw DataError("sample_pairs: dataset needs at least 2 images");
    if (n_pos < 1 || n_neg < 1) throw UsageError("sample_pairs: pair counts must be >= 1");

    // draw indices serially so the stream layout is stable, render in parallel
    struct PosDraw {
        std::size_t i;
    };
    struct NegDraw {
        std::size_t i, j;
    };
    std::vector<PosDraw> pos(n_pos);
    std::vector<NegDraw> neg(n_neg);
    RngStream pick = rng.split(1);
    for (auto& d : pos) d.i = pick.next_below(ds.size());
    for (auto& d : neg) {
        d.i = pick.next_below(ds.size());
        d.j = pick.next_below(ds.size());
        while (d.j == d.i) d.j = pick.next_below(ds.size());
    }

    PairSet out;
    out.positives.resize(n_pos);
    out.negatives.resize(n_neg);
    par::for_index(n_pos, exec, [&](std::int64_t p) {
        const RngStream s = rng.split(2).split(static_cast<std::uint64_t>(p));
        const std::size_t i = pos[p].i;
        out.positives[p] = {augment_view(ds.images[i], policy, true, s.split(0)),
                            augment_view(ds.images[i], policy, true, s.split(1)),
                            ds.source_ids[i]};
    });
    par::for_index(n_neg, exec, [&](std::int64_t p) {
        const RngStream s = rng.split(3).split(static_cast<std::uint64_t>(p));
        const std::size_t i = neg[p].i, j = neg[p].j;
        out.negatives[p] = {augment_view(ds.images[i], policy, true, s.split(0)),
                            augment_view(ds.images[j], policy, true, s.split(1)),
                            ds.source_ids[i], ds.source_ids[j]};
    });
    return out;
}

double pair_distance(const std::vector<float>& a, const std::vector<float>& b,
                     DistanceMetric metric) {
    if (a.size() != b.size()) throw UsageError("pair_distance: length mismatch");
    double acc = 0.0;
    if (metric == DistanceMetric::l1) {
        for (std::size_t k = 0; k < a.size(); ++k)
            acc += std::abs(static_cast<double>(a[k]) - static_cast<double>(b[k]));
        return acc;
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

namespace {

void mean_std(const std::vector<double>& xs, double& mean, double& stdev) {
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    stdev = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
}

std::vector<double> histogram(const std::vector<double>& xs, double hist_max, int bins) {
    std::vector<double> h(bins, 0.0);
    for (double x : xs) {
        int b = hist_max > 0.0 ? static_cast<int>(x / hist_max * bins) : 0;
        b = std::clamp(b, 0, bins - 1);
        h[b] += 1.0;
    }
    for (double& v : h) v /= static_cast<double>(xs.size());
    return h;
}

// Distance of one pair of views, resized to the larger common size first.
double view_distance_pixel(const Image& a, const Image& b, DistanceMetric metric) {
    const int w = std::max(a.width, b.width);
    const int h = std::max(a.height, b.height);
    if (a.width == w && a.height == h && b.width == w && b.height == h)
        return pair_distance(a.data, b.data, metric);
    const Image ra = (a.width == w && a.height == h) ? a : resize_bilinear(a, w, h);
    const Image rb = (b.width == w && b.height == h) ? b : resize_bilinear(b, w, h);
    return pair_distance(ra.data, rb.data, metric);
}

std::vector<float> embed_view(const Image& img, const DinoCheckpoint& ck, bool normalize) {
    std::vector<float> e = forward_encoder(ck.teacher, img).embedding;
    if (normalize) {
        double n = 0.0;
        for (float v : e) n += static_cast<double>(v) * v;
        n = std::sqrt(n);
        if (n > 0.0)
            for (float& v : e) v = static_cast<float>(v / n);
    }
    return e;
}

}  // namespace

DistanceStats make_distance_stats(std::vector<double> values_pos, std::vector<double> values_neg,
                                  DistanceMetric metric, DistanceSpace space, int bins) {
    if (values_pos.empty() || values_neg.empty())
        throw UsageError("distance stats need non-empty positive and negative lists");
    if (bins < 2) throw UsageError("histogram needs at least 2 bins");
    DistanceStats st;
    st.metric = metric;
    st.space = space;
    st.values_pos = std::move(values_pos);
    st.values_neg = std::move(values_neg);
    for (double v : st.values_pos)
        if (v < 0.0) throw NumericalError("negative distance in stats");
    for (double v : st.values_neg)
        if (v < 0.0) throw NumericalError("negative distance in stats");
    st.hist_max = 0.0;
    for (double v : st.values_pos) st.hist_max = std::max(st.hist_max, v);
    for (double v : st.values_neg) st.hist_max = std::max(st.hist_max, v);
    st.hist_pos = histogram(st.values_pos, st.hist_max, bins);
    st.hist_neg = histogram(st.values_neg, st.hist_max, bins);
    mean_std(st.values_pos, st.mean_pos, st.std_pos);
    mean_std(st.values_neg, st.mean_neg, st.std_neg);
    return st;
}

DistanceStats analyze_pairs(const PairSet& pairs, DistanceMetric metric, DistanceSpace space,
                            const DinoCheckpoint* encoder, int bins, bool normalize_features,
                            par::Exec exec) {
    if (space == DistanceSpace::feature && encoder == nullptr)
        throw UsageError("feature-space analysis requires a checkpoint");
    std::vector<double> dpos(pairs.positives.size());
    std::vector<double> dneg(pairs.negatives.size());

    auto one = [&](const Image& a, const Image& b) {
        if (space == DistanceSpace::pixel) return view_distance_pixel(a, b, metric);
        return pair_distance(embed_view(a, *encoder, normalize_features),
                             embed_view(b, *encoder, normalize_features), metric);
    };
    par::for_index(static_cast<std::int64_t>(pairs.positives.size()), exec, [&](std::int64_t p) {
        dpos[p] = one(pairs.positives[p].view_a, pairs.positives[p].view_b);
    });
    par::for_index(static_cast<std::int64_t>(pairs.negatives.size()), exec, [&](std::int64_t p) {
        dneg[p] = one(pairs.negatives[p].view_a, pairs.negatives[p].view_b);
    });
    return make_distance_stats(std::move(dpos), std::move(dneg), metric, space, bins);
}

SeparabilityReport separability(const DistanceStats& stats) {
    if (stats.values_pos.empty() || stats.values_neg.empty())
        throw UsageError("separability needs non-empty distance lists");
    SeparabilityReport rep;
    rep.gap = stats.mean_neg - stats.mean_pos;
    rep.overlap = 0.0;
    for (std::size_t b = 0; b < stats.hist_pos.size(); ++b)
        rep.overlap += std::min(stats.hist_pos[b], stats.hist_neg[b]);

    // P(random negative > random positive), ties half credit, via merged ranks
    struct Tagged {
        double v;
        bool neg;
    };
    std::vector<Tagged> all;
    all.reserve(stats.values_pos.size() + stats.values_neg.size());
    for (double v : stats.values_pos) all.push_back({v, false});
    for (double v : stats.values_neg) all.push_back({v, true});
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.v < b.v; });
    double rank_sum_neg = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].v == all[i].v) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average
        for (std::size_t k = i; k < j; ++k)
            if (all[k].neg) rank_sum_neg += avg_rank;
        i = j;
    }
    const double n_neg = static_cast<double>(stats.values_neg.size());
    const double n_pos = static_cast<double>(stats.values_pos.size());
    const double u = rank_sum_neg - n_neg * (n_neg + 1.0) / 2.0;
    rep.auroc_pairs = u / (n_neg * n_pos);
    return rep;
}

}  // namespace augscale
