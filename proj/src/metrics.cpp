#include "augscale/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "augscale/error.hpp"

namespace augscale {

namespace {

std::set<int> distinct_labels(const std::vector<int>& labels) {
    return std::set<int>(labels.begin(), labels.end());
}

void check_inputs(const Mat<double>& scores, const std::vector<int>& labels) {
    if (scores.rows != static_cast<int>(labels.size()))
        throw UsageError("metrics: score rows and label count differ");
    if (scores.rows < 2) throw UsageError("metrics: need at least 2 items");
    for (int l : labels)
        if (l < 0 || l >= scores.cols) throw UsageError("metrics: label outside score columns");
}

double auroc_binary(const std::vector<double>& score, const std::vector<char>& positive) {
    // average ranks within tie groups, U statistic over positives
    std::vector<int> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return score[a] < score[b]; });
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (char p : positive) (p ? n_pos : n_neg)++;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && score[order[j]] == score[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (positive[order[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(const std::vector<double>& score, const std::vector<char>& positive) {
    // stable descending sort: ties keep ascending index order
    std::vector<int> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return score[a] > score[b]; });
    std::size_t n_pos = 0;
    for (char p : positive) n_pos += p ? 1 : 0;
    double ap = 0.0;
    std::size_t seen_pos = 0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank) {
        if (positive[order[rank - 1]]) {
            ++seen_pos;
            ap += static_cast<double>(seen_pos) / static_cast<double>(rank);
        }
    }
    return ap / static_cast<double>(n_pos);
}

template <typename F>
OvrResult ovr_reduce(const Mat<double>& scores, const std::vector<int>& labels, F&& binary_metric) {
    check_inputs(scores, labels);
    OvrResult res;
    for (int c : distinct_labels(labels)) {
        std::vector<double> col(scores.rows);
        std::vector<char> pos(scores.rows);
        std::size_t n_pos = 0;
        for (int r = 0; r < scores.rows; ++r) {
            col[r] = scores(r, c);
            pos[r] = labels[r] == c ? 1 : 0;
            n_pos += pos[r];
        }
        if (n_pos == 0 || n_pos == static_cast<std::size_t>(scores.rows)) {
            res.skipped.push_back(c);
            continue;
        }
        res.class_ids.push_back(c);
        res.per_class.push_back(binary_metric(col, pos));
    }
    if (res.class_ids.empty()) throw DataError("metrics: no class has both positives and negatives");
    res.macro = std::accumulate(res.per_class.begin(), res.per_class.end(), 0.0) /
                static_cast<double>(res.per_class.size());
    return res;
}

}  // namespace

OvrResult auroc_ovr(const Mat<double>& scores, const std::vector<int>& labels) {
    return ovr_reduce(scores, labels, auroc_binary);
}

OvrResult aupr_ovr(const Mat<double>& scores, const std::vector<int>& labels) {
    return ovr_reduce(scores, labels, average_precision);
}

ProbeResult scores_to_probe_result(const Mat<double>& scores, const std::vector<int>& labels,
                                   std::uint64_t seed, const std::string& probe_kind) {
    const OvrResult roc = auroc_ovr(scores, labels);
    const OvrResult pr = aupr_ovr(scores, labels);
    ProbeResult out;
    out.auroc_macro = roc.macro;
    out.aupr_macro = pr.macro;
    out.per_class_auroc = roc.per_class;
    out.per_class_aupr = pr.per_class;
    out.class_ids = roc.class_ids;
    out.skipped_classes = roc.skipped;
    std::size_t hits = 0;
    for (int r = 0; r < scores.rows; ++r) {
        int best = 0;
        for (int c = 1; c < scores.cols; ++c)
            if (scores(r, c) > scores(r, best)) best = c;
        hits += best == labels[r] ? 1 : 0;
    }
    out.accuracy = static_cast<double>(hits) / static_cast<double>(scores.rows);
    out.seed = seed;
    out.probe_kind = probe_kind;
    return out;
}

double silhouette_score(const Mat<double>& points, const std::vector<int>& group_ids) {
    if (points.rows != static_cast<int>(group_ids.size()))
        throw UsageError("silhouette: row/group count mismatch");
    const std::set<int> groups = distinct_labels(group_ids);
    if (groups.size() < 2) throw UsageError("silhouette: need at least 2 groups");
    std::vector<std::size_t> group_size;
    std::vector<int> group_index(group_ids.size());
    {
        std::vector<int> id_of;
        for (int g : groups) id_of.push_back(g);
        group_size.assign(id_of.size(), 0);
        for (std::size_t i = 0; i < group_ids.size(); ++i) {
            const auto it = std::lower_bound(id_of.begin(), id_of.end(), group_ids[i]);
            group_index[i] = static_cast<int>(it - id_of.begin());
            group_size[group_index[i]]++;
        }
    }
    for (std::size_t s : group_size)
        if (s < 2) throw UsageError("silhouette: every group needs at least 2 members");

    const int n = points.rows;
    const int g_count = static_cast<int>(group_size.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> sum_to_group(g_count, 0.0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = 0.0;
            for (int c = 0; c < points.cols; ++c) {
                const double diff = points(i, c) - points(j, c);
                d += diff * diff;
            }
            sum_to_group[group_index[j]] += std::sqrt(d);
        }
        const int gi = group_index[i];
        const double a = sum_to_group[gi] / static_cast<double>(group_size[gi] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int g = 0; g < g_count; ++g) {
            if (g == gi) continue;
            b = std::min(b, sum_to_group[g] / static_cast<double>(group_size[g]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

}  // namespace augscale
