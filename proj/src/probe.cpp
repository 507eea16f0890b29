#include "augscale/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "augscale/error.hpp"
#include "augscale/rng.hpp"

namespace augscale {

FeatureTable extract_features(const DinoCheckpoint& ck, const LabeledDataset& ds,
                              bool use_teacher, bool normalize, par::Exec exec) {
    if (ds.size() == 0) throw DataError("extract_features: empty dataset");
    const EncoderWeights& w = use_teacher ? ck.teacher : ck.student;
    FeatureTable table;
    table.features = Mat<float>(static_cast<int>(ds.size()), w.config.embed_dim);
    table.labels = ds.labels;
    table.normalized = normalize;

    par::for_index(static_cast<std::int64_t>(ds.size()), exec, [&](std::int64_t i) {
        std::vector<float> e = forward_encoder(w, ds.dataset.images[i]).embedding;
        if (normalize) {
            double n = 0.0;
            for (float v : e) n += static_cast<double>(v) * v;
            n = std::sqrt(n);
            if (n > 0.0)
                for (float& v : e) v = static_cast<float>(v / n);
        }
        for (int c = 0; c < table.features.cols; ++c) table.features(i, c) = e[c];
    });
    return table;
}

namespace {

Mat<float> one_hot(const std::vector<int>& labels, int classes) {
    Mat<float> t(static_cast<int>(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<int>(i), labels[i]) = 1.0f;
    return t;
}

int max_label(const std::vector<int>& labels) {
    int mx = 0;
    for (int l : labels) mx = std::max(mx, l);
    return mx;
}

}  // namespace

LinearProbeOutcome train_linear_probe(const FeatureTable& train, const FeatureTable& val,
                                      const LinearProbeConfig& config) {
    if (train.features.rows < 2) throw DataError("linear probe: training table too small");
    if (train.features.cols != val.features.cols)
        throw DataError("linear probe: feature dimension mismatch");
    const std::set<int> train_classes(train.labels.begin(), train.labels.end());
    if (train_classes.size() < 2) throw DataError("linear probe: single-class training set");
    const int classes = std::max(max_label(train.labels), max_label(val.labels)) + 1;
    const int dim = train.features.cols;

    LinearProbe probe;
    probe.weights = Mat<float>(dim, classes);
    probe.bias = Mat<float>(1, classes);
    RngStream rng(config.seed, 0x9208E);
    for (auto& v : probe.weights.v) v = 0.01f * rng.next_gaussian();

    const Mat<float> targets = one_hot(train.labels, classes);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Tape<float> tape;
        const auto w = tape.param(probe.weights);
        const auto b = tape.param(probe.bias);
        const auto x = tape.constant(train.features);
        const auto logits = tape.add_row(tape.matmul(x, w), b);
        const auto loss = tape.ce_temp(logits, targets, 1.0f);
        tape.backward(loss);
        if (!std::isfinite(tape.val(loss)(0, 0)))
            throw NumericalError("linear probe: non-finite loss at epoch " +
                                 std::to_string(epoch));
        const Mat<float>& gw = tape.grad(w);
        const Mat<float>& gb = tape.grad(b);
        const float lr = static_cast<float>(config.lr);
        for (std::size_t i = 0; i < probe.weights.size(); ++i) probe.weights.v[i] -= lr * gw.v[i];
        for (std::size_t i = 0; i < probe.bias.size(); ++i) probe.bias.v[i] -= lr * gb.v[i];
    }

    LinearProbeOutcome out;
    out.probe = std::move(probe);
    out.result = scores_to_probe_result(linear_probe_scores(out.probe, val), val.labels,
                                        config.seed, "linear");
    return out;
}

Mat<double> linear_probe_scores(const LinearProbe& probe, const FeatureTable& table) {
    const int n = table.features.rows;
    const int classes = probe.weights.cols;
    Mat<double> scores(n, classes);
    for (int i = 0; i < n; ++i) {
        std::vector<double> logits(classes, 0.0);
        for (int c = 0; c < classes; ++c) logits[c] = probe.bias(0, c);
        for (int d = 0; d < probe.weights.rows; ++d) {
            const double xv = table.features(i, d);
            if (xv == 0.0) continue;
            for (int c = 0; c < classes; ++c) logits[c] += xv * probe.weights(d, c);
        }
        const std::vector<double> p = softmax_temp(logits, 1.0);
        for (int c = 0; c < classes; ++c) scores(i, c) = p[c];
    }
    return scores;
}

Mat<double> knn_scores(const FeatureTable& train, const FeatureTable& test, int k) {
    if (k < 1 || k > train.features.rows)
        throw UsageError("knn: k must be in [1, train size]");
    if (train.features.cols != test.features.cols)
        throw DataError("knn: feature dimension mismatch");
    const int classes = std::max(max_label(train.labels), max_label(test.labels)) + 1;
    const int n_train = train.features.rows;
    const int dim = train.features.cols;

    auto norm_of = [&](const Mat<float>& m, int row) {
        double n = 0.0;
        for (int c = 0; c < dim; ++c) n += static_cast<double>(m(row, c)) * m(row, c);
        return std::sqrt(n);
    };
    std::vector<double> train_norm(n_train);
    for (int i = 0; i < n_train; ++i) train_norm[i] = norm_of(train.features, i);

    Mat<double> scores(test.features.rows, classes);
    for (int t = 0; t < test.features.rows; ++t) {
        const double tn = norm_of(test.features, t);
        std::vector<std::pair<double, int>> sim(n_train);
        for (int i = 0; i < n_train; ++i) {
            double dot = 0.0;
            for (int c = 0; c < dim; ++c)
                dot += static_cast<double>(test.features(t, c)) * train.features(i, c);
            const double denom = std::max(tn * train_norm[i], 1e-12);
            sim[i] = {dot / denom, i};
        }
        std::partial_sort(sim.begin(), sim.begin() + k, sim.end(),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });
        for (int j = 0; j < k; ++j) scores(t, train.labels[sim[j].second]) += 1.0;
        for (int c = 0; c < classes; ++c) scores(t, c) /= static_cast<double>(k);
    }
    return scores;
}

ProbeResult knn_probe(const FeatureTable& train, const FeatureTable& test, int k) {
    return scores_to_probe_result(knn_scores(train, test, k), test.labels, 0, "knn");
}

}  // namespace augscale
