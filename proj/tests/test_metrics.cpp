#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "augscale/error.hpp"
#include "augscale/metrics.hpp"
#include "augscale/rng.hpp"

#include "support.hpp"

using namespace augscale;

namespace {

using testsupport::ap_oracle;
using testsupport::auroc_oracle;

Mat<double> binary_scores(const std::vector<double>& s) {
    Mat<double> m(static_cast<int>(s.size()), 2);
    for (std::size_t i = 0; i < s.size(); ++i) {
        m(static_cast<int>(i), 0) = 1.0 - s[i];
        m(static_cast<int>(i), 1) = s[i];
    }
    return m;
}

}  // namespace

TEST_CASE("auroc: hand fixture 0.75 and degenerate orderings") {
    const Mat<double> scores = binary_scores({0.1, 0.4, 0.35, 0.8});
    const std::vector<int> labels = {0, 0, 1, 1};
    const OvrResult r = auroc_ovr(scores, labels);
    // class 1: positives {0.35, 0.8} vs negatives {0.1, 0.4}: wins 3 of 4
    REQUIRE(r.class_ids.size() == 2);
    CHECK(r.per_class[1] == doctest::Approx(0.75).epsilon(1e-15));

    const Mat<double> perfect = binary_scores({0.1, 0.2, 0.8, 0.9});
    CHECK(auroc_ovr(perfect, labels).per_class[1] == doctest::Approx(1.0));

    const Mat<double> flat = binary_scores({0.5, 0.5, 0.5, 0.5});
    const OvrResult tied = auroc_ovr(flat, labels);
    CHECK(tied.per_class[0] == doctest::Approx(0.5));
    CHECK(tied.per_class[1] == doctest::Approx(0.5));
    CHECK(tied.macro == doctest::Approx(0.5));
}

TEST_CASE("aupr: perfect ordering, rank-2 positive, random null") {
    const std::vector<int> labels = {0, 0, 1, 1};
    const Mat<double> perfect = binary_scores({0.1, 0.2, 0.8, 0.9});
    CHECK(aupr_ovr(perfect, labels).per_class[1] == doctest::Approx(1.0));

    // single positive ranked second: AP = 1/2
    const Mat<double> two = binary_scores({0.9, 0.1});
    const std::vector<int> two_labels = {0, 1};
    CHECK(aupr_ovr(two, two_labels).per_class[1] == doctest::Approx(0.5));

    // random scores: AP concentrates near prevalence
    RngStream rng(5, 0);
    const int n = 10000;
    const double prevalence = 0.3;
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (int i = 0; i < n; ++i) {
        s[i] = rng.next_double();
        l[i] = rng.next_double() < prevalence ? 1 : 0;
    }
    const OvrResult r = aupr_ovr(binary_scores(s), l);
    const double observed_prev =
        std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(n);
    CHECK(std::abs(r.per_class[1] - observed_prev) < 0.02);
}

TEST_CASE("metric oracle equivalence on 500 random tied instances") {
    RngStream rng(6, 0);
    for (int instance = 0; instance < 500; ++instance) {
        const int n = 5 + static_cast<int>(rng.next_below(196));
        const int C = 2 + static_cast<int>(rng.next_below(4));
        Mat<double> scores(n, C);
        std::vector<int> labels(n);
        // quantized scores force tie groups
        const int levels = 2 + static_cast<int>(rng.next_below(12));
        for (int i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(rng.next_below(C));
            for (int c = 0; c < C; ++c)
                scores(i, c) = static_cast<double>(rng.next_below(levels)) / levels;
        }
        OvrResult roc, pr;
        try {
            roc = auroc_ovr(scores, labels);
            pr = aupr_ovr(scores, labels);
        } catch (const DataError&) {
            continue;  // all labels collapsed into one class
        }
        for (std::size_t k = 0; k < roc.class_ids.size(); ++k) {
            const int c = roc.class_ids[k];
            std::vector<double> col(n);
            std::vector<char> pos(n);
            for (int i = 0; i < n; ++i) {
                col[i] = scores(i, c);
                pos[i] = labels[i] == c ? 1 : 0;
            }
            CHECK(std::abs(roc.per_class[k] - auroc_oracle(col, pos)) <= 1e-12);
            CHECK(std::abs(pr.per_class[k] - ap_oracle(col, pos)) <= 1e-12);
        }
    }
}

TEST_CASE("auroc is invariant under strictly increasing transforms") {
    RngStream rng(7, 0);
    Mat<double> scores(60, 3);
    std::vector<int> labels(60);
    for (int i = 0; i < 60; ++i) {
        labels[i] = static_cast<int>(rng.next_below(3));
        for (int c = 0; c < 3; ++c) scores(i, c) = rng.next_gaussian();
    }
    const OvrResult base = auroc_ovr(scores, labels);
    Mat<double> mapped = scores;
    for (auto& v : mapped.v) v = std::tanh(v) * 3.0 + 7.0;
    const OvrResult after = auroc_ovr(mapped, labels);
    for (std::size_t k = 0; k < base.per_class.size(); ++k)
        CHECK(base.per_class[k] == doctest::Approx(after.per_class[k]).epsilon(1e-12));
}

TEST_CASE("classes without both label kinds are skipped and reported") {
    Mat<double> scores(4, 3);
    const std::vector<int> labels = {0, 0, 1, 1};  // class 2 absent
    RngStream rng(8, 0);
    for (auto& v : scores.v) v = rng.next_double();
    const OvrResult r = auroc_ovr(scores, labels);
    CHECK(r.class_ids == std::vector<int>{0, 1});
    CHECK(r.skipped.empty());  // class 2 never appears in labels at all

    // single-class labels leave nothing to rank
    const std::vector<int> mono = {1, 1, 1, 1};
    CHECK_THROWS_AS(auroc_ovr(scores, mono), DataError);

    CHECK_THROWS_AS(auroc_ovr(scores, std::vector<int>{0, 1}), UsageError);
}

TEST_CASE("probe result wraps both metrics plus accuracy") {
    const Mat<double> scores = binary_scores({0.1, 0.2, 0.8, 0.55});
    const std::vector<int> labels = {0, 0, 1, 1};
    const ProbeResult pr = scores_to_probe_result(scores, labels, 42, "linear");
    CHECK(pr.accuracy == doctest::Approx(1.0));
    CHECK(pr.auroc_macro == doctest::Approx(1.0));
    CHECK(pr.seed == 42);
    CHECK(pr.probe_kind == "linear");
    CHECK(pr.auroc_macro >= 0.0);
    CHECK(pr.aupr_macro <= 1.0);
}

TEST_CASE("silhouette: tight separated groups, null split, degenerate input") {
    RngStream rng(9, 0);
    // two tight, far-apart groups
    Mat<double> pts(40, 2);
    std::vector<int> groups(40);
    for (int i = 0; i < 40; ++i) {
        const bool second = i >= 20;
        pts(i, 0) = (second ? 100.0 : 0.0) + 0.1 * rng.next_gaussian();
        pts(i, 1) = 0.1 * rng.next_gaussian();
        groups[i] = second ? 1 : 0;
    }
    CHECK(silhouette_score(pts, groups) >= 0.9);

    // one cloud split arbitrarily hovers near zero
    Mat<double> cloud(60, 2);
    std::vector<int> arbitrary(60);
    for (int i = 0; i < 60; ++i) {
        cloud(i, 0) = rng.next_gaussian();
        cloud(i, 1) = rng.next_gaussian();
        arbitrary[i] = i % 2;
    }
    const double null_score = silhouette_score(cloud, arbitrary);
    CHECK(std::abs(null_score) <= 0.1);

    // singleton group rejected
    Mat<double> three(3, 2);
    three(0, 0) = 0.0;
    three(1, 0) = 0.0;
    three(1, 1) = 1.0;
    three(2, 0) = 10.0;
    CHECK_THROWS_AS(silhouette_score(three, std::vector<int>{1, 1, 2}), UsageError);
    CHECK_THROWS_AS(silhouette_score(three, std::vector<int>{1, 1, 1}), UsageError);
}
