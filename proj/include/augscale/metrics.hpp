#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "augscale/tape.hpp"

namespace augscale {

// One-vs-rest metric over the classes that have at least one positive and
// one negative; skipped classes are reported, not averaged.
struct OvrResult {
    double macro = 0.0;
    std::vector<double> per_class;   // aligned with class_ids
    std::vector<int> class_ids;      // contributing classes
    std::vector<int> skipped;        // classes without both label kinds
};

// Rank-based AUROC, ties counted half. scores is (n x C) row-major.
OvrResult auroc_ovr(const Mat<double>& scores, const std::vector<int>& labels);

// Average precision: precision summed at each positive's rank under a
// stable descending sort (ties broken by index order).
OvrResult aupr_ovr(const Mat<double>& scores, const std::vector<int>& labels);

struct ProbeResult {
    double auroc_macro = 0.0;
    double aupr_macro = 0.0;
    std::vector<double> per_class_auroc;
    std::vector<double> per_class_aupr;
    std::vector<int> class_ids;
    std::vector<int> skipped_classes;
    double accuracy = 0.0;
    std::uint64_t seed = 0;
    std::string probe_kind;  // "linear" | "knn"
};

ProbeResult scores_to_probe_result(const Mat<double>& scores, const std::vector<int>& labels,
                                   std::uint64_t seed, const std::string& probe_kind);

// Mean silhouette coefficient with Euclidean distances over row vectors.
// Requires >= 2 groups and every group >= 2 members.
double silhouette_score(const Mat<double>& points, const std::vector<int>& group_ids);

}  // namespace augscale
