#pragma once

// Shared test-side oracles and the finite-difference gradient checker. These
// stay independent of the library implementations they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "augscale/rng.hpp"
#include "augscale/tape.hpp"

namespace augscale::testsupport {

inline Mat<double> random_mat(int r, int c, RngStream& rng, double scale = 1.0) {
    Mat<double> m(r, c);
    for (auto& v : m.v) v = scale * rng.next_gaussian();
    return m;
}

// Central finite differences (h = 1e-5, 64-bit) against analytic gradients;
// returns the worst relative error across all parameter elements.
inline double gradcheck(const std::function<double(const std::vector<Mat<double>>&)>& loss,
                        std::vector<Mat<double>> params,
                        const std::vector<Mat<double>>& analytic, double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].size(); ++i) {
            const double keep = params[k].v[i];
            params[k].v[i] = keep + h;
            const double up = loss(params);
            params[k].v[i] = keep - h;
            const double down = loss(params);
            params[k].v[i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[k].v[i];
            const double rel =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

// weighted scalar reduction so no gradient entry can hide behind symmetry
inline Tape<double>::NodeId reduce_weighted(Tape<double>& tape, Tape<double>::NodeId x, int rows,
                                            int cols, RngStream& rng) {
    const auto left = tape.constant(random_mat(1, rows, rng));
    const auto right = tape.constant(random_mat(cols, 1, rng));
    return tape.matmul(tape.matmul(left, x), right);
}

// Brute-force one-vs-rest oracles, written as the direct definitions.
inline double auroc_oracle(const std::vector<double>& score, const std::vector<char>& pos) {
    double wins = 0.0;
    std::size_t np = 0, nn = 0;
    for (std::size_t i = 0; i < score.size(); ++i) {
        if (!pos[i]) continue;
        ++np;
        for (std::size_t j = 0; j < score.size(); ++j) {
            if (pos[j]) continue;
            if (score[i] > score[j])
                wins += 1.0;
            else if (score[i] == score[j])
                wins += 0.5;
        }
    }
    for (char p : pos) nn += p ? 0 : 1;
    return wins / (static_cast<double>(np) * static_cast<double>(nn));
}

inline double ap_oracle(const std::vector<double>& score, const std::vector<char>& pos) {
    std::vector<int> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return score[a] > score[b]; });
    std::size_t np = 0;
    for (char p : pos) np += p ? 1 : 0;
    double ap = 0.0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank) {
        if (!pos[order[rank - 1]]) continue;
        std::size_t hits = 0;
        for (std::size_t r = 1; r <= rank; ++r) hits += pos[order[r - 1]] ? 1 : 0;
        ap += static_cast<double>(hits) / static_cast<double>(rank);
    }
    return ap / static_cast<double>(np);
}

}  // namespace augscale::testsupport
