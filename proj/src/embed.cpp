#include "augscale/embed.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "augscale/error.hpp"
#include "augscale/rng.hpp"

namespace augscale {

Pca2dResult pca_2d(const Mat<double>& features) {
    if (features.rows < 3) throw UsageError("pca_2d: need at least 3 rows");
    const int n = features.rows;
    const int d = features.cols;

    Mat<double> centered = features;
    for (int c = 0; c < d; ++c) {
        double mean = 0.0;
        for (int r = 0; r < n; ++r) mean += centered(r, c);
        mean /= n;
        for (int r = 0; r < n; ++r) centered(r, c) -= mean;
    }

    Mat<double> cov(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            double s = 0.0;
            for (int r = 0; r < n; ++r) s += centered(r, a) * centered(r, b);
            cov(a, b) = cov(b, a) = s / (n - 1);
        }
    double trace = 0.0;
    for (int a = 0; a < d; ++a) trace += cov(a, a);

    Pca2dResult out;
    out.coords = Mat<double>(n, 2);
    out.components = Mat<double>(d, 2);
    if (trace < 1e-18) {
        out.degenerate = true;
        return out;
    }

    // orthogonality against a prior component is enforced on every iterate,
    // and a rank-deficient (near-zero) matrix falls back to a deterministic
    // unit vector orthogonal to it
    auto power_iterate = [&](const Mat<double>& m, const std::vector<double>* prior) {
        auto orthogonalize = [&](std::vector<double>& x) {
            if (!prior) return;
            double dot = 0.0;
            for (int a = 0; a < d; ++a) dot += x[a] * (*prior)[a];
            for (int a = 0; a < d; ++a) x[a] -= dot * (*prior)[a];
        };
        auto fallback = [&] {
            std::vector<double> x(d, 0.0);
            int arg = 0;
            if (prior)
                for (int a = 1; a < d; ++a)
                    if (std::abs((*prior)[a]) < std::abs((*prior)[arg])) arg = a;
            x[arg] = 1.0;
            orthogonalize(x);
            double norm = 0.0;
            for (double t : x) norm += t * t;
            for (auto& t : x) t /= std::sqrt(norm);
            return x;
        };

        RngStream rng(0, 0x9CA2D);
        std::vector<double> v(d);
        for (auto& x : v) x = rng.next_gaussian();
        orthogonalize(v);
        {
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-30) return fallback();
            for (auto& x : v) x /= norm;
        }
        std::vector<double> next(d);
        for (int it = 0; it < 2000; ++it) {
            for (int a = 0; a < d; ++a) {
                double s = 0.0;
                for (int b = 0; b < d; ++b) s += m(a, b) * v[b];
                next[a] = s;
            }
            orthogonalize(next);
            double norm = 0.0;
            for (double x : next) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-30) {
                v = fallback();
                break;
            }
            double delta = 0.0;
            for (int a = 0; a < d; ++a) {
                next[a] /= norm;
                delta = std::max(delta, std::abs(next[a] - v[a]));
            }
            std::swap(v, next);
            if (delta < 1e-13 && it > 4) break;
        }
        // deterministic sign: largest-magnitude entry positive
        int arg = 0;
        for (int a = 1; a < d; ++a)
            if (std::abs(v[a]) > std::abs(v[arg])) arg = a;
        if (v[arg] < 0.0)
            for (auto& x : v) x = -x;
        return v;
    };

    const std::vector<double> v1 = power_iterate(cov, nullptr);
    double lambda1 = 0.0;
    for (int a = 0; a < d; ++a) {
        double s = 0.0;
        for (int b = 0; b < d; ++b) s += cov(a, b) * v1[b];
        lambda1 += v1[a] * s;
    }
    Mat<double> deflated = cov;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) deflated(a, b) -= lambda1 * v1[a] * v1[b];
    const std::vector<double> v2 = power_iterate(deflated, &v1);
    double lambda2 = 0.0;
    for (int a = 0; a < d; ++a) {
        double s = 0.0;
        for (int b = 0; b < d; ++b) s += deflated(a, b) * v2[b];
        lambda2 += v2[a] * s;
    }

    out.variance_first = lambda1;
    out.variance_second = std::max(lambda2, 0.0);
    for (int c = 0; c < d; ++c) {
        out.components(c, 0) = v1[c];
        out.components(c, 1) = v2[c];
    }
    for (int r = 0; r < n; ++r) {
        double x = 0.0, y = 0.0;
        for (int c = 0; c < d; ++c) {
            x += centered(r, c) * v1[c];
            y += centered(r, c) * v2[c];
        }
        out.coords(r, 0) = x;
        out.coords(r, 1) = y;
    }
    return out;
}

namespace {

Mat<double> squared_distances(const Mat<double>& x, par::Exec exec) {
    const int n = x.rows;
    Mat<double> d2(n, n);
    par::for_index(n, exec, [&](std::int64_t i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int c = 0; c < x.cols; ++c) {
                const double diff = x(i, c) - x(j, c);
                s += diff * diff;
            }
            d2(i, j) = s;
        }
    });
    return d2;
}

// Row-conditional affinities whose perplexity matches the target within
// 1e-4 in log2; returns the achieved log2 error per row.
void gaussian_affinities(const Mat<double>& d2, double perplexity, Mat<double>& p,
                         std::vector<double>& log2_err, par::Exec exec) {
    const int n = d2.rows;
    const double target_h = std::log(perplexity);  // natural-log entropy target
    log2_err.assign(n, 0.0);
    par::for_index(n, exec, [&](std::int64_t i) {
        double beta = 1.0, beta_min = -1.0, beta_max = -1.0;
        std::vector<double> row(n);
        double h = 0.0;
        for (int iter = 0; iter < 200; ++iter) {
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                row[j] = (j == i) ? 0.0 : std::exp(-beta * d2(i, j));
                sum += row[j];
            }
            sum = std::max(sum, 1e-300);
            double dot = 0.0;  // sum_j p_j * d2_j
            for (int j = 0; j < n; ++j) {
                row[j] /= sum;
                if (j != i) dot += row[j] * d2(i, j);
            }
            // Shannon entropy of the row: H = ln(sum) + beta * <d2>
            h = std::log(sum) + beta * dot;
            const double diff = h - target_h;
            if (std::abs(diff) / std::log(2.0) <= 1e-4) break;
            if (diff > 0.0) {
                beta_min = beta;
                beta = (beta_max < 0.0) ? beta * 2.0 : 0.5 * (beta + beta_max);
            } else {
                beta_max = beta;
                beta = (beta_min < 0.0) ? beta * 0.5 : 0.5 * (beta + beta_min);
            }
        }
        for (int j = 0; j < n; ++j) p(i, j) = row[j];
        log2_err[i] = std::abs(h - target_h) / std::log(2.0);
    });
}

}  // namespace

std::vector<double> tsne_perplexity_errors(const Mat<double>& features, double perplexity,
                                           par::Exec exec) {
    const Mat<double> d2 = squared_distances(features, exec);
    Mat<double> p(features.rows, features.rows);
    std::vector<double> err;
    gaussian_affinities(d2, perplexity, p, err, exec);
    return err;
}

Mat<double> tsne_2d(const Mat<double>& features, const TsneParams& params, par::Exec exec) {
    const int n = features.rows;
    if (n > 5000) throw UsageError("tsne_2d: exact variant limited to n <= 5000");
    if (!(params.perplexity >= 3.0) || !(params.perplexity < n / 3.0))
        throw UsageError("tsne_2d: perplexity must satisfy 3 <= perplexity < n/3");
    if (params.iterations < 1) throw UsageError("tsne_2d: iterations must be >= 1");

    // symmetrize, normalize to sum 1, floor for numerical stability;
    // the distance and conditional matrices release before the iterations
    Mat<double> p(n, n);
    {
        const Mat<double> d2 = squared_distances(features, exec);
        Mat<double> cond(n, n);
        std::vector<double> err;
        gaussian_affinities(d2, params.perplexity, cond, err, exec);
        double psum = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                p(i, j) = (cond(i, j) + cond(j, i));
                psum += p(i, j);
            }
        for (auto& v : p.v) v = std::max(v / psum, 1e-12);
    }

    const int stop_exaggeration = std::min(250, std::max(1, params.iterations / 2));
    const int momentum_switch = stop_exaggeration;
    for (auto& v : p.v) v *= params.early_exaggeration;

    Mat<double> y(n, 2);
    RngStream rng(params.seed, 0x7543E);
    for (auto& v : y.v) v = 1e-4 * rng.next_gaussian();

    Mat<double> dy(n, 2), velocity(n, 2), gains(n, 2, 1.0);
    Mat<double> q_num(n, n);
    std::vector<double> row_sums(n);

    for (int iter = 0; iter < params.iterations; ++iter) {
        // student-t numerators; per-row partial sums reduced in order
        par::for_index(n, exec, [&](std::int64_t i) {
            double rs = 0.0;
            for (int j = 0; j < n; ++j) {
                if (i == j) {
                    q_num(i, j) = 0.0;
                    continue;
                }
                const double dx = y(i, 0) - y(j, 0);
                const double dyv = y(i, 1) - y(j, 1);
                q_num(i, j) = 1.0 / (1.0 + dx * dx + dyv * dyv);
                rs += q_num(i, j);
            }
            row_sums[i] = rs;
        });
        double q_sum = 0.0;
        for (int i = 0; i < n; ++i) q_sum += row_sums[i];
        q_sum = std::max(q_sum, 1e-300);

        par::for_index(n, exec, [&](std::int64_t i) {
            double gx = 0.0, gy = 0.0;
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const double q = std::max(q_num(i, j) / q_sum, 1e-300);
                const double mult = (p(i, j) - q) * q_num(i, j);
                gx += mult * (y(i, 0) - y(j, 0));
                gy += mult * (y(i, 1) - y(j, 1));
            }
            dy(i, 0) = 4.0 * gx;
            dy(i, 1) = 4.0 * gy;
        });

        const double momentum = (iter < momentum_switch) ? 0.5 : 0.8;
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < 2; ++c) {
                const bool same_sign = (dy(i, c) > 0.0) == (velocity(i, c) > 0.0);
                gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01)
                                        : gains(i, c) + 0.2;
                velocity(i, c) =
                    momentum * velocity(i, c) - params.learning_rate * gains(i, c) * dy(i, c);
                y(i, c) += velocity(i, c);
            }
        // re-center
        double mx = 0.0, my = 0.0;
        for (int i = 0; i < n; ++i) {
            mx += y(i, 0);
            my += y(i, 1);
        }
        mx /= n;
        my /= n;
        for (int i = 0; i < n; ++i) {
            y(i, 0) -= mx;
            y(i, 1) -= my;
        }

        if (iter + 1 == stop_exaggeration)
            for (auto& v : p.v) v /= params.early_exaggeration;
    }
    for (double v : y.v)
        if (!std::isfinite(v)) throw NumericalError("tsne_2d: embedding diverged");
    return y;
}

Image rasterize_scatter(const Mat<double>& coords, const std::vector<int>& labels, int size) {
    if (coords.cols != 2 || coords.rows < 1) throw UsageError("scatter needs n x 2 coordinates");
    if (labels.size() != static_cast<std::size_t>(coords.rows))
        throw UsageError("scatter label count mismatch");
    int max_label = 0;
    for (int l : labels) max_label = std::max(max_label, l);

    double lo_x = coords(0, 0), hi_x = coords(0, 0), lo_y = coords(0, 1), hi_y = coords(0, 1);
    for (int r = 0; r < coords.rows; ++r) {
        lo_x = std::min(lo_x, coords(r, 0));
        hi_x = std::max(hi_x, coords(r, 0));
        lo_y = std::min(lo_y, coords(r, 1));
        hi_y = std::max(hi_y, coords(r, 1));
    }
    const double span_x = std::max(hi_x - lo_x, 1e-12);
    const double span_y = std::max(hi_y - lo_y, 1e-12);

    Image img(size, size, 1, 0.0f);
    for (int r = 0; r < coords.rows; ++r) {
        const int x = static_cast<int>((coords(r, 0) - lo_x) / span_x * (size - 3)) + 1;
        const int y = static_cast<int>((coords(r, 1) - lo_y) / span_y * (size - 3)) + 1;
        const float level = 0.35f + 0.65f * static_cast<float>(labels[r]) /
                                        static_cast<float>(std::max(max_label, 1));
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                img.at(x + dx, y + dy, 0) = std::max(img.at(x + dx, y + dy, 0), level);
    }
    return img;
}

}  // namespace augscale
