#include "vmsynth/kmeans.hpp"

#include <limits>

#include "vmsynth/error.hpp"
#include "vmsynth/random.hpp"

namespace vmsynth {

double squared_distance(const RowMatrix& a, Eigen::Index i, const RowMatrix& b, Eigen::Index j) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < a.cols(); ++d) {
        const double diff = a(i, d) - b(j, d);
        s += diff * diff;
    }
    return s;
}

namespace {

RowMatrix farthest_point_seeds(const RowMatrix& x, int k, std::uint64_t seed) {
    const Eigen::Index n = x.rows();
    RowMatrix centers(k, x.cols());
    Rng rng(seed);
    const auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    centers.row(0) = x.row(first);

    std::vector<double> nearest(n);
    for (Eigen::Index i = 0; i < n; ++i) nearest[i] = squared_distance(x, i, centers, 0);
    for (int c = 1; c < k; ++c) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < n; ++i) {
            if (nearest[i] > nearest[best]) best = i;
        }
        centers.row(c) = x.row(best);
        for (Eigen::Index i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(x, i, centers, c));
        }
    }
    return centers;
}

}  // namespace

KMeansResult kmeans(const RowMatrix& samples, int k, std::uint64_t seed, const KMeansOptions& options) {
    const Eigen::Index n = samples.rows();
    if (k < 1) throw InputError("k-means requires k >= 1");
    if (k > n) throw InputError("k-means requires k <= number of samples");

    KMeansResult r;
    r.centers = farthest_point_seeds(samples, k, seed);
    r.assignment.assign(static_cast<std::size_t>(n), -1);

    std::vector<double> counts(k);
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        // Assignment. A sample only moves on a strict improvement, so a
        // converged partition reproduces the same centers bit for bit.
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = r.assignment[i];
            double best_d = best >= 0 ? squared_distance(samples, i, r.centers, best)
                                      : std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = squared_distance(samples, i, r.centers, c);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (best != r.assignment[i]) {
                r.assignment[i] = best;
                changed = true;
            }
        }

        // Update. Empty clusters keep their previous center.
        RowMatrix sums = RowMatrix::Zero(k, samples.cols());
        std::fill(counts.begin(), counts.end(), 0.0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(r.assignment[i]) += samples.row(i);
            counts[r.assignment[i]] += 1.0;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0.0) r.centers.row(c) = sums.row(c) / counts[c];
        }

        double wcss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) wcss += squared_distance(samples, i, r.centers, r.assignment[i]);
        r.wcss_history.push_back(wcss);
        r.iterations = iter + 1;

        if (!changed || wcss == 0.0) break;
        if (r.wcss_history.size() >= 2) {
            const double prev = r.wcss_history[r.wcss_history.size() - 2];
            if ((prev - wcss) <= options.relative_tolerance * prev) break;
        }
    }
    return r;
}

}  // namespace vmsynth
