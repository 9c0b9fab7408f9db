#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace vmsynth {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct KMeansOptions {
    int max_iterations = 50;
    double relative_tolerance = 1e-6;
};

struct KMeansResult {
    RowMatrix centers;                    // k x dim
    std::vector<int> assignment;          // per sample
    std::vector<double> wcss_history;     // one entry per completed iteration
    int iterations = 0;

    double wcss() const { return wcss_history.empty() ? 0.0 : wcss_history.back(); }
};

// Lloyd's algorithm with greedy farthest-point seeding. The first center is
// the sample picked by `seed`; each further center is the sample farthest
// from all chosen centers (lowest index on ties). Samples are rows.
KMeansResult kmeans(const RowMatrix& samples, int k, std::uint64_t seed, const KMeansOptions& options = {});

double squared_distance(const RowMatrix& a, Eigen::Index i, const RowMatrix& b, Eigen::Index j);

}  // namespace vmsynth
