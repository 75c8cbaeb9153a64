#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpc/linalg.hpp"

namespace bpc {

enum class Task { regression, classification };

/// Per-column standardization statistics; enough to undo the transform.
struct Normalization {
    VectorXd x_mean, x_std, y_mean, y_std;

    static Normalization identity(Eigen::Index d_in, Eigen::Index d_out);
    MatrixXd destandardize_y(const MatrixXd& y) const;
    MatrixXd standardize_x(const MatrixXd& x) const;
    /// Sum of log y-scales; converts log densities back to original units.
    double log_y_scale() const { return y_std.array().log().sum(); }
};

struct Dataset {
    MatrixXd x;  // N x d_in
    MatrixXd y;  // N x d_out
    Normalization norm;
    Task task = Task::regression;

    Eigen::Index size() const { return x.rows(); }
    void validate() const;
};

struct Batch {
    MatrixXd x, y;
};

struct TrainTestSplit {
    Dataset train, test;
};

/// Numeric CSV with optional header row. The listed columns become targets,
/// everything else becomes features. With standardize, x and y are z-scored
/// and the statistics recorded.
Dataset load_uci_csv(const std::string& path, const std::vector<int>& target_columns,
                     bool standardize);

/// IDX image/label pair (gzip accepted). Pixels scaled to [0,1]; labels
/// one-hot with width 10.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// Two interleaving half circles with Gaussian noise; one-hot labels.
Dataset gen_two_moons(int n, double noise_std, std::uint64_t seed);

/// y = -(x+0.5) sin(3 pi x) + eps. By default eps has the input-dependent
/// scale 0.45 (x+0.5); pass fixed_noise_std >= 0 for homoscedastic noise.
/// x ~ N(0, x_std^2).
Dataset gen_sine_hetero(int n, std::uint64_t seed, double x_std = 0.25,
                        double fixed_noise_std = -1.0);

/// y = x^3 + N(0, 9), x uniform on [3,5] for half the points and [-5,-3]
/// for the rest.
Dataset gen_cubic_gap(int n, std::uint64_t seed);

/// Seeded shuffle, train/test split, fixed-size batches (last may be short).
/// batch_size <= 0 means one full batch.
std::pair<std::vector<Batch>, Dataset> split_and_batch(const Dataset& data,
                                                       double test_fraction,
                                                       int batch_size,
                                                       std::uint64_t seed);

/// The train side of split_and_batch as a Dataset (same shuffle and split).
TrainTestSplit split_dataset(const Dataset& data, double test_fraction,
                             std::uint64_t seed);

std::vector<Batch> make_batches(const Dataset& data, int batch_size);

}  // namespace bpc
