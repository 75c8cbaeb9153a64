#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpc/learning.hpp"
#include "bpc/predict.hpp"
#include "bpc/serialize.hpp"

namespace bpc {

struct DatasetConfig {
    std::string kind;  // two_moons | sine | cubic_gap | uci_csv | mnist_idx
    std::string path;
    std::string labels_path;
    std::string test_path;
    std::string test_labels_path;
    std::vector<int> target_columns;
    bool standardize = true;
    int n = 500;
    double noise_std = 0.1;
    double x_std = 0.25;
    double fixed_noise_std = -1.0;
    double test_fraction = 0.1;
    std::uint64_t gen_seed = 12345;
    int subset_train = 0;  // 0 keeps everything
    int subset_test = 0;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<int> hidden;  // hidden layer widths; in/out come from the data
    Activation activation = Activation::relu;
    bool bias = true;
    TrainerKind trainer = TrainerKind::bpc;
    TrainConfig train;
    PredictConfig predict;
    LpdOptions lpd;
    std::string out_dir = "runs/out";
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

    void validate() const;
    NetworkSpec network_for(const Dataset& data) const;
};

/// Parse "key = value" lines; '#' starts a comment, unknown keys are errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace bpc
