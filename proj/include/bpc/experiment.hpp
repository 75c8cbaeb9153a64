#pragma once

#include <string>

#include "bpc/config.hpp"

namespace bpc {

/// Dataset described by the config, before any train/test split.
Dataset build_dataset(const DatasetConfig& cfg);

/// Train/test split for one run seed. Generators and file loads are driven
/// by dataset.gen_seed so every seed sees the same underlying data; the
/// split (or the pre-split subset selection) is driven as noted below.
TrainTestSplit build_split(const DatasetConfig& cfg, std::uint64_t run_seed);

struct SeedRun {
    std::uint64_t seed = 0;
    MetricsLog log;
    ModelFile model;
};

/// One full training run; the returned model embeds the normalization record
/// and seed so evaluation can rebuild the identical split.
SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

struct ExperimentResult {
    std::vector<SeedRun> runs;
    std::string metrics_path;
};

/// Runs every configured seed (in parallel up to BPC_NUM_THREADS workers)
/// and writes metrics.csv, timings.csv and one model file per seed.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct EvalResult {
    Task task = Task::regression;
    double metric = 0.0;     // accuracy or destandardized rmse
    double lpd_std = 0.0;    // standardized-target units (bpc regression only)
    double lpd_orig = 0.0;   // original units
    bool has_lpd = false;
};

EvalResult evaluate_model(const ModelFile& model, const ExperimentConfig& cfg);

/// Deterministic %.17g formatting used for every CSV we write.
std::string format_double(double v);

int max_worker_threads();

}  // namespace bpc
