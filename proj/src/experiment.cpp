#include "bpc/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include "bpc/errors.hpp"
#include "bpc/predict.hpp"

namespace bpc {

namespace {

Dataset take_subset(const Dataset& data, int count, std::uint64_t seed) {
    if (count <= 0 || count >= data.size()) return data;
    Rng rng(seed);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.size()));
    std::iota(idx.begin(), idx.end(), 0);
    for (auto i = idx.size() - 1; i > 0; --i) {
        auto j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    Dataset out;
    out.task = data.task;
    out.norm = data.norm;
    out.x.resize(count, data.x.cols());
    out.y.resize(count, data.y.cols());
    for (int i = 0; i < count; ++i) {
        out.x.row(i) = data.x.row(idx[static_cast<std::size_t>(i)]);
        out.y.row(i) = data.y.row(idx[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace

Dataset build_dataset(const DatasetConfig& cfg) {
    if (cfg.kind == "two_moons")
        return gen_two_moons(cfg.n, cfg.noise_std, cfg.gen_seed);
    if (cfg.kind == "sine")
        return gen_sine_hetero(cfg.n, cfg.gen_seed, cfg.x_std, cfg.fixed_noise_std);
    if (cfg.kind == "cubic_gap") return gen_cubic_gap(cfg.n, cfg.gen_seed);
    if (cfg.kind == "uci_csv") {
        std::vector<int> targets = cfg.target_columns;
        if (targets.empty())
            throw ConfigError("uci_csv dataset needs dataset.target_columns");
        return load_uci_csv(cfg.path, targets, cfg.standardize);
    }
    if (cfg.kind == "mnist_idx") return load_mnist_idx(cfg.path, cfg.labels_path);
    throw ConfigError("unknown dataset kind '" + cfg.kind + "'");
}

TrainTestSplit build_split(const DatasetConfig& cfg, std::uint64_t run_seed) {
    if (cfg.kind == "mnist_idx") {
        // Pre-split corpus; desk-scale subsets are fixed by gen_seed so every
        // run seed trains on the same examples.
        TrainTestSplit split;
        split.train = take_subset(load_mnist_idx(cfg.path, cfg.labels_path),
                                  cfg.subset_train, cfg.gen_seed);
        if (cfg.test_path.empty() || cfg.test_labels_path.empty())
            throw ConfigError("mnist_idx dataset needs test_path and test_labels_path");
        split.test = take_subset(load_mnist_idx(cfg.test_path, cfg.test_labels_path),
                                 cfg.subset_test, cfg.gen_seed + 1);
        return split;
    }
    return split_dataset(build_dataset(cfg), cfg.test_fraction, run_seed);
}

SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    TrainTestSplit split = build_split(cfg.dataset, seed);
    NetworkSpec spec = cfg.network_for(split.train);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.task = split.train.task;

    SeedRun run;
    run.seed = seed;
    run.model.trainer = cfg.trainer;
    run.model.task = split.train.task;
    run.model.seed = seed;
    run.model.spec = spec;
    run.model.norm = split.train.norm;

    switch (cfg.trainer) {
        case TrainerKind::bpc: {
            auto res = train_bpc(split, spec, tc);
            run.log = std::move(res.log);
            for (const auto& p : res.posteriors) run.model.eta.push_back(p.eta);
            break;
        }
        case TrainerKind::pc: {
            auto res = train_pc(split, spec, tc);
            run.log = std::move(res.log);
            run.model.weights = std::move(res.weights);
            break;
        }
        case TrainerKind::bp: {
            auto res = train_bp(split, spec, tc);
            run.log = std::move(res.log);
            run.model.weights = std::move(res.weights);
            break;
        }
    }
    return run;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int max_worker_threads() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("BPC_NUM_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    const auto n_seeds = cfg.seeds.size();
    std::vector<SeedRun> runs(n_seeds);
    std::vector<std::exception_ptr> errors(n_seeds);
    std::atomic<std::size_t> next{0};
    const int workers =
        std::min<int>(max_worker_threads(), static_cast<int>(n_seeds));

    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n_seeds) return;
            try {
                runs[i] = run_seed(cfg, cfg.seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    ExperimentResult result;
    result.metrics_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
    std::ofstream metrics(result.metrics_path, std::ios::trunc);
    std::ofstream timings(fs::path(cfg.out_dir) / "timings.csv", std::ios::trunc);
    if (!metrics || !timings) throw IoError("cannot write outputs in " + cfg.out_dir);
    metrics << "seed,epoch,train_metric,test_metric,energy\n";
    timings << "seed,epoch,wall_seconds\n";
    for (const auto& run : runs) {
        for (const auto& rec : run.log.records) {
            metrics << run.seed << ',' << rec.epoch << ','
                    << format_double(rec.train_metric) << ','
                    << format_double(rec.test_metric) << ','
                    << format_double(rec.energy) << '\n';
            timings << run.seed << ',' << rec.epoch << ','
                    << format_double(rec.wall_seconds) << '\n';
        }
        auto model_path =
            fs::path(cfg.out_dir) / ("model_seed" + std::to_string(run.seed) + ".bpc");
        save_model(model_path.string(), run.model);
    }
    result.runs = std::move(runs);
    return result;
}

EvalResult evaluate_model(const ModelFile& model, const ExperimentConfig& cfg) {
    TrainTestSplit split = build_split(cfg.dataset, model.seed);
    EvalResult out;
    out.task = model.task;

    MatrixXd pred;
    if (model.trainer == TrainerKind::bpc) {
        Posteriors post = model.posteriors();
        pred = predict_deterministic(split.test.x, post, model.spec);
        if (model.task == Task::regression) {
            LpdOptions opts = cfg.lpd;
            opts.seed = model.seed;
            out.lpd_std = lpd(split.test.x, split.test.y, post, model.spec, opts);
            out.lpd_orig = out.lpd_std - model.norm.log_y_scale();
            out.has_lpd = true;
        }
    } else {
        pred = weights_forward(split.test.x, model.weights, model.spec);
    }
    if (model.task == Task::classification) {
        out.metric = accuracy(pred, split.test.y);
    } else {
        out.metric = rmse(model.norm.destandardize_y(pred),
                          model.norm.destandardize_y(split.test.y));
    }
    return out;
}

}  // namespace bpc
