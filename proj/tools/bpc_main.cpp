#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "bpc/errors.hpp"
#include "bpc/experiment.hpp"
#include "bpc/plot.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_train(const std::string& config_path, const std::string& out_override,
              const std::string& seeds_override, const std::string& trainer_override) {
    bpc::ExperimentConfig cfg = bpc::parse_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (!trainer_override.empty()) cfg.trainer = bpc::trainer_from_name(trainer_override);
    if (!seeds_override.empty()) {
        cfg.seeds.clear();
        std::stringstream ss(seeds_override);
        std::string item;
        while (std::getline(ss, item, ','))
            cfg.seeds.push_back(std::stoull(item));
        if (cfg.seeds.empty()) throw bpc::ConfigError("empty seed list");
    }
    auto result = bpc::run_experiment(cfg);
    std::cout << "wrote " << result.metrics_path << " (" << result.runs.size()
              << " seeds)\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& config_path,
             const std::string& out_override) {
    bpc::ExperimentConfig cfg = bpc::parse_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    bpc::ModelFile model = bpc::load_model(model_path);
    bpc::EvalResult res = bpc::evaluate_model(model, cfg);

    fs::create_directories(cfg.out_dir);
    auto eval_path = fs::path(cfg.out_dir) / "eval.csv";
    std::ofstream os(eval_path, std::ios::trunc);
    if (!os) throw bpc::IoError("cannot write " + eval_path.string());
    os << "metric,value\n";
    if (res.task == bpc::Task::classification) {
        os << "accuracy," << bpc::format_double(res.metric) << '\n';
        std::cout << "accuracy=" << res.metric;
    } else {
        os << "rmse," << bpc::format_double(res.metric) << '\n';
        std::cout << "rmse=" << res.metric;
        if (res.has_lpd) {
            os << "lpd," << bpc::format_double(res.lpd_std) << '\n';
            os << "lpd_orig_units," << bpc::format_double(res.lpd_orig) << '\n';
            std::cout << " lpd=" << res.lpd_std << " lpd_orig_units=" << res.lpd_orig;
        }
    }
    std::cout << " (seed " << model.seed << ", " << bpc::trainer_name(model.trainer)
              << ")\n";
    return 0;
}

int cmd_plot(const std::string& kind, const std::string& metrics_path,
             const std::string& model_path, const std::string& config_path,
             const std::string& out_path) {
    if (kind == "curves") {
        if (metrics_path.empty())
            throw bpc::ConfigError("plot --kind curves needs --metrics");
        bpc::write_curves_svg(metrics_path, out_path);
    } else if (kind == "uncertainty") {
        if (model_path.empty() || config_path.empty())
            throw bpc::ConfigError("plot --kind uncertainty needs --model and --config");
        bpc::ModelFile model = bpc::load_model(model_path);
        bpc::ExperimentConfig cfg = bpc::parse_config_file(config_path);
        bpc::write_uncertainty_svg(model, cfg, out_path);
    } else {
        throw bpc::ConfigError("unknown plot kind '" + kind + "'");
    }
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian predictive coding experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds, trainer;
    auto* train = app.add_subcommand("train", "train a model per seed");
    train->add_option("--config", config_path, "experiment config file")->required();
    train->add_option("--out", out_dir, "output directory override");
    train->add_option("--seeds", seeds, "comma-separated seed list override");
    train->add_option("--trainer", trainer, "trainer override: bpc | pc | bp");

    std::string model_path;
    auto* eval = app.add_subcommand("eval", "evaluate a trained model");
    eval->add_option("--model", model_path, "model file")->required();
    eval->add_option("--config", config_path, "experiment config file")->required();
    eval->add_option("--out", out_dir, "output directory override");

    std::string kind = "curves", metrics_path, svg_out = "plot.svg";
    auto* plot = app.add_subcommand("plot", "render an SVG figure");
    plot->add_option("--kind", kind, "curves | uncertainty");
    plot->add_option("--metrics", metrics_path, "metrics.csv (curves)");
    plot->add_option("--model", model_path, "model file (uncertainty)");
    plot->add_option("--config", config_path, "config file (uncertainty)");
    plot->add_option("--out", svg_out, "output SVG path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, out_dir, seeds, trainer);
        if (eval->parsed()) return cmd_eval(model_path, config_path, out_dir);
        if (plot->parsed())
            return cmd_plot(kind, metrics_path, model_path, config_path, svg_out);
    } catch (const bpc::DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
