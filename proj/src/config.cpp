#include "bpc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bpc/errors.hpp"

namespace bpc {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    auto last = s.find_last_not_of(" \t\r");
    return s.substr(begin, last - begin + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

int parse_int(const std::string& v, const std::string& key) {
    double d = parse_double(v, key);
    int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return i;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    for (const auto& item : split_list(v)) out.push_back(parse_int(item, key));
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (dataset.kind.empty()) throw ConfigError("dataset kind is required");
    static const std::vector<std::string> kinds = {"two_moons", "sine", "cubic_gap",
                                                   "uci_csv", "mnist_idx"};
    if (std::find(kinds.begin(), kinds.end(), dataset.kind) == kinds.end())
        throw ConfigError("unknown dataset kind '" + dataset.kind + "'");
    if (dataset.kind == "uci_csv" && dataset.path.empty())
        throw ConfigError("uci_csv dataset needs dataset.path");
    if (dataset.kind == "mnist_idx" &&
        (dataset.path.empty() || dataset.labels_path.empty()))
        throw ConfigError("mnist_idx dataset needs dataset.path and dataset.labels_path");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (train.epochs < 0) throw ConfigError("epochs must be non-negative");
    for (int h : hidden)
        if (h < 1) throw ConfigError("hidden widths must be positive");
}

NetworkSpec ExperimentConfig::network_for(const Dataset& data) const {
    NetworkSpec spec;
    spec.dims.push_back(static_cast<int>(data.x.cols()));
    for (int h : hidden) spec.dims.push_back(h);
    spec.dims.push_back(static_cast<int>(data.y.cols()));
    spec.activation = activation;
    spec.bias = bias;
    spec.validate();
    return spec;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (key == "dataset") cfg.dataset.kind = value;
        else if (key == "dataset.path") cfg.dataset.path = value;
        else if (key == "dataset.labels_path") cfg.dataset.labels_path = value;
        else if (key == "dataset.test_path") cfg.dataset.test_path = value;
        else if (key == "dataset.test_labels_path") cfg.dataset.test_labels_path = value;
        else if (key == "dataset.target_columns")
            cfg.dataset.target_columns = parse_int_list(value, key);
        else if (key == "dataset.standardize")
            cfg.dataset.standardize = parse_bool(value, key);
        else if (key == "dataset.n") cfg.dataset.n = parse_int(value, key);
        else if (key == "dataset.noise_std") cfg.dataset.noise_std = parse_double(value, key);
        else if (key == "dataset.x_std") cfg.dataset.x_std = parse_double(value, key);
        else if (key == "dataset.fixed_noise_std")
            cfg.dataset.fixed_noise_std = parse_double(value, key);
        else if (key == "dataset.test_fraction")
            cfg.dataset.test_fraction = parse_double(value, key);
        else if (key == "dataset.gen_seed")
            cfg.dataset.gen_seed = static_cast<std::uint64_t>(parse_int(value, key));
        else if (key == "dataset.subset_train") cfg.dataset.subset_train = parse_int(value, key);
        else if (key == "dataset.subset_test") cfg.dataset.subset_test = parse_int(value, key);
        else if (key == "task")
            cfg.train.task = value == "classification" ? Task::classification
                             : value == "regression"
                                 ? Task::regression
                                 : throw ConfigError("task: unknown value '" + value + "'");
        else if (key == "hidden") cfg.hidden = parse_int_list(value, key);
        else if (key == "activation")
            cfg.activation = value == "relu" ? Activation::relu
                             : value == "identity"
                                 ? Activation::identity
                                 : throw ConfigError("activation: unknown value '" + value + "'");
        else if (key == "bias") cfg.bias = parse_bool(value, key);
        else if (key == "trainer") cfg.trainer = trainer_from_name(value);
        else if (key == "epochs") cfg.train.epochs = parse_int(value, key);
        else if (key == "batch_size") cfg.train.batch_size = parse_int(value, key);
        else if (key == "clamp")
            cfg.train.clamp = value == "both" ? ClampMode::both
                              : value == "inputs_only" ? ClampMode::inputs_only
                              : value == "targets_only"
                                  ? ClampMode::targets_only
                                  : throw ConfigError("clamp: unknown value '" + value + "'");
        else if (key == "kappa_exponent") cfg.train.kappa_exponent = parse_double(value, key);
        else if (key == "estep.optimizer")
            cfg.train.estep.optimizer =
                value == "plain_gd" ? StateOptimizer::plain_gd
                : value == "adaptive_moment"
                    ? StateOptimizer::adaptive_moment
                    : throw ConfigError("estep.optimizer: unknown value '" + value + "'");
        else if (key == "estep.step_size") {
            if (value == "auto") {
                cfg.train.estep.auto_step = true;
            } else {
                cfg.train.estep.auto_step = false;
                cfg.train.estep.step_size = parse_double(value, key);
            }
        } else if (key == "estep.max_iters")
            cfg.train.estep.max_iters = parse_int(value, key);
        else if (key == "estep.tol") cfg.train.estep.tol = parse_double(value, key);
        else if (key == "prior.v_scale") cfg.train.prior.v_scale = parse_double(value, key);
        else if (key == "prior.psi_scale") cfg.train.prior.psi_scale = parse_double(value, key);
        else if (key == "prior.nu_offset") cfg.train.prior.nu_offset = parse_double(value, key);
        else if (key == "pc.weight_lr") cfg.train.pc.weight_lr = parse_double(value, key);
        else if (key == "pc.weight_decay") cfg.train.pc.weight_decay = parse_double(value, key);
        else if (key == "pc.state_lr") cfg.train.pc.state_lr = parse_double(value, key);
        else if (key == "pc.state_momentum")
            cfg.train.pc.state_momentum = parse_double(value, key);
        else if (key == "pc.state_iters") cfg.train.pc.state_iters = parse_int(value, key);
        else if (key == "bp.lr") cfg.train.bp.lr = parse_double(value, key);
        else if (key == "predict.mode")
            cfg.predict.mode = value == "deterministic" ? PredictMode::deterministic
                               : value == "monte_carlo" ? PredictMode::monte_carlo
                               : value == "analytic"
                                   ? PredictMode::analytic
                                   : throw ConfigError("predict.mode: unknown value '" +
                                                       value + "'");
        else if (key == "predict.samples") cfg.predict.samples = parse_int(value, key);
        else if (key == "lpd.samples") cfg.lpd.samples = parse_int(value, key);
        else if (key == "lpd.mean_of_log") cfg.lpd.mean_of_log = parse_bool(value, key);
        else if (key == "out") cfg.out_dir = value;
        else if (key == "seeds") {
            cfg.seeds.clear();
            for (int s : parse_int_list(value, key))
                cfg.seeds.push_back(static_cast<std::uint64_t>(s));
        } else {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
                              key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace bpc
