#include "bpc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "bpc/errors.hpp"
#include "bpc/predict.hpp"

namespace bpc {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMargin = 50;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    double px(double v, double pix_lo, double pix_hi) const {
        double t = (v - lo) / (hi - lo);
        return pix_lo + t * (pix_hi - pix_lo);
    }
};

struct Frame {
    Axis x, y;
    double px(double v) const { return x.px(v, kMargin, kWidth - kMargin); }
    double py(double v) const { return y.px(v, kHeight - kMargin, kMargin); }
};

void pad_axis(Axis& a) {
    if (a.hi <= a.lo) {
        a.lo -= 0.5;
        a.hi += 0.5;
        return;
    }
    double pad = 0.05 * (a.hi - a.lo);
    a.lo -= pad;
    a.hi += pad;
}

void draw_axes(std::ostream& os, const Frame& f, const std::string& x_label,
               const std::string& y_label) {
    os << "<rect x='0' y='0' width='" << kWidth << "' height='" << kHeight
       << "' fill='white'/>\n";
    os << "<line x1='" << kMargin << "' y1='" << kHeight - kMargin << "' x2='"
       << kWidth - kMargin << "' y2='" << kHeight - kMargin
       << "' stroke='black'/>\n";
    os << "<line x1='" << kMargin << "' y1='" << kMargin << "' x2='" << kMargin
       << "' y2='" << kHeight - kMargin << "' stroke='black'/>\n";
    for (int i = 0; i <= 4; ++i) {
        double tx = f.x.lo + (f.x.hi - f.x.lo) * i / 4.0;
        double ty = f.y.lo + (f.y.hi - f.y.lo) * i / 4.0;
        os << "<text x='" << fmt(f.px(tx)) << "' y='" << kHeight - kMargin + 18
           << "' font-size='11' text-anchor='middle'>" << fmt(tx) << "</text>\n";
        os << "<text x='" << kMargin - 6 << "' y='" << fmt(f.py(ty) + 4)
           << "' font-size='11' text-anchor='end'>" << fmt(ty) << "</text>\n";
    }
    os << "<text x='" << kWidth / 2 << "' y='" << kHeight - 10
       << "' font-size='13' text-anchor='middle'>" << x_label << "</text>\n";
    os << "<text x='14' y='" << kHeight / 2
       << "' font-size='13' text-anchor='middle' transform='rotate(-90 14 "
       << kHeight / 2 << ")'>" << y_label << "</text>\n";
}

std::string polyline(const Frame& f, const std::vector<double>& xs,
                     const std::vector<double>& ys) {
    std::ostringstream pts;
    for (std::size_t i = 0; i < xs.size(); ++i)
        pts << fmt(f.px(xs[i])) << ',' << fmt(f.py(ys[i])) << ' ';
    return pts.str();
}

}  // namespace

void write_curves_svg(const std::string& metrics_csv, const std::string& out_path) {
    std::ifstream in(metrics_csv);
    if (!in) throw IoError("cannot open " + metrics_csv);
    std::string line;
    if (!std::getline(in, line)) throw IoError(metrics_csv + ": empty file");

    std::map<int, std::vector<double>> by_epoch;  // epoch -> test metric per seed
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 5) throw IoError(metrics_csv + ": malformed row");
        by_epoch[std::stoi(cells[1])].push_back(std::stod(cells[3]));
    }
    if (by_epoch.empty()) throw IoError(metrics_csv + ": no data rows");

    std::vector<double> epochs, means, sds;
    for (const auto& [epoch, vals] : by_epoch) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        double sd = vals.size() > 1 ? std::sqrt(var / (static_cast<double>(vals.size()) - 1.0))
                                    : 0.0;
        epochs.push_back(epoch);
        means.push_back(mean);
        sds.push_back(sd);
    }

    Frame f;
    f.x = {epochs.front(), epochs.back()};
    double lo = means[0] - sds[0], hi = means[0] + sds[0];
    for (std::size_t i = 0; i < means.size(); ++i) {
        lo = std::min(lo, means[i] - sds[i]);
        hi = std::max(hi, means[i] + sds[i]);
    }
    f.y = {lo, hi};
    pad_axis(f.x);
    pad_axis(f.y);

    std::ofstream os(out_path, std::ios::trunc);
    if (!os) throw IoError("cannot write " + out_path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth
       << "' height='" << kHeight << "'>\n";
    os << "<!-- columns: epoch,mean,sd -->\n";
    for (std::size_t i = 0; i < epochs.size(); ++i)
        os << "<!-- data: " << format_double(epochs[i]) << ','
           << format_double(means[i]) << ',' << format_double(sds[i]) << " -->\n";
    draw_axes(os, f, "epoch", "test metric");

    // band: upper edge forward, lower edge back
    std::ostringstream band;
    for (std::size_t i = 0; i < epochs.size(); ++i)
        band << fmt(f.px(epochs[i])) << ',' << fmt(f.py(means[i] + sds[i])) << ' ';
    for (std::size_t i = epochs.size(); i-- > 0;)
        band << fmt(f.px(epochs[i])) << ',' << fmt(f.py(means[i] - sds[i])) << ' ';
    os << "<polygon points='" << band.str()
       << "' fill='steelblue' fill-opacity='0.25' stroke='none'/>\n";
    os << "<polyline points='" << polyline(f, epochs, means)
       << "' fill='none' stroke='steelblue' stroke-width='2'/>\n";
    os << "</svg>\n";
}

void write_uncertainty_svg(const ModelFile& model, const ExperimentConfig& cfg,
                           const std::string& out_path, int n_draws) {
    if (model.trainer != TrainerKind::bpc)
        throw ConfigError("uncertainty plot needs a bpc model");
    TrainTestSplit split = build_split(cfg.dataset, model.seed);
    if (split.train.x.cols() != 1 || split.train.y.cols() != 1)
        throw ConfigError("uncertainty plot needs 1-d input and output");

    Posteriors post = model.posteriors();
    const auto& norm = model.norm;

    // original-unit training scatter
    MatrixXd x_orig = split.train.x.array().rowwise() * norm.x_std.transpose().array();
    x_orig = x_orig.array().rowwise() + norm.x_mean.transpose().array();
    MatrixXd y_orig = norm.destandardize_y(split.train.y);

    const int grid_n = 200;
    double x_lo = x_orig.minCoeff(), x_hi = x_orig.maxCoeff();
    double margin = 0.15 * (x_hi - x_lo);
    x_lo -= margin;
    x_hi += margin;
    MatrixXd grid_orig(grid_n, 1);
    for (int i = 0; i < grid_n; ++i)
        grid_orig(i, 0) = x_lo + (x_hi - x_lo) * i / (grid_n - 1);
    MatrixXd grid_std = norm.standardize_x(grid_orig);

    auto moments = predict_analytic(grid_std, post, model.spec);
    std::vector<double> gx(grid_n), mean(grid_n), sd(grid_n);
    for (int i = 0; i < grid_n; ++i) {
        gx[static_cast<std::size_t>(i)] = grid_orig(i, 0);
        mean[static_cast<std::size_t>(i)] =
            moments[static_cast<std::size_t>(i)].mean[0] * norm.y_std[0] + norm.y_mean[0];
        sd[static_cast<std::size_t>(i)] =
            std::sqrt(std::max(moments[static_cast<std::size_t>(i)].cov(0, 0), 0.0)) *
            norm.y_std[0];
    }

    // posterior function draws, deterministic forward per sampled weight set
    Rng rng(model.seed ^ 0x9e3779b9ull);
    std::vector<std::vector<double>> draws;
    for (int d = 0; d < n_draws; ++d) {
        MatrixXd z = grid_std;
        for (int l = 1; l <= model.spec.num_layers(); ++l) {
            auto [w, sigma_inv] = sample_mnw(post[static_cast<std::size_t>(l - 1)].moments, rng);
            z = activate_aug(z, model.spec) * w.transpose();
        }
        std::vector<double> curve(static_cast<std::size_t>(grid_n));
        for (int i = 0; i < grid_n; ++i)
            curve[static_cast<std::size_t>(i)] = z(i, 0) * norm.y_std[0] + norm.y_mean[0];
        draws.push_back(std::move(curve));
    }

    Frame f;
    f.x = {x_lo, x_hi};
    double y_lo = y_orig.minCoeff(), y_hi = y_orig.maxCoeff();
    for (int i = 0; i < grid_n; ++i) {
        y_lo = std::min(y_lo, mean[static_cast<std::size_t>(i)] - 2 * sd[static_cast<std::size_t>(i)]);
        y_hi = std::max(y_hi, mean[static_cast<std::size_t>(i)] + 2 * sd[static_cast<std::size_t>(i)]);
    }
    f.y = {y_lo, y_hi};
    pad_axis(f.x);
    pad_axis(f.y);

    std::ofstream os(out_path, std::ios::trunc);
    if (!os) throw IoError("cannot write " + out_path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth
       << "' height='" << kHeight << "'>\n";
    os << "<!-- columns: x,mean,sd -->\n";
    for (int i = 0; i < grid_n; ++i)
        os << "<!-- data: " << format_double(gx[static_cast<std::size_t>(i)]) << ','
           << format_double(mean[static_cast<std::size_t>(i)]) << ','
           << format_double(sd[static_cast<std::size_t>(i)]) << " -->\n";
    draw_axes(os, f, "x", "y");

    std::ostringstream band;
    for (int i = 0; i < grid_n; ++i)
        band << fmt(f.px(gx[static_cast<std::size_t>(i)])) << ','
             << fmt(f.py(mean[static_cast<std::size_t>(i)] + 2 * sd[static_cast<std::size_t>(i)]))
             << ' ';
    for (int i = grid_n; i-- > 0;)
        band << fmt(f.px(gx[static_cast<std::size_t>(i)])) << ','
             << fmt(f.py(mean[static_cast<std::size_t>(i)] - 2 * sd[static_cast<std::size_t>(i)]))
             << ' ';
    os << "<polygon points='" << band.str()
       << "' fill='indianred' fill-opacity='0.25' stroke='none'/>\n";

    for (const auto& curve : draws)
        os << "<polyline points='" << polyline(f, gx, curve)
           << "' fill='none' stroke='gray' stroke-opacity='0.6' stroke-width='1'/>\n";
    os << "<polyline points='" << polyline(f, gx, mean)
       << "' fill='none' stroke='indianred' stroke-width='2'/>\n";

    for (Eigen::Index i = 0; i < x_orig.rows(); ++i)
        os << "<circle cx='" << fmt(f.px(x_orig(i, 0))) << "' cy='"
           << fmt(f.py(y_orig(i, 0))) << "' r='2' fill='black' fill-opacity='0.5'/>\n";
    os << "</svg>\n";
}

}  // namespace bpc
