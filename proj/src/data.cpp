#include "bpc/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bpc/errors.hpp"
#include "bpc/rng.hpp"

namespace bpc {

Normalization Normalization::identity(Eigen::Index d_in, Eigen::Index d_out) {
    Normalization n;
    n.x_mean = VectorXd::Zero(d_in);
    n.x_std = VectorXd::Ones(d_in);
    n.y_mean = VectorXd::Zero(d_out);
    n.y_std = VectorXd::Ones(d_out);
    return n;
}

MatrixXd Normalization::destandardize_y(const MatrixXd& y) const {
    return (y.array().rowwise() * y_std.transpose().array()).rowwise() +
           y_mean.transpose().array();
}

MatrixXd Normalization::standardize_x(const MatrixXd& x) const {
    return (x.array().rowwise() - x_mean.transpose().array()).rowwise() /
           x_std.transpose().array();
}

void Dataset::validate() const {
    if (x.rows() < 1) throw IoError("dataset is empty");
    if (x.rows() != y.rows()) throw ShapeError("x/y row counts differ");
    if (!x.allFinite() || !y.allFinite())
        throw IoError("dataset contains NaN or Inf");
}

namespace {

bool is_numeric_token(const std::string& tok) {
    if (tok.empty()) return false;
    char* end = nullptr;
    std::strtod(tok.c_str(), &end);
    while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
    return end && *end == '\0';
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back())))
            cell.pop_back();
        std::size_t start = 0;
        while (start < cell.size() && std::isspace(static_cast<unsigned char>(cell[start])))
            ++start;
        out.push_back(cell.substr(start));
    }
    return out;
}

// z-score columns in place, returning (mean, std); constant columns keep std 1.
std::pair<VectorXd, VectorXd> standardize_columns(MatrixXd& m) {
    VectorXd mean = m.colwise().mean();
    MatrixXd centered = m.rowwise() - mean.transpose();
    VectorXd std_dev =
        (centered.array().square().colwise().sum() / static_cast<double>(m.rows()))
            .sqrt();
    for (Eigen::Index j = 0; j < std_dev.size(); ++j)
        if (std_dev[j] <= 0.0) std_dev[j] = 1.0;
    m = centered.array().rowwise() / std_dev.transpose().array();
    return {mean, std_dev};
}

}  // namespace

Dataset load_uci_csv(const std::string& path, const std::vector<int>& target_columns,
                     bool standardize) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    int n_cols = -1;
    bool first = true;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto cells = split_csv_line(line);
        if (first) {
            first = false;
            bool header = std::any_of(cells.begin(), cells.end(),
                                      [](const std::string& c) { return !is_numeric_token(c); });
            if (header) {
                n_cols = static_cast<int>(cells.size());
                continue;
            }
        }
        if (n_cols < 0) n_cols = static_cast<int>(cells.size());
        if (static_cast<int>(cells.size()) != n_cols)
            throw IoError(path + ": inconsistent column count at line " +
                          std::to_string(line_no));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            if (!is_numeric_token(c))
                throw IoError(path + ": non-numeric cell '" + c + "' at line " +
                              std::to_string(line_no));
            row.push_back(std::strtod(c.c_str(), nullptr));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": no data rows");

    for (int t : target_columns)
        if (t < 0 || t >= n_cols)
            throw IoError(path + ": target column " + std::to_string(t) +
                          " out of range");

    std::vector<int> feature_cols;
    for (int j = 0; j < n_cols; ++j)
        if (std::find(target_columns.begin(), target_columns.end(), j) ==
            target_columns.end())
            feature_cols.push_back(j);
    if (feature_cols.empty() || target_columns.empty())
        throw IoError(path + ": need at least one feature and one target column");

    const auto n = static_cast<Eigen::Index>(rows.size());
    Dataset d;
    d.task = Task::regression;
    d.x.resize(n, static_cast<Eigen::Index>(feature_cols.size()));
    d.y.resize(n, static_cast<Eigen::Index>(target_columns.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            d.x(i, static_cast<Eigen::Index>(j)) = rows[i][feature_cols[j]];
        for (std::size_t j = 0; j < target_columns.size(); ++j)
            d.y(i, static_cast<Eigen::Index>(j)) = rows[i][target_columns[j]];
    }
    d.norm = Normalization::identity(d.x.cols(), d.y.cols());
    if (standardize) {
        std::tie(d.norm.x_mean, d.norm.x_std) = standardize_columns(d.x);
        std::tie(d.norm.y_mean, d.norm.y_std) = standardize_columns(d.y);
    }
    d.validate();
    return d;
}

namespace {

std::vector<unsigned char> read_file_maybe_gz(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) {
        std::vector<unsigned char> out;
        out.resize(raw.size() * 4 + 1024);
        z_stream zs{};
        if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
            throw IoError("zlib init failed for " + path);
        zs.next_in = raw.data();
        zs.avail_in = static_cast<uInt>(raw.size());
        std::size_t written = 0;
        int ret = Z_OK;
        do {
            if (written == out.size()) out.resize(out.size() * 2);
            zs.next_out = out.data() + written;
            zs.avail_out = static_cast<uInt>(out.size() - written);
            ret = inflate(&zs, Z_NO_FLUSH);
            if (ret != Z_OK && ret != Z_STREAM_END) {
                inflateEnd(&zs);
                throw IoError("gzip decompression failed for " + path);
            }
            written = out.size() - zs.avail_out;
        } while (ret != Z_STREAM_END);
        inflateEnd(&zs);
        out.resize(written);
        return out;
    }
    return raw;
}

std::uint32_t read_be32(const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) |
           (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    auto img = read_file_maybe_gz(images_path);
    auto lab = read_file_maybe_gz(labels_path);
    if (img.size() < 16 || read_be32(img.data()) != 0x00000803u)
        throw IoError(images_path + ": bad IDX image magic");
    if (lab.size() < 8 || read_be32(lab.data()) != 0x00000801u)
        throw IoError(labels_path + ": bad IDX label magic");

    const std::uint32_t n = read_be32(img.data() + 4);
    const std::uint32_t rows = read_be32(img.data() + 8);
    const std::uint32_t cols = read_be32(img.data() + 12);
    const std::uint32_t n_lab = read_be32(lab.data() + 4);
    if (n != n_lab) throw IoError("image/label counts differ");
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    if (img.size() != 16 + static_cast<std::size_t>(n) * pixels)
        throw IoError(images_path + ": truncated image data");
    if (lab.size() != 8 + n) throw IoError(labels_path + ": truncated label data");

    Dataset d;
    d.task = Task::classification;
    d.x.resize(n, static_cast<Eigen::Index>(pixels));
    d.y = MatrixXd::Zero(n, 10);
    const unsigned char* px = img.data() + 16;
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < pixels; ++j)
            d.x(i, static_cast<Eigen::Index>(j)) = px[i * pixels + j] / 255.0;
        unsigned char digit = lab[8 + i];
        if (digit > 9) throw IoError(labels_path + ": label out of range");
        d.y(i, digit) = 1.0;
    }
    d.norm = Normalization::identity(d.x.cols(), 10);
    d.validate();
    return d;
}

Dataset gen_two_moons(int n, double noise_std, std::uint64_t seed) {
    Rng rng(seed);
    const int n_out = n / 2;
    const int n_in = n - n_out;
    Dataset d;
    d.task = Task::classification;
    d.x.resize(n, 2);
    d.y = MatrixXd::Zero(n, 2);
    for (int i = 0; i < n_out; ++i) {
        double t = n_out > 1 ? M_PI * i / (n_out - 1) : 0.0;
        d.x(i, 0) = std::cos(t);
        d.x(i, 1) = std::sin(t);
        d.y(i, 0) = 1.0;
    }
    for (int i = 0; i < n_in; ++i) {
        double t = n_in > 1 ? M_PI * i / (n_in - 1) : 0.0;
        d.x(n_out + i, 0) = 1.0 - std::cos(t);
        d.x(n_out + i, 1) = 0.5 - std::sin(t);
        d.y(n_out + i, 1) = 1.0;
    }
    if (noise_std > 0.0)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 2; ++j) d.x(i, j) += noise_std * rng.normal();
    d.norm = Normalization::identity(2, 2);
    d.validate();
    return d;
}

Dataset gen_sine_hetero(int n, std::uint64_t seed, double x_std,
                        double fixed_noise_std) {
    Rng rng(seed);
    Dataset d;
    d.task = Task::regression;
    d.x.resize(n, 1);
    d.y.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        double x = x_std * rng.normal();
        double noise_scale =
            fixed_noise_std >= 0.0 ? fixed_noise_std : 0.45 * (x + 0.5);
        d.x(i, 0) = x;
        d.y(i, 0) = -(x + 0.5) * std::sin(3.0 * M_PI * x) + noise_scale * rng.normal();
    }
    d.norm = Normalization::identity(1, 1);
    d.validate();
    return d;
}

Dataset gen_cubic_gap(int n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.task = Task::regression;
    d.x.resize(n, 1);
    d.y.resize(n, 1);
    const int n_pos = n / 2;
    for (int i = 0; i < n; ++i) {
        double x = i < n_pos ? rng.uniform(3.0, 5.0) : rng.uniform(-5.0, -3.0);
        d.x(i, 0) = x;
        d.y(i, 0) = x * x * x + 3.0 * rng.normal();
    }
    d.norm = Normalization::identity(1, 1);
    d.validate();
    return d;
}

TrainTestSplit split_dataset(const Dataset& data, double test_fraction,
                             std::uint64_t seed) {
    const auto n = data.size();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    // Fisher-Yates with our own generator so the order is platform-stable.
    for (auto i = static_cast<std::size_t>(n) - 1; i > 0; --i) {
        auto j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    auto n_test = static_cast<Eigen::Index>(std::llround(test_fraction * n));
    n_test = std::clamp<Eigen::Index>(n_test, 0, n - 1);
    const auto n_train = n - n_test;

    auto take = [&](Eigen::Index from, Eigen::Index count) {
        Dataset out;
        out.task = data.task;
        out.norm = data.norm;
        out.x.resize(count, data.x.cols());
        out.y.resize(count, data.y.cols());
        for (Eigen::Index i = 0; i < count; ++i) {
            out.x.row(i) = data.x.row(idx[static_cast<std::size_t>(from + i)]);
            out.y.row(i) = data.y.row(idx[static_cast<std::size_t>(from + i)]);
        }
        return out;
    };
    return {take(0, n_train), take(n_train, n_test)};
}

std::vector<Batch> make_batches(const Dataset& data, int batch_size) {
    const auto n = data.size();
    const auto bs = batch_size <= 0 ? n : static_cast<Eigen::Index>(batch_size);
    std::vector<Batch> batches;
    for (Eigen::Index start = 0; start < n; start += bs) {
        const auto count = std::min(bs, n - start);
        batches.push_back({data.x.middleRows(start, count), data.y.middleRows(start, count)});
    }
    return batches;
}

std::pair<std::vector<Batch>, Dataset> split_and_batch(const Dataset& data,
                                                       double test_fraction,
                                                       int batch_size,
                                                       std::uint64_t seed) {
    auto split = split_dataset(data, test_fraction, seed);
    return {make_batches(split.train, batch_size), std::move(split.test)};
}

}  // namespace bpc
