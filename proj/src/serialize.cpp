#include "bpc/serialize.hpp"

#include <cstring>
#include <fstream>

#include "bpc/errors.hpp"

namespace bpc {

namespace {

constexpr char kMagic[8] = {'B', 'P', 'C', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint8_t kVersion = 1;

void put_u8(std::ostream& os, std::uint8_t v) {
    os.put(static_cast<char>(v));
}

void put_u32(std::ostream& os, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::ostream& os, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(os, bits);
}

void put_matrix(std::ostream& os, const MatrixXd& m) {
    put_u32(os, static_cast<std::uint32_t>(m.rows()));
    put_u32(os, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) put_f64(os, m(i, j));
}

void put_vector(std::ostream& os, const VectorXd& v) {
    put_u32(os, static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(os, v[i]);
}

struct Reader {
    const unsigned char* p;
    const unsigned char* end;
    std::string path;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n)
            throw IoError(path + ": truncated model file");
    }
    std::uint8_t u8() {
        need(1);
        return *p++;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    MatrixXd matrix() {
        std::uint32_t rows = u32(), cols = u32();
        MatrixXd m(rows, cols);
        for (std::uint32_t j = 0; j < cols; ++j)
            for (std::uint32_t i = 0; i < rows; ++i) m(i, j) = f64();
        return m;
    }
    VectorXd vector() {
        std::uint32_t n = u32();
        VectorXd v(n);
        for (std::uint32_t i = 0; i < n; ++i) v[i] = f64();
        return v;
    }
};

}  // namespace

TrainerKind trainer_from_name(const std::string& name) {
    if (name == "bpc") return TrainerKind::bpc;
    if (name == "pc") return TrainerKind::pc;
    if (name == "bp") return TrainerKind::bp;
    throw ConfigError("unknown trainer '" + name + "'");
}

std::string trainer_name(TrainerKind kind) {
    switch (kind) {
        case TrainerKind::bpc: return "bpc";
        case TrainerKind::pc: return "pc";
        case TrainerKind::bp: return "bp";
    }
    throw ConfigError("bad trainer kind");
}

Posteriors ModelFile::posteriors() const {
    if (trainer != TrainerKind::bpc)
        throw ConfigError("model has no parameter posterior (trainer " +
                          trainer_name(trainer) + ")");
    Posteriors post;
    for (const auto& e : eta) post.push_back(LayerPosterior::from_natural(e));
    return post;
}

void save_model(const std::string& path, const ModelFile& model) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path);
    os.write(kMagic, sizeof(kMagic));
    put_u8(os, kVersion);
    put_u8(os, static_cast<std::uint8_t>(model.trainer));
    put_u8(os, model.task == Task::classification ? 1 : 0);
    put_u64(os, model.seed);

    put_u32(os, static_cast<std::uint32_t>(model.spec.dims.size()));
    for (int d : model.spec.dims) put_u32(os, static_cast<std::uint32_t>(d));
    put_u8(os, model.spec.activation == Activation::relu ? 0 : 1);
    put_u8(os, model.spec.bias ? 1 : 0);

    put_vector(os, model.norm.x_mean);
    put_vector(os, model.norm.x_std);
    put_vector(os, model.norm.y_mean);
    put_vector(os, model.norm.y_std);

    if (model.trainer == TrainerKind::bpc) {
        put_u32(os, static_cast<std::uint32_t>(model.eta.size()));
        for (const auto& e : model.eta) {
            put_matrix(os, e.eta1);
            put_matrix(os, e.eta2);
            put_matrix(os, e.eta3);
            put_f64(os, e.eta4);
        }
    } else {
        put_u32(os, static_cast<std::uint32_t>(model.weights.size()));
        for (const auto& w : model.weights) put_matrix(os, w);
    }
    if (!os) throw IoError("write failed for " + path);
}

ModelFile load_model(const std::string& path, const NetworkSpec* expected_spec) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
    Reader r{buf.data(), buf.data() + buf.size(), path};

    r.need(sizeof(kMagic));
    if (std::memcmp(r.p, kMagic, sizeof(kMagic)) != 0)
        throw IoError(path + ": not a model file (bad magic)");
    r.p += sizeof(kMagic);
    std::uint8_t version = r.u8();
    if (version != kVersion)
        throw IoError(path + ": unsupported model version " + std::to_string(version));

    ModelFile m;
    std::uint8_t trainer = r.u8();
    if (trainer > 2) throw IoError(path + ": bad trainer tag");
    m.trainer = static_cast<TrainerKind>(trainer);
    m.task = r.u8() ? Task::classification : Task::regression;
    m.seed = r.u64();

    std::uint32_t n_dims = r.u32();
    if (n_dims < 2 || n_dims > 1024) throw IoError(path + ": bad layer count");
    m.spec.dims.resize(n_dims);
    for (auto& d : m.spec.dims) d = static_cast<int>(r.u32());
    m.spec.activation = r.u8() == 0 ? Activation::relu : Activation::identity;
    m.spec.bias = r.u8() != 0;

    m.norm.x_mean = r.vector();
    m.norm.x_std = r.vector();
    m.norm.y_mean = r.vector();
    m.norm.y_std = r.vector();

    std::uint32_t n_layers = r.u32();
    if (n_layers != static_cast<std::uint32_t>(m.spec.num_layers()))
        throw IoError(path + ": layer count does not match architecture");
    if (m.trainer == TrainerKind::bpc) {
        m.eta.resize(n_layers);
        for (auto& e : m.eta) {
            e.eta1 = r.matrix();
            e.eta2 = r.matrix();
            e.eta3 = r.matrix();
            e.eta4 = r.f64();
        }
        for (std::uint32_t l = 0; l < n_layers; ++l) {
            const auto d_x = m.spec.aug_dim(static_cast<int>(l) + 1);
            const auto d_y = m.spec.dims[l + 1];
            if (m.eta[l].eta1.rows() != d_x || m.eta[l].eta2.rows() != d_x ||
                m.eta[l].eta2.cols() != d_y || m.eta[l].eta3.rows() != d_y)
                throw ShapeError(path + ": parameter shapes do not match architecture");
        }
    } else {
        m.weights.resize(n_layers);
        for (std::uint32_t l = 0; l < n_layers; ++l) {
            m.weights[l] = r.matrix();
            if (m.weights[l].rows() != m.spec.dims[l + 1] ||
                m.weights[l].cols() != m.spec.aug_dim(static_cast<int>(l) + 1))
                throw ShapeError(path + ": weight shapes do not match architecture");
        }
    }
    if (r.p != r.end) throw IoError(path + ": trailing bytes");

    if (expected_spec) {
        if (expected_spec->dims != m.spec.dims ||
            expected_spec->activation != m.spec.activation ||
            expected_spec->bias != m.spec.bias)
            throw ShapeError(path + ": stored architecture differs from expected");
    }
    return m;
}

}  // namespace bpc
