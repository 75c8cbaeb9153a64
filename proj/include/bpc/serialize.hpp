#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpc/data.hpp"
#include "bpc/network.hpp"

namespace bpc {

enum class TrainerKind : std::uint8_t { bpc = 0, pc = 1, bp = 2 };

TrainerKind trainer_from_name(const std::string& name);
std::string trainer_name(TrainerKind kind);

/// Everything needed to evaluate a trained model later: the architecture,
/// the data normalization, and either natural parameters (bpc) or plain
/// weights (pc/bp). Files are little-endian with a magic string and a
/// version byte; round-trips are bit-exact.
struct ModelFile {
    TrainerKind trainer = TrainerKind::bpc;
    Task task = Task::regression;
    std::uint64_t seed = 0;
    NetworkSpec spec;
    Normalization norm;
    std::vector<NaturalParams> eta;     // bpc
    std::vector<MatrixXd> weights;      // pc / bp

    Posteriors posteriors() const;
};

void save_model(const std::string& path, const ModelFile& model);

/// Loads a model; when expected_spec is given, its dims/activation/bias must
/// match the stored ones or a ShapeError is thrown.
ModelFile load_model(const std::string& path,
                     const NetworkSpec* expected_spec = nullptr);

}  // namespace bpc
