#pragma once

#include <string>

#include "cpf/model.hpp"

namespace cpf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    RunConfig config;
    std::uint64_t seed = 0;
    NormScaler scaler;
    ForecastModel model;
};

// Little-endian binary: magic string, version, config text, seed, then one
// (name, shape, row-major float64 payload) record per tensor. The scaler
// travels as reserved-name records alongside the model parameters. Loading
// a saved file reproduces every tensor bit-exactly.
void save_checkpoint(const ForecastModel& model, const RunConfig& cfg, const NormScaler& scaler,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cpf
