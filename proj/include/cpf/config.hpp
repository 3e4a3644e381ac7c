#pragma once

#include <cstdint>
#include <string>

#include "cpf/data.hpp"

namespace cpf {

enum class ModelMode { Rnn, CpfRnn, Darnn, CpfEnc, CpfDec, CpfDarnn };
enum class ResamplerKind { Multinomial, Continuous };

ModelMode model_mode_from_string(const std::string& s);
std::string to_string(ModelMode mode);
ResamplerKind resampler_from_string(const std::string& s);
std::string to_string(ResamplerKind kind);

// Every run hyperparameter. Serialized as flat key=value text; unknown keys
// are rejected when parsing.
struct RunConfig {
    ModelMode model = ModelMode::CpfRnn;
    ResamplerKind resampler = ResamplerKind::Continuous;
    NormMode normalization = NormMode::ZScore;
    int k = 10;         // particles
    int t = 10;         // window length
    int m = 128;        // encoder hidden size
    int p = 128;        // decoder hidden size
    int n = 0;          // driver count; 0 = take from data
    double kappa = 0.1; // likelihood-bound weight in the combined objective
    double lr = 1e-3;
    int batch = 128;
    int epochs = 10;
    std::uint64_t seed = 1;
    double split = 0.8;
    std::string target = "y";

    void validate() const;
    std::string to_text() const;
    static RunConfig from_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
};

}  // namespace cpf
