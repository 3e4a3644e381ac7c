#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cpf {

// Deterministic random source. Uniform and normal draws are generated from
// explicit bit manipulation / Box-Muller so that a given seed yields the same
// stream on every platform, independent of the standard library's
// distribution internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1): never returns an exact endpoint.
    double uniform_open() {
        double u = uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        return u;
    }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (two uniforms per draw, no caching).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::vector<double> normals(std::size_t count) {
        std::vector<double> out(count);
        for (auto& x : out) x = normal();
        return out;
    }

    std::vector<double> uniforms_open(std::size_t count) {
        std::vector<double> out(count);
        for (auto& x : out) x = uniform_open();
        return out;
    }

    // Derive an independent stream (e.g. one per data shard or seed index).
    Rng spawn(std::uint64_t stream) {
        return Rng(eng_() ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace cpf
