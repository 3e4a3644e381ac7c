#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cpf/rng.hpp"
#include "cpf/tensor.hpp"

namespace cpf {

// One training example: the driving-series block over a window of T steps,
// the in-window target history y_1..y_{T-1}, and the label y_T observed at
// the window's final step.
struct SeriesWindow {
    Tensor drivers;                  // n x T
    std::vector<double> y_history;   // length T-1
    double y_label = 0.0;
    int start = 0;                   // dataset row of the window's first column
};

struct SeriesDataset {
    std::vector<std::string> names;  // driver names, in column order
    Tensor driving;                  // n x L
    std::vector<double> target;      // length L
    std::string target_name = "y";

    int n() const { return driving.rows; }
    int length() const { return static_cast<int>(target.size()); }

    // Stride-1 windows; produces exactly L - T of them.
    std::vector<SeriesWindow> windows(int t) const;
};

// CSV with a header row and an all-numeric body; `target_column` names the
// target, every other column becomes a driver in file order.
SeriesDataset load_csv(const std::string& path, const std::string& target_column);
void write_csv(const SeriesDataset& ds, const std::string& path);

// Chronological cut at floor(fraction * L); windows are built per side, so
// none straddles the boundary. Rejects splits leaving fewer than T + 1 rows
// on either side.
std::pair<SeriesDataset, SeriesDataset> split_train_test(const SeriesDataset& ds, double fraction,
                                                         int t);

enum class NormMode { None, ZScore, MinMax };

NormMode norm_mode_from_string(const std::string& s);
std::string to_string(NormMode mode);

// Per-column affine scaler fit on training data only: column j maps to
// (x - offset[j]) / scale[j]. Index n() is the target column.
struct NormScaler {
    NormMode mode = NormMode::None;
    std::vector<double> offset;  // n + 1 entries
    std::vector<double> scale;
    std::vector<std::string> warnings;

    double apply(double x, int column) const { return (x - offset[column]) / scale[column]; }
    double invert(double x, int column) const { return x * scale[column] + offset[column]; }
    void apply_in_place(SeriesDataset& ds) const;
};

NormScaler fit_scaler(const SeriesDataset& train, NormMode mode);

struct SynthParams {
    double a = 0.9;         // AR coefficient (latent process or target recursion)
    double noise_w = 0.5;   // process / driver noise scale
    double noise_v = 0.5;   // observation noise scale
    double h0 = std::numeric_limits<double>::quiet_NaN();  // NaN: draw from stationary prior
    int n_drivers = 5;      // driven-ar only
};

enum class SynthKind { LinearGaussian, StochasticVolatility, DrivenAr };

SynthKind synth_kind_from_string(const std::string& s);

// Deterministic under seed. linear-gaussian and stochastic-volatility emit a
// single lag-1 driver (x_t = y_{t-1}); driven-ar emits n AR(1) drivers and a
// target that is a noisy linear function of them plus its own AR term.
SeriesDataset synth_generate(SynthKind kind, int length, const SynthParams& params,
                             std::uint64_t seed);

// Scalar linear-Gaussian state-space model: h' = a h + sw xi, y = h + sv nu,
// with a Gaussian prior on the first latent state.
struct LinearGaussianSsm {
    double a = 0.9;
    double sw = 0.5;
    double sv = 0.5;
    double prior_mean = 0.0;
    double prior_var = 1.0;
};

std::vector<double> simulate_lgssm(const LinearGaussianSsm& ssm, int t, Rng& rng);

// Exact marginal log-likelihood via the Kalman prediction/update recursion.
double kalman_loglik(const LinearGaussianSsm& ssm, const std::vector<double>& observations);

struct Metrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> mape_percent;  // absent when any y is zero
};

Metrics compute_metrics(const std::vector<double>& y, const std::vector<double>& y_hat);

}  // namespace cpf
