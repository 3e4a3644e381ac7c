#pragma once

#include <string>
#include <vector>

#include "cpf/data.hpp"
#include "cpf/model.hpp"

namespace cpf {

struct EpochStats {
    double loss = 0.0;
    double mse = 0.0;
    double elbo = 0.0;  // NaN when the objective is task-only
    double val_mae = std::numeric_limits<double>::quiet_NaN();
    double val_rmse = std::numeric_limits<double>::quiet_NaN();
    double val_mape_percent = std::numeric_limits<double>::quiet_NaN();
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    double wall_seconds = 0.0;
    std::string param_checksum;
    std::vector<std::string> incidents;

    std::string to_json() const;
};

struct TrainResult {
    ForecastModel model;
    TrainReport report;
};

struct BatchLoss {
    Tensor loss;  // scalar node on the graph
    double mse = 0.0;
    double elbo = std::numeric_limits<double>::quiet_NaN();
};

// Assembles the minibatch objective on the graph: task MSE over the windows'
// labels, minus kappa times the likelihood bound when the mode trains with
// it (cpf-rnn). The bound couples all windows at each step, so the whole
// batch shares one graph.
BatchLoss batch_loss(Graph& g, const ForecastModel& bound,
                     const std::vector<const SeriesWindow*>& windows, double kappa, Rng& rng);

// Shuffled-minibatch training with gradient clipping at global norm 5 and an
// adaptive-moment optimizer. Aborts (throws) when the loss exceeds 1e8 or
// turns non-finite, naming the epoch and batch. Deterministic under
// cfg.seed. Validation metrics, when a validation set and scaler are given,
// are reported in original units.
TrainResult train(const RunConfig& cfg, const SeriesDataset& train_data,
                  const SeriesDataset* val_data = nullptr, const NormScaler* scaler = nullptr);

// Forward-only predictions (normalized units), one per window, deterministic
// under the seed.
std::vector<double> predict_windows(const ForecastModel& model,
                                    const std::vector<SeriesWindow>& windows, std::uint64_t seed);

struct EvalResult {
    std::vector<double> y_true;
    std::vector<double> y_pred;
    Metrics metrics;
};

// Normalizes a raw dataset with the fitted scaler, predicts every window,
// and reports metrics in original units.
EvalResult evaluate_windows(const ForecastModel& model, const NormScaler& scaler,
                            const SeriesDataset& raw, int t, std::uint64_t seed);

}  // namespace cpf
