#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cpf/checkpoint.hpp"
#include "cpf/sweep.hpp"
#include "cpf/train.hpp"

namespace {

using namespace cpf;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& ckpt_path, const std::string& report_path,
              const std::string& test_out) {
    RunConfig cfg = RunConfig::from_file(config_path);
    SeriesDataset ds = load_csv(data_path, cfg.target);
    auto [train_raw, test_raw] = split_train_test(ds, cfg.split, cfg.t);
    NormScaler scaler = fit_scaler(train_raw, cfg.normalization);
    for (const auto& w : scaler.warnings) std::cerr << "warning: " << w << "\n";
    SeriesDataset train_norm = train_raw;
    scaler.apply_in_place(train_norm);

    cfg.n = ds.n();
    TrainResult result = train(cfg, train_norm, &test_raw, &scaler);
    save_checkpoint(result.model, cfg, scaler, ckpt_path);
    if (!report_path.empty()) write_text(report_path, result.report.to_json() + "\n");
    if (!test_out.empty()) write_csv(test_raw, test_out);

    if (!result.report.epochs.empty()) {
        const auto& last = result.report.epochs.back();
        std::cout << "trained " << to_string(cfg.model) << ": final loss " << last.loss;
        if (!std::isnan(last.val_rmse)) std::cout << ", validation RMSE " << last.val_rmse;
        std::cout << "\n";
    }
    return 0;
}

nlohmann::json metrics_json(const Metrics& m) {
    nlohmann::json j;
    j["mae"] = m.mae;
    j["mape_percent"] = m.mape_percent ? nlohmann::json(*m.mape_percent) : nlohmann::json();
    j["rmse"] = m.rmse;
    return j;
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& data_path,
                 const std::string& out_path) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    SeriesDataset ds = load_csv(data_path, ck.config.target);
    EvalResult ev = evaluate_windows(ck.model, ck.scaler, ds, ck.config.t, ck.seed ^ 0x5eedULL);
    write_text(out_path, metrics_json(ev.metrics).dump(2) + "\n");
    std::cout << "mae " << ev.metrics.mae << ", rmse " << ev.metrics.rmse << "\n";
    return 0;
}

int cmd_forecast(const std::string& ckpt_path, const std::string& data_path,
                 const std::string& out_path) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    SeriesDataset ds = load_csv(data_path, ck.config.target);
    EvalResult ev = evaluate_windows(ck.model, ck.scaler, ds, ck.config.t, ck.seed ^ 0x5eedULL);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open '" + out_path + "' for writing");
    out.precision(17);
    out << "window,y_true,y_pred\n";
    for (std::size_t i = 0; i < ev.y_pred.size(); ++i)
        out << i << "," << ev.y_true[i] << "," << ev.y_pred[i] << "\n";
    std::cout << "wrote " << ev.y_pred.size() << " predictions\n";
    return 0;
}

int cmd_synth(const std::string& kind, int length, std::uint64_t seed, const std::string& out,
              const SynthParams& params) {
    SeriesDataset ds = synth_generate(synth_kind_from_string(kind), length, params, seed);
    write_csv(ds, out);
    std::cout << "wrote " << ds.length() << " rows, " << ds.n() << " drivers\n";
    return 0;
}

int cmd_ecdf_dump(const std::string& snapshot, int demo_particles, std::uint64_t demo_seed,
                  int points, const std::string& out_path) {
    std::vector<double> proj, weights;
    if (!snapshot.empty()) {
        std::ifstream in(snapshot);
        if (!in) throw std::runtime_error("cannot open snapshot '" + snapshot + "'");
        nlohmann::json j;
        in >> j;
        proj = j.at("projections").get<std::vector<double>>();
        weights = j.at("weights").get<std::vector<double>>();
    } else {
        Rng rng(demo_seed);
        proj.resize(demo_particles);
        weights.resize(demo_particles);
        double mx = -1e300;
        for (int i = 0; i < demo_particles; ++i) {
            proj[i] = rng.normal();
            weights[i] = rng.normal();
            mx = std::max(mx, weights[i]);
        }
        double s = 0.0;
        for (auto& w : weights) s += (w = std::exp(w - mx));
        for (auto& w : weights) w /= s;
    }
    EcdfGrid grid = ecdf_grid(proj, weights, points);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open '" + out_path + "' for writing");
    out.precision(17);
    out << "h,f_hat,f_tilde\n";
    for (std::size_t i = 0; i < grid.grid.size(); ++i)
        out << grid.grid[i] << "," << grid.f_hat[i] << "," << grid.f_tilde[i] << "\n";
    std::cout << "wrote " << grid.grid.size() << " grid points\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& data_path,
              const std::string& out_path, int points, double radius, int windows,
              std::uint64_t crn_seed) {
    RunConfig cfg = RunConfig::from_file(config_path);
    SeriesDataset ds = load_csv(data_path, cfg.target);
    NormScaler scaler = fit_scaler(ds, cfg.normalization);
    scaler.apply_in_place(ds);
    SweepResult res = sweep_theta_ray(cfg, ds, points, radius, windows, crn_seed);

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open '" + out_path + "' for writing");
    out.precision(17);
    out << "tau,loss_continuous,loss_multinomial\n";
    for (std::size_t i = 0; i < res.taus.size(); ++i)
        out << res.taus[i] << "," << res.loss_continuous[i] << "," << res.loss_multinomial[i]
            << "\n";
    std::cout << "max adjacent jump: continuous " << res.max_jump_continuous << ", multinomial "
              << res.max_jump_multinomial << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Particle-filter LSTM forecasting"};
    app.require_subcommand(1);

    std::string config_path, data_path, ckpt_path, report_path, out_path, test_out;
    std::string kind = "driven-ar", snapshot;
    int length = 1000, points = 200, windows = 4, demo_particles = 16;
    double radius = 0.5;
    std::uint64_t seed = 1, crn_seed = 99, demo_seed = 1;
    SynthParams synth_params;

    auto* train_cmd = app.add_subcommand("train", "train a model from a config and CSV");
    train_cmd->add_option("--config", config_path, "key=value config file")->required();
    train_cmd->add_option("--data", data_path, "input CSV")->required();
    train_cmd->add_option("--out", ckpt_path, "checkpoint output path")->required();
    train_cmd->add_option("--report", report_path, "training report JSON path");
    train_cmd->add_option("--test-out", test_out, "write the held-out test rows as CSV");

    auto* eval_cmd = app.add_subcommand("evaluate", "metrics for a checkpoint on a test CSV");
    eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
    eval_cmd->add_option("--data", data_path, "test CSV")->required();
    eval_cmd->add_option("--out", out_path, "metrics JSON path")->required();

    auto* fc_cmd = app.add_subcommand("forecast", "per-window predictions CSV");
    fc_cmd->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
    fc_cmd->add_option("--data", data_path, "input CSV")->required();
    fc_cmd->add_option("--out", out_path, "predictions CSV path")->required();

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset CSV");
    synth_cmd->add_option("--kind", kind,
                          "linear-gaussian | stochastic-volatility | driven-ar");
    synth_cmd->add_option("--length", length, "number of rows");
    synth_cmd->add_option("--seed", seed, "generator seed");
    synth_cmd->add_option("--out", out_path, "output CSV")->required();
    synth_cmd->add_option("--a", synth_params.a, "AR coefficient");
    synth_cmd->add_option("--noise-w", synth_params.noise_w, "process/driver noise scale");
    synth_cmd->add_option("--noise-v", synth_params.noise_v, "observation noise scale");
    synth_cmd->add_option("--h0", synth_params.h0, "initial latent state");
    synth_cmd->add_option("--drivers", synth_params.n_drivers, "driver count (driven-ar)");

    auto* ecdf_cmd = app.add_subcommand("ecdf-dump", "grid of step and continuous ECDF values");
    ecdf_cmd->add_option("--snapshot", snapshot,
                         "JSON snapshot with 'projections' and 'weights' arrays");
    ecdf_cmd->add_option("--demo-particles", demo_particles, "random ensemble size (no snapshot)");
    ecdf_cmd->add_option("--demo-seed", demo_seed, "random ensemble seed");
    ecdf_cmd->add_option("--points", points, "grid resolution");
    ecdf_cmd->add_option("--out", out_path, "output CSV")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "loss along a parameter ray, both resamplers");
    sweep_cmd->add_option("--config", config_path, "key=value config file")->required();
    sweep_cmd->add_option("--data", data_path, "input CSV")->required();
    sweep_cmd->add_option("--out", out_path, "loss surface CSV")->required();
    sweep_cmd->add_option("--points", points, "grid resolution");
    sweep_cmd->add_option("--radius", radius, "ray half-width");
    sweep_cmd->add_option("--windows", windows, "batch windows in the objective");
    sweep_cmd->add_option("--crn-seed", crn_seed, "common-random-number seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed())
            return cmd_train(config_path, data_path, ckpt_path, report_path, test_out);
        if (eval_cmd->parsed()) return cmd_evaluate(ckpt_path, data_path, out_path);
        if (fc_cmd->parsed()) return cmd_forecast(ckpt_path, data_path, out_path);
        if (synth_cmd->parsed()) return cmd_synth(kind, length, seed, out_path, synth_params);
        if (ecdf_cmd->parsed())
            return cmd_ecdf_dump(snapshot, demo_particles, demo_seed, points, out_path);
        if (sweep_cmd->parsed())
            return cmd_sweep(config_path, data_path, out_path, points, radius, windows, crn_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
