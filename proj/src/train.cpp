#include "cpf/train.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cpf/optimizer.hpp"

namespace cpf {

namespace {

nlohmann::json number_or_null(double x) {
    if (std::isnan(x)) return nullptr;
    return x;
}

}  // namespace

std::string TrainReport::to_json() const {
    nlohmann::json j;
    j["epochs"] = nlohmann::json::array();
    for (const auto& e : epochs) {
        nlohmann::json je;
        je["loss"] = e.loss;
        je["mse"] = e.mse;
        je["elbo"] = number_or_null(e.elbo);
        je["val_mae"] = number_or_null(e.val_mae);
        je["val_rmse"] = number_or_null(e.val_rmse);
        je["val_mape_percent"] = number_or_null(e.val_mape_percent);
        j["epochs"].push_back(je);
    }
    j["wall_seconds"] = wall_seconds;
    j["param_checksum"] = param_checksum;
    j["incidents"] = incidents;
    return j.dump(2);
}

BatchLoss batch_loss(Graph& g, const ForecastModel& bound,
                     const std::vector<const SeriesWindow*>& windows, double kappa, Rng& rng) {
    if (windows.empty()) throw std::invalid_argument("batch_loss: empty batch");
    const bool with_elbo = bound.mode == ModelMode::CpfRnn && kappa > 0.0;

    std::vector<Tensor> y_hats;
    std::vector<double> labels;
    std::vector<std::vector<Tensor>> log_w_rows;  // [window][step]
    y_hats.reserve(windows.size());
    for (const SeriesWindow* w : windows) {
        WindowForward fw = forward_window(g, bound, *w, rng);
        y_hats.push_back(fw.y_hat);
        labels.push_back(w->y_label);
        if (with_elbo) log_w_rows.push_back(std::move(fw.step_log_w));
    }

    const Tensor pred_row = g.hstack(y_hats);
    const Tensor diff = g.sub(pred_row, g.constant(Tensor(1, (int)labels.size(), labels)));
    const Tensor mse = g.mean_all(g.mul(diff, diff));

    BatchLoss out;
    out.mse = mse.item();
    if (!with_elbo) {
        out.loss = mse;
        return out;
    }

    const int t_len = static_cast<int>(log_w_rows[0].size());
    const double total = static_cast<double>(windows.size()) * bound.k;
    std::vector<Tensor> per_step;
    per_step.reserve(t_len);
    for (int t = 0; t < t_len; ++t) {
        std::vector<Tensor> rows;
        rows.reserve(windows.size());
        for (auto& wr : log_w_rows) rows.push_back(wr[t]);
        const Tensor all = g.hstack(rows);  // 1 x (N*K)
        per_step.push_back(g.scalar_affine(g.logsumexp(all), 1.0, -std::log(total)));
    }
    const Tensor elbo = g.sum_all(g.hstack(per_step));
    out.elbo = elbo.item();
    out.loss = g.sub(mse, g.scalar_affine(elbo, kappa, 0.0));
    return out;
}

std::vector<double> predict_windows(const ForecastModel& model,
                                    const std::vector<SeriesWindow>& windows,
                                    std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> preds;
    preds.reserve(windows.size());
    for (const auto& w : windows) {
        Graph g;
        const ForecastModel bound = bind_model(g, model, false);
        preds.push_back(forward_window(g, bound, w, rng).y_hat.item());
    }
    return preds;
}

EvalResult evaluate_windows(const ForecastModel& model, const NormScaler& scaler,
                            const SeriesDataset& raw, int t, std::uint64_t seed) {
    SeriesDataset normalized = raw;
    scaler.apply_in_place(normalized);
    const auto norm_windows = normalized.windows(t);
    const auto raw_windows = raw.windows(t);

    EvalResult res;
    res.y_pred = predict_windows(model, norm_windows, seed);
    for (auto& y : res.y_pred) y = scaler.invert(y, raw.n());
    res.y_true.reserve(raw_windows.size());
    for (const auto& w : raw_windows) res.y_true.push_back(w.y_label);
    res.metrics = compute_metrics(res.y_true, res.y_pred);
    return res;
}

TrainResult train(const RunConfig& cfg, const SeriesDataset& train_data,
                  const SeriesDataset* val_data, const NormScaler* scaler) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();

    TrainResult res;
    res.model = ForecastModel::create(cfg, train_data.n());
    const auto windows = train_data.windows(cfg.t);
    if (windows.empty())
        throw std::invalid_argument("train: dataset too short for T=" + std::to_string(cfg.t));

    Rng model_rng = Rng(cfg.seed).spawn(1);
    Rng shuffle_rng = Rng(cfg.seed).spawn(2);

    std::vector<Tensor*> param_ptrs;
    for (auto& [name, t] : res.model.parameters()) {
        (void)name;
        param_ptrs.push_back(t);
    }
    AdamState adam;
    adam.reset(param_ptrs);
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.lr;

    std::vector<int> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the dedicated shuffle stream.
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.raw() % i]);

        double epoch_loss = 0.0, epoch_mse = 0.0, epoch_elbo = 0.0;
        int elbo_batches = 0, batches = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch) {
            const std::size_t end = std::min(order.size(), pos + cfg.batch);
            std::vector<const SeriesWindow*> batch;
            for (std::size_t i = pos; i < end; ++i) batch.push_back(&windows[order[i]]);

            Graph g;
            ForecastModel bound = bind_model(g, res.model, true);
            BatchLoss bl = batch_loss(g, bound, batch, cfg.kappa, model_rng);
            const double loss_val = bl.loss.item();
            if (!std::isfinite(loss_val) || loss_val > 1e8)
                throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch) +
                                         " batch " + std::to_string(batches) + " (loss " +
                                         std::to_string(loss_val) + ")");
            g.backward(bl.loss);

            std::vector<Tensor> grads;
            grads.reserve(param_ptrs.size());
            auto bound_params = bound.parameters();
            for (auto& [name, t] : bound_params) {
                (void)name;
                grads.push_back(g.grad(*t));
            }
            clip_global_norm(grads, 5.0);
            if (!adam_step(param_ptrs, grads, adam, adam_cfg))
                res.report.incidents.push_back("non-finite gradient skipped at epoch " +
                                               std::to_string(epoch) + " batch " +
                                               std::to_string(batches));

            epoch_loss += loss_val;
            epoch_mse += bl.mse;
            if (!std::isnan(bl.elbo)) {
                epoch_elbo += bl.elbo;
                ++elbo_batches;
            }
            ++batches;
        }

        EpochStats stats;
        stats.loss = epoch_loss / batches;
        stats.mse = epoch_mse / batches;
        stats.elbo = elbo_batches ? epoch_elbo / elbo_batches
                                  : std::numeric_limits<double>::quiet_NaN();
        if (val_data && scaler) {
            EvalResult ev = evaluate_windows(res.model, *scaler, *val_data, cfg.t, cfg.seed ^ 0x5eedULL);
            stats.val_mae = ev.metrics.mae;
            stats.val_rmse = ev.metrics.rmse;
            if (ev.metrics.mape_percent) stats.val_mape_percent = *ev.metrics.mape_percent;
        }
        res.report.epochs.push_back(stats);
    }

    const auto t_end = std::chrono::steady_clock::now();
    res.report.wall_seconds = std::chrono::duration<double>(t_end - t_start).count();
    std::ostringstream checksum;
    checksum << std::hex << std::setw(16) << std::setfill('0') << res.model.checksum();
    res.report.param_checksum = checksum.str();
    return res;
}

}  // namespace cpf
