#include "cpf/sweep.hpp"

#include <cmath>
#include <stdexcept>

namespace cpf {

SweepResult sweep_theta_ray(const RunConfig& cfg, const SeriesDataset& normalized_data,
                            int grid_points, double radius, int batch_windows,
                            std::uint64_t crn_seed) {
    if (grid_points < 2) throw std::invalid_argument("sweep: need at least 2 grid points");
    if (radius <= 0.0) throw std::invalid_argument("sweep: radius must be positive");

    ForecastModel base = ForecastModel::create(cfg, normalized_data.n());
    const auto all_windows = normalized_data.windows(cfg.t);
    if (all_windows.empty()) throw std::invalid_argument("sweep: dataset too short for T");
    std::vector<const SeriesWindow*> batch;
    for (int i = 0; i < batch_windows && i < static_cast<int>(all_windows.size()); ++i)
        batch.push_back(&all_windows[i]);

    const std::vector<double> theta0 = flatten_parameters(base);
    Rng dir_rng = Rng(crn_seed).spawn(7);
    std::vector<double> direction(theta0.size());
    double norm = 0.0;
    for (auto& d : direction) {
        d = dir_rng.normal();
        norm += d * d;
    }
    norm = std::sqrt(norm);
    for (auto& d : direction) d /= norm;

    SweepResult res;
    res.taus.resize(grid_points);
    res.loss_continuous.resize(grid_points);
    res.loss_multinomial.resize(grid_points);

    std::vector<double> theta(theta0.size());
    for (int i = 0; i < grid_points; ++i) {
        const double tau = -radius + 2.0 * radius * i / (grid_points - 1);
        res.taus[i] = tau;
        for (std::size_t j = 0; j < theta.size(); ++j) theta[j] = theta0[j] + tau * direction[j];

        for (ResamplerKind kind : {ResamplerKind::Continuous, ResamplerKind::Multinomial}) {
            ForecastModel model = base;
            set_parameters(model, theta);
            model.resampler = kind;
            Rng rng(crn_seed);  // identical draws at every grid point
            Graph g;
            const ForecastModel bound = bind_model(g, model, false);
            const double loss = batch_loss(g, bound, batch, cfg.kappa, rng).loss.item();
            (kind == ResamplerKind::Continuous ? res.loss_continuous : res.loss_multinomial)[i] =
                loss;
        }
    }

    for (int i = 1; i < grid_points; ++i) {
        res.max_jump_continuous = std::max(
            res.max_jump_continuous, std::abs(res.loss_continuous[i] - res.loss_continuous[i - 1]));
        res.max_jump_multinomial =
            std::max(res.max_jump_multinomial,
                     std::abs(res.loss_multinomial[i] - res.loss_multinomial[i - 1]));
    }
    return res;
}

}  // namespace cpf
