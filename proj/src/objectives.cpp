#include "cpf/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cpf {

double mse_objective(const std::vector<double>& y_hat, const std::vector<double>& y) {
    if (y_hat.empty() || y_hat.size() != y.size())
        throw std::invalid_argument("mse_objective: inputs must be nonempty and equal length");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y_hat[i] - y[i]) * (y_hat[i] - y[i]);
    return s / static_cast<double>(y.size());
}

double elbo_objective(const std::vector<std::vector<std::vector<double>>>& log_w) {
    if (log_w.empty()) throw std::invalid_argument("elbo_objective: no samples");
    const std::size_t n = log_w.size();
    const std::size_t t_len = log_w[0].size();
    if (t_len == 0) throw std::invalid_argument("elbo_objective: no steps");
    const std::size_t k = log_w[0][0].size();
    for (const auto& sample : log_w) {
        if (sample.size() != t_len)
            throw std::invalid_argument("elbo_objective: ragged step dimension");
        for (const auto& step : sample)
            if (step.size() != k || k == 0)
                throw std::invalid_argument("elbo_objective: ragged particle dimension");
    }

    double total = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            for (double w : log_w[i][t]) mx = std::max(mx, w);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (double w : log_w[i][t]) s += std::exp(w - mx);
        total += mx + std::log(s) - std::log(static_cast<double>(n * k));
    }
    return total;
}

double combined_objective(double mse, double elbo, double kappa) {
    if (kappa < 0.0) throw std::invalid_argument("combined_objective: kappa must be >= 0");
    return mse - kappa * elbo;
}

}  // namespace cpf
