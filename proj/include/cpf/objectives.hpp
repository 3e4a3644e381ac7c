#pragma once

#include <vector>

namespace cpf {

// (1/N) sum (y_hat - y)^2.
double mse_objective(const std::vector<double>& y_hat, const std::vector<double>& y);

// sum_t log-mean-exp over the N*K log weights at step t; log_w is indexed
// [sample][step][particle] and must be rectangular. Higher is better.
double elbo_objective(const std::vector<std::vector<std::vector<double>>>& log_w);

// Loss to minimize: mse - kappa * elbo. Subtracting the bound makes its
// maximization consistent with gradient descent on the total.
double combined_objective(double mse, double elbo, double kappa);

}  // namespace cpf
