#include "cpf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cpf {

std::vector<SeriesWindow> SeriesDataset::windows(int t) const {
    if (t < 2) throw std::invalid_argument("windows: T must be >= 2");
    const int l = length();
    std::vector<SeriesWindow> out;
    if (l < t + 1) return out;
    out.reserve(l - t);
    for (int j = 0; j + t < l; ++j) {
        SeriesWindow w;
        w.start = j;
        w.drivers = Tensor(n(), t);
        for (int r = 0; r < n(); ++r)
            for (int c = 0; c < t; ++c) w.drivers.at(r, c) = driving.at(r, j + c);
        w.y_history.assign(target.begin() + j, target.begin() + j + t - 1);
        w.y_label = target[j + t - 1];
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, int row, const std::string& column) {
    const std::string s = trim(raw);
    if (s.empty())
        throw std::invalid_argument("load_csv: empty cell at row " + std::to_string(row) +
                                    ", column '" + column + "'");
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size())
        throw std::invalid_argument("load_csv: unparseable value '" + s + "' at row " +
                                    std::to_string(row) + ", column '" + column + "'");
    return v;
}

}  // namespace

SeriesDataset load_csv(const std::string& path, const std::string& target_column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: '" + path + "' is empty");
    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);
    int target_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == target_column) target_idx = static_cast<int>(i);
    if (target_idx < 0)
        throw std::invalid_argument("load_csv: target column '" + target_column +
                                    "' not found in '" + path + "'");

    std::vector<std::vector<double>> rows;
    int row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("load_csv: row " + std::to_string(row_no) + " has " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(header.size()));
        std::vector<double> vals(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            vals[c] = parse_cell(cells[c], row_no, header[c]);
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::runtime_error("load_csv: '" + path + "' has no data rows");

    SeriesDataset ds;
    ds.target_name = target_column;
    const int n = static_cast<int>(header.size()) - 1;
    const int l = static_cast<int>(rows.size());
    ds.driving = Tensor(n, l);
    ds.target.resize(l);
    for (std::size_t i = 0; i < header.size(); ++i)
        if (static_cast<int>(i) != target_idx) ds.names.push_back(header[i]);
    for (int r = 0; r < l; ++r) {
        int d = 0;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (static_cast<int>(c) == target_idx)
                ds.target[r] = rows[r][c];
            else
                ds.driving.at(d++, r) = rows[r][c];
        }
    }
    return ds;
}

void write_csv(const SeriesDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "' for writing");
    for (int i = 0; i < ds.n(); ++i) out << ds.names[i] << ",";
    out << ds.target_name << "\n";
    out.precision(17);
    for (int r = 0; r < ds.length(); ++r) {
        for (int i = 0; i < ds.n(); ++i) out << ds.driving.at(i, r) << ",";
        out << ds.target[r] << "\n";
    }
    if (!out) throw std::runtime_error("write_csv: write to '" + path + "' failed");
}

namespace {

SeriesDataset slice_rows(const SeriesDataset& ds, int begin, int end) {
    SeriesDataset out;
    out.names = ds.names;
    out.target_name = ds.target_name;
    out.driving = Tensor(ds.n(), end - begin);
    for (int r = 0; r < ds.n(); ++r)
        for (int c = begin; c < end; ++c) out.driving.at(r, c - begin) = ds.driving.at(r, c);
    out.target.assign(ds.target.begin() + begin, ds.target.begin() + end);
    return out;
}

}  // namespace

std::pair<SeriesDataset, SeriesDataset> split_train_test(const SeriesDataset& ds, double fraction,
                                                         int t) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("split_train_test: fraction must lie in (0, 1)");
    const int l = ds.length();
    const int cut = static_cast<int>(std::floor(fraction * l));
    if (cut < t + 1 || l - cut < t + 1)
        throw std::invalid_argument("split_train_test: split at " + std::to_string(cut) + "/" +
                                    std::to_string(l) + " leaves fewer than T+1=" +
                                    std::to_string(t + 1) + " rows on one side");
    return {slice_rows(ds, 0, cut), slice_rows(ds, cut, l)};
}

NormMode norm_mode_from_string(const std::string& s) {
    if (s == "zscore") return NormMode::ZScore;
    if (s == "minmax") return NormMode::MinMax;
    if (s == "none") return NormMode::None;
    throw std::invalid_argument("unknown normalization mode '" + s + "'");
}

std::string to_string(NormMode mode) {
    switch (mode) {
        case NormMode::ZScore: return "zscore";
        case NormMode::MinMax: return "minmax";
        default: return "none";
    }
}

NormScaler fit_scaler(const SeriesDataset& train, NormMode mode) {
    const int cols = train.n() + 1;
    NormScaler sc;
    sc.mode = mode;
    sc.offset.assign(cols, 0.0);
    sc.scale.assign(cols, 1.0);
    if (mode == NormMode::None) return sc;

    auto column = [&](int c) {
        std::vector<double> v(train.length());
        for (int r = 0; r < train.length(); ++r)
            v[r] = c < train.n() ? train.driving.at(c, r) : train.target[r];
        return v;
    };
    for (int c = 0; c < cols; ++c) {
        std::vector<double> v = column(c);
        const std::string name = c < train.n() ? train.names[c] : train.target_name;
        if (mode == NormMode::ZScore) {
            double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            var /= v.size();
            sc.offset[c] = mean;
            if (var <= 0.0) {
                sc.scale[c] = 1.0;
                sc.warnings.push_back("column '" + name + "' has zero variance; scale 1 used");
            } else {
                sc.scale[c] = std::sqrt(var);
            }
        } else {
            auto [mn, mx] = std::minmax_element(v.begin(), v.end());
            sc.offset[c] = *mn;
            if (*mx - *mn <= 0.0) {
                sc.scale[c] = 1.0;
                sc.warnings.push_back("column '" + name + "' has zero range; scale 1 used");
            } else {
                sc.scale[c] = *mx - *mn;
            }
        }
    }
    return sc;
}

void NormScaler::apply_in_place(SeriesDataset& ds) const {
    if (mode == NormMode::None) return;
    if (static_cast<int>(offset.size()) != ds.n() + 1)
        throw std::invalid_argument("NormScaler: fitted for " + std::to_string(offset.size()) +
                                    " columns, dataset has " + std::to_string(ds.n() + 1));
    for (int c = 0; c < ds.n(); ++c)
        for (int r = 0; r < ds.length(); ++r)
            ds.driving.at(c, r) = apply(ds.driving.at(c, r), c);
    for (auto& y : ds.target) y = apply(y, ds.n());
}

SynthKind synth_kind_from_string(const std::string& s) {
    if (s == "linear-gaussian") return SynthKind::LinearGaussian;
    if (s == "stochastic-volatility") return SynthKind::StochasticVolatility;
    if (s == "driven-ar") return SynthKind::DrivenAr;
    throw std::invalid_argument("unknown synthetic kind '" + s + "'");
}

namespace {

SeriesDataset lagged_driver_dataset(const std::vector<double>& y_full,
                                    const std::string& driver_name) {
    // y_full holds y_0..y_L; the dataset pairs x_t = y_{t-1} with y_t.
    const int l = static_cast<int>(y_full.size()) - 1;
    SeriesDataset ds;
    ds.names = {driver_name};
    ds.driving = Tensor(1, l);
    ds.target.resize(l);
    for (int t = 0; t < l; ++t) {
        ds.driving.at(0, t) = y_full[t];
        ds.target[t] = y_full[t + 1];
    }
    return ds;
}

}  // namespace

SeriesDataset synth_generate(SynthKind kind, int length, const SynthParams& params,
                             std::uint64_t seed) {
    if (length < 3) throw std::invalid_argument("synth_generate: length too small");
    if (std::abs(params.a) >= 1.0)
        throw std::invalid_argument("synth_generate: |a| must be < 1 for stationary kinds");
    Rng rng(seed);

    if (kind == SynthKind::LinearGaussian) {
        std::vector<double> y(length + 1);
        double h;
        if (std::isnan(params.h0)) {
            const double pv = params.noise_w * params.noise_w / (1.0 - params.a * params.a);
            h = std::sqrt(pv) * rng.normal();
        } else {
            h = params.h0;
        }
        y[0] = h + params.noise_v * rng.normal();
        for (int t = 1; t <= length; ++t) {
            h = params.a * h + params.noise_w * rng.normal();
            y[t] = h + params.noise_v * rng.normal();
        }
        return lagged_driver_dataset(y, "lag1");
    }

    if (kind == SynthKind::StochasticVolatility) {
        // Latent log-variance AR(1); observation y_t = sv * exp(h_t / 2) * nu_t.
        std::vector<double> y(length + 1);
        double h = std::isnan(params.h0) ? 0.0 : params.h0;
        y[0] = params.noise_v * std::exp(h / 2.0) * rng.normal();
        for (int t = 1; t <= length; ++t) {
            h = params.a * h + params.noise_w * rng.normal();
            y[t] = params.noise_v * std::exp(h / 2.0) * rng.normal();
        }
        return lagged_driver_dataset(y, "lag1");
    }

    // driven-ar: n AR(1) drivers, target = AR term + linear driver mix + noise.
    const int n = params.n_drivers;
    if (n < 1) throw std::invalid_argument("synth_generate: driven-ar needs n_drivers >= 1");
    std::vector<double> rho(n), coef(n), x(n, 0.0);
    for (int j = 0; j < n; ++j) rho[j] = rng.uniform(0.5, 0.95);
    for (int j = 0; j < n; ++j) coef[j] = rng.uniform(-1.0, 1.0);

    SeriesDataset ds;
    for (int j = 0; j < n; ++j) ds.names.push_back("x" + std::to_string(j + 1));
    ds.driving = Tensor(n, length);
    ds.target.resize(length);
    double y_prev = std::isnan(params.h0) ? 0.0 : params.h0;
    for (int t = 0; t < length; ++t) {
        double mix = 0.0;
        for (int j = 0; j < n; ++j) {
            x[j] = rho[j] * x[j] + params.noise_w * rng.normal();
            ds.driving.at(j, t) = x[j];
            mix += coef[j] * x[j];
        }
        const double y = params.a * y_prev + mix + params.noise_v * rng.normal();
        ds.target[t] = y;
        y_prev = y;
    }
    return ds;
}

std::vector<double> simulate_lgssm(const LinearGaussianSsm& ssm, int t, Rng& rng) {
    std::vector<double> y(t);
    double h = ssm.prior_mean + std::sqrt(ssm.prior_var) * rng.normal();
    for (int i = 0; i < t; ++i) {
        y[i] = h + ssm.sv * rng.normal();
        h = ssm.a * h + ssm.sw * rng.normal();
    }
    return y;
}

double kalman_loglik(const LinearGaussianSsm& ssm, const std::vector<double>& observations) {
    if (ssm.sv <= 0.0 || ssm.prior_var <= 0.0 || ssm.sw < 0.0)
        throw std::invalid_argument("kalman_loglik: variances must be positive");
    if (observations.empty()) throw std::invalid_argument("kalman_loglik: no observations");
    const double r = ssm.sv * ssm.sv;
    double mean = ssm.prior_mean;
    double var = ssm.prior_var;
    double ll = 0.0;
    for (double y : observations) {
        const double s = var + r;  // predictive variance of y
        const double resid = y - mean;
        ll += -0.5 * (std::log(2.0 * 3.14159265358979323846 * s) + resid * resid / s);
        const double gain = var / s;
        const double upd_mean = mean + gain * resid;
        const double upd_var = (1.0 - gain) * var;
        mean = ssm.a * upd_mean;
        var = ssm.a * ssm.a * upd_var + ssm.sw * ssm.sw;
    }
    return ll;
}

Metrics compute_metrics(const std::vector<double>& y, const std::vector<double>& y_hat) {
    if (y.size() != y_hat.size() || y.empty())
        throw std::invalid_argument("compute_metrics: inputs must be nonempty and equal length");
    Metrics m;
    double se = 0.0, ae = 0.0, ape = 0.0;
    bool mape_ok = true;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - y_hat[i];
        ae += std::abs(d);
        se += d * d;
        if (y[i] == 0.0)
            mape_ok = false;
        else
            ape += std::abs(d / y[i]);
    }
    const double n = static_cast<double>(y.size());
    m.mae = ae / n;
    m.rmse = std::sqrt(se / n);
    if (mape_ok) m.mape_percent = ape / n * 100.0;
    return m;
}

}  // namespace cpf
