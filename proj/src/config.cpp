#include "cpf/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cpf {

ModelMode model_mode_from_string(const std::string& s) {
    if (s == "rnn") return ModelMode::Rnn;
    if (s == "cpf-rnn") return ModelMode::CpfRnn;
    if (s == "darnn") return ModelMode::Darnn;
    if (s == "cpf-enc") return ModelMode::CpfEnc;
    if (s == "cpf-dec") return ModelMode::CpfDec;
    if (s == "cpf-darnn") return ModelMode::CpfDarnn;
    throw std::invalid_argument("unknown model mode '" + s + "'");
}

std::string to_string(ModelMode mode) {
    switch (mode) {
        case ModelMode::Rnn: return "rnn";
        case ModelMode::CpfRnn: return "cpf-rnn";
        case ModelMode::Darnn: return "darnn";
        case ModelMode::CpfEnc: return "cpf-enc";
        case ModelMode::CpfDec: return "cpf-dec";
        default: return "cpf-darnn";
    }
}

ResamplerKind resampler_from_string(const std::string& s) {
    if (s == "multinomial") return ResamplerKind::Multinomial;
    if (s == "continuous") return ResamplerKind::Continuous;
    throw std::invalid_argument("unknown resampler '" + s + "'");
}

std::string to_string(ResamplerKind kind) {
    return kind == ResamplerKind::Multinomial ? "multinomial" : "continuous";
}

void RunConfig::validate() const {
    if (k < 1) throw std::invalid_argument("config: k must be >= 1");
    if (t < 2) throw std::invalid_argument("config: t must be >= 2");
    if (m < 1 || p < 1) throw std::invalid_argument("config: m and p must be >= 1");
    if (n < 0) throw std::invalid_argument("config: n must be >= 0");
    if (kappa < 0.0) throw std::invalid_argument("config: kappa must be >= 0");
    if (lr < 0.0) throw std::invalid_argument("config: lr must be >= 0");
    if (batch < 1) throw std::invalid_argument("config: batch must be >= 1");
    if (epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
    if (!(split > 0.0 && split < 1.0)) throw std::invalid_argument("config: split must lie in (0,1)");
    if (target.empty()) throw std::invalid_argument("config: target must be nonempty");
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out.precision(17);
    out << "model=" << to_string(model) << "\n"
        << "resampler=" << to_string(resampler) << "\n"
        << "normalization=" << to_string(normalization) << "\n"
        << "k=" << k << "\n"
        << "t=" << t << "\n"
        << "m=" << m << "\n"
        << "p=" << p << "\n"
        << "n=" << n << "\n"
        << "kappa=" << kappa << "\n"
        << "lr=" << lr << "\n"
        << "batch=" << batch << "\n"
        << "epochs=" << epochs << "\n"
        << "seed=" << seed << "\n"
        << "split=" << split << "\n"
        << "target=" << target << "\n";
    return out.str();
}

namespace {

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(val, &pos);
        if (pos == val.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("config: key '" + key + "' needs an integer, got '" + val + "'");
}

double to_double(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        double v = std::stod(val, &pos);
        if (pos == val.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("config: key '" + key + "' needs a number, got '" + val + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(val, &pos);
        if (pos == val.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("config: key '" + key + "' needs an unsigned integer, got '" +
                                val + "'");
}

}  // namespace

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = strip(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key=value: '" + s + "'");
        const std::string key = strip(s.substr(0, eq));
        const std::string val = strip(s.substr(eq + 1));
        if (key == "model") cfg.model = model_mode_from_string(val);
        else if (key == "resampler") cfg.resampler = resampler_from_string(val);
        else if (key == "normalization") cfg.normalization = norm_mode_from_string(val);
        else if (key == "k") cfg.k = to_int(key, val);
        else if (key == "t") cfg.t = to_int(key, val);
        else if (key == "m") cfg.m = to_int(key, val);
        else if (key == "p") cfg.p = to_int(key, val);
        else if (key == "n") cfg.n = to_int(key, val);
        else if (key == "kappa") cfg.kappa = to_double(key, val);
        else if (key == "lr") cfg.lr = to_double(key, val);
        else if (key == "batch") cfg.batch = to_int(key, val);
        else if (key == "epochs") cfg.epochs = to_int(key, val);
        else if (key == "seed") cfg.seed = to_u64(key, val);
        else if (key == "split") cfg.split = to_double(key, val);
        else if (key == "target") cfg.target = val;
        else
            throw std::invalid_argument("config: unknown key '" + key + "' on line " +
                                        std::to_string(line_no));
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

}  // namespace cpf
