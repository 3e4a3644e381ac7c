#include "cpf/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace cpf {

namespace {

constexpr char kMagic[8] = {'C', 'P', 'F', 'C', 'K', 'P', 'T', '\0'};

struct Writer {
    std::ofstream out;

    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
    }
    void bytes(const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64s(const std::vector<double>& v) { bytes(v.data(), v.size() * 8); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void tensor(const std::string& name, const Tensor& t) {
        str(name);
        u32(2);  // rank
        u32(static_cast<std::uint32_t>(t.rows));
        u32(static_cast<std::uint32_t>(t.cols));
        f64s(t.v);
    }
};

struct Reader {
    std::ifstream in;
    std::size_t file_size = 0;
    std::size_t offset = 0;

    explicit Reader(const std::string& path) : in(path, std::ios::binary) {
        if (!in) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
        in.seekg(0, std::ios::end);
        file_size = static_cast<std::size_t>(in.tellg());
        in.seekg(0, std::ios::beg);
    }
    void bytes(void* p, std::size_t n) {
        if (offset + n > file_size)
            throw std::runtime_error("load_checkpoint: truncated file, expected " +
                                     std::to_string(offset + n) + " bytes but file has " +
                                     std::to_string(file_size));
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        offset += n;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    std::string str() {
        std::string s(u32(), '\0');
        bytes(s.data(), s.size());
        return s;
    }
    Tensor tensor() {
        const std::uint32_t rank = u32();
        if (rank != 2)
            throw std::runtime_error("load_checkpoint: unsupported tensor rank " +
                                     std::to_string(rank));
        const int r = static_cast<int>(u32());
        const int c = static_cast<int>(u32());
        Tensor t(r, c);
        bytes(t.v.data(), t.v.size() * 8);
        return t;
    }
};

}  // namespace

void save_checkpoint(const ForecastModel& model, const RunConfig& cfg, const NormScaler& scaler,
                     const std::string& path) {
    if (cfg.n < 1)
        throw std::invalid_argument("save_checkpoint: config must record the driver count n");
    Writer w(path);
    w.bytes(kMagic, 8);
    w.u32(kCheckpointVersion);
    w.str(cfg.to_text());
    w.u64(cfg.seed);

    ForecastModel& m = const_cast<ForecastModel&>(model);
    auto params = m.parameters();
    w.u32(static_cast<std::uint32_t>(params.size() + 3));
    for (auto& [name, t] : params) w.tensor(name, *t);
    w.tensor("__scaler.mode", Tensor::scalar(static_cast<double>(scaler.mode == NormMode::None
                                                                     ? 0
                                                                     : scaler.mode == NormMode::ZScore
                                                                           ? 1
                                                                           : 2)));
    w.tensor("__scaler.offset", Tensor::colvec(scaler.offset.empty()
                                                   ? std::vector<double>{0.0}
                                                   : scaler.offset));
    w.tensor("__scaler.scale", Tensor::colvec(scaler.scale.empty()
                                                  ? std::vector<double>{1.0}
                                                  : scaler.scale));
    w.out.flush();
    if (!w.out) throw std::runtime_error("save_checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("load_checkpoint: '" + path + "' is not a checkpoint (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("load_checkpoint: version " + std::to_string(version) +
                                 " does not match supported version " +
                                 std::to_string(kCheckpointVersion));

    Checkpoint ck;
    ck.config = RunConfig::from_text(r.str());
    ck.seed = r.u64();
    if (ck.config.n < 1)
        throw std::runtime_error("load_checkpoint: config lacks the driver count n");

    std::map<std::string, Tensor> tensors;
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.str();
        tensors[name] = r.tensor();
    }

    ck.model = ForecastModel::create(ck.config, ck.config.n);
    for (auto& [name, t] : ck.model.parameters()) {
        auto it = tensors.find(name);
        if (it == tensors.end())
            throw std::runtime_error("load_checkpoint: missing tensor '" + name + "'");
        if (it->second.rows != t->rows || it->second.cols != t->cols)
            throw std::runtime_error("load_checkpoint: tensor '" + name + "' has shape " +
                                     it->second.shape_str() + ", expected " + t->shape_str());
        *t = it->second;
        tensors.erase(it);
    }

    auto take = [&](const std::string& name) {
        auto it = tensors.find(name);
        if (it == tensors.end())
            throw std::runtime_error("load_checkpoint: missing tensor '" + name + "'");
        Tensor t = std::move(it->second);
        tensors.erase(it);
        return t;
    };
    const int mode = static_cast<int>(take("__scaler.mode").item());
    ck.scaler.mode = mode == 0 ? NormMode::None : mode == 1 ? NormMode::ZScore : NormMode::MinMax;
    ck.scaler.offset = take("__scaler.offset").v;
    ck.scaler.scale = take("__scaler.scale").v;
    if (!tensors.empty())
        throw std::runtime_error("load_checkpoint: unexpected tensor '" +
                                 tensors.begin()->first + "'");
    return ck;
}

}  // namespace cpf
