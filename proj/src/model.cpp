#include "bmlr/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "bmlr/rng.hpp"
#include "json.hpp"

namespace bmlr {

std::string to_string(DesignKind kind) {
    switch (kind) {
        case DesignKind::Canonical: return "canonical";
        case DesignKind::UniformIID: return "uniform";
        case DesignKind::OrthogonalScaled: return "orthogonal";
    }
    return "unknown";
}

DesignKind design_from_string(const std::string& name) {
    if (name == "canonical") return DesignKind::Canonical;
    if (name == "uniform") return DesignKind::UniformIID;
    if (name == "orthogonal") return DesignKind::OrthogonalScaled;
    throw ConfigError("unknown design kind: " + name);
}

RealMatrix generate_A_star(int n, int m, uint64_t seed) {
    if (n < 1 || m < 1) throw ConfigError("generate_A_star: dims must be >= 1");
    RandomStream rs(seed);
    RealMatrix out(n, m);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        do {
            sum = 0.0;
            for (int k = 0; k < m; ++k) {
                out(i, k) = rs.uniform();
                sum += out(i, k);
            }
        } while (sum < 1e-300);
        for (int k = 0; k < m; ++k) out(i, k) /= sum;
    }
    return out;
}

RealMatrix generate_B_star(int q, int p, uint64_t seed) {
    if (q < 1 || p < 1) throw ConfigError("generate_B_star: dims must be >= 1");
    RandomStream rs(seed);
    RealMatrix out(q, p);
    for (double& v : out.data()) v = rs.uniform();
    return out;
}

RealMatrix sample_matrix_normal(int n, int p, double sigma_r, double sigma_c, uint64_t seed) {
    if (n < 1 || p < 1) throw ConfigError("sample_matrix_normal: dims must be >= 1");
    if (!(sigma_r > 0.0) || !(sigma_c > 0.0)) {
        throw ConfigError("sample_matrix_normal: scales must be positive");
    }
    const double scale = sigma_r * sigma_c;
    RandomStream rs(seed);
    RealMatrix out(n, p);
    for (double& v : out.data()) v = scale * rs.gaussian();
    return out;
}

namespace {

// Modified Gram-Schmidt with one reorthogonalization pass; columns of a
// T x d column-major buffer become orthonormal.
void orthonormalize_columns(std::vector<double>& a, long t, int d) {
    for (int j = 0; j < d; ++j) {
        double* col = &a[static_cast<size_t>(j) * t];
        for (int pass = 0; pass < 2; ++pass) {
            for (int k = 0; k < j; ++k) {
                const double* prev = &a[static_cast<size_t>(k) * t];
                double dot = 0.0;
                for (long r = 0; r < t; ++r) dot += prev[r] * col[r];
                for (long r = 0; r < t; ++r) col[r] -= dot * prev[r];
            }
        }
        double norm = 0.0;
        for (long r = 0; r < t; ++r) norm += col[r] * col[r];
        norm = std::sqrt(norm);
        if (norm < 1e-300) throw ConfigError("orthonormalization hit a zero column");
        for (long r = 0; r < t; ++r) col[r] /= norm;
    }
}

}  // namespace

std::vector<RealMatrix> generate_design(DesignKind kind, int m, int q, long T, uint64_t seed) {
    if (m < 1 || q < 1 || T < 1) throw ConfigError("generate_design: dims and T must be >= 1");
    const long mq = static_cast<long>(m) * q;
    std::vector<RealMatrix> out;
    out.reserve(static_cast<size_t>(T));

    switch (kind) {
        case DesignKind::Canonical: {
            if (T != mq) {
                throw ConfigError("canonical design requires T = m*q (" + std::to_string(mq) +
                                  "), got T = " + std::to_string(T));
            }
            for (long t = 0; t < T; ++t) {
                const int k = static_cast<int>(t % m);
                const int l = static_cast<int>(t / m);
                RealMatrix e(m, q);
                e(k, l) = 1.0;
                out.push_back(std::move(e));
            }
            return out;
        }
        case DesignKind::UniformIID: {
            RandomStream rs(seed);
            for (long t = 0; t < T; ++t) {
                RealMatrix x(m, q);
                for (double& v : x.data()) v = rs.uniform();
                out.push_back(std::move(x));
            }
            return out;
        }
        case DesignKind::OrthogonalScaled: {
            if (T < mq) {
                throw ConfigError("orthogonal design requires T >= m*q (" + std::to_string(mq) +
                                  "), got T = " + std::to_string(T));
            }
            RandomStream rs(seed);
            std::vector<double> a(static_cast<size_t>(T) * mq);
            for (double& v : a) v = rs.gaussian();
            orthonormalize_columns(a, T, static_cast<int>(mq));
            const double scale = std::sqrt(static_cast<double>(T));
            for (long t = 0; t < T; ++t) {
                std::vector<double> row(static_cast<size_t>(mq));
                for (long c = 0; c < mq; ++c) row[c] = scale * a[static_cast<size_t>(c) * T + t];
                out.push_back(unvectorize(row, m, q));
            }
            return out;
        }
    }
    throw ConfigError("generate_design: unknown kind");
}

RealMatrix forward_map(const ModelParameters& params, const RealMatrix& x) {
    if (x.rows() != params.m() || x.cols() != params.q()) {
        throw DimensionError("forward_map: predictor dims do not match parameters");
    }
    return params.A_star * x * params.B_star;
}

Dataset generate_dataset(const ModelParameters& params, DesignKind kind, long T, uint64_t seed) {
    if (params.sigma_r < 0.0 || params.sigma_c < 0.0) {
        throw ConfigError("noise scales must be nonnegative");
    }
    Dataset ds;
    ds.dims = DatasetDims{params.n(), params.m(), params.p(), params.q(), T};
    ds.sigma_r = params.sigma_r;
    ds.sigma_c = params.sigma_c;
    ds.design = kind;
    ds.seed = seed;
    ds.predictors = generate_design(kind, params.m(), params.q(), T, derive_seed(seed, kStreamDesign));
    ds.responses.reserve(static_cast<size_t>(T));
    const bool noiseless = params.sigma() == 0.0;
    for (long t = 0; t < T; ++t) {
        RealMatrix y = forward_map(params, ds.predictors[static_cast<size_t>(t)]);
        if (!noiseless) {
            const RealMatrix e = sample_matrix_normal(params.n(), params.p(), params.sigma_r,
                                                      params.sigma_c,
                                                      derive_seed(seed, kStreamNoise, static_cast<uint64_t>(t)));
            y = y + e;
        }
        ds.responses.push_back(std::move(y));
    }
    return ds;
}

namespace {

void write_doubles_le(std::ofstream& out, const std::vector<double>& values, const std::string& path) {
    for (double v : values) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        unsigned char bytes[8];
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<double> read_doubles_le(std::ifstream& in, size_t count, const std::string& path) {
    std::vector<double> values(count);
    for (size_t idx = 0; idx < count; ++idx) {
        unsigned char bytes[8];
        in.read(reinterpret_cast<char*>(bytes), 8);
        if (!in) throw IoError("read failed or file truncated: " + path);
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(bytes[i]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        values[idx] = v;
    }
    return values;
}

void save_matrix_sequence(const std::vector<RealMatrix>& ms, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + file.string());
    for (const RealMatrix& m : ms) write_doubles_le(out, vectorize(m), file.string());
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    nlohmann::json meta{{"n", ds.dims.n},         {"m", ds.dims.m},
                        {"p", ds.dims.p},         {"q", ds.dims.q},
                        {"T", ds.dims.T},         {"sigma_r", ds.sigma_r},
                        {"sigma_c", ds.sigma_c},  {"design", to_string(ds.design)},
                        {"seed", ds.seed}};
    std::ofstream mf(dir / "meta.json");
    if (!mf) throw IoError("cannot open for writing: " + (dir / "meta.json").string());
    mf << meta.dump(2) << "\n";
    save_matrix_sequence(ds.predictors, dir / "X.bin");
    save_matrix_sequence(ds.responses, dir / "Y.bin");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "meta.json");
    if (!mf) throw IoError("cannot open: " + (dir / "meta.json").string());
    nlohmann::json meta;
    try {
        mf >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad meta.json in " + dir.string() + ": " + e.what());
    }
    Dataset ds;
    ds.dims = DatasetDims{meta.at("n").get<int>(), meta.at("m").get<int>(), meta.at("p").get<int>(),
                          meta.at("q").get<int>(), meta.at("T").get<long>()};
    ds.sigma_r = meta.at("sigma_r").get<double>();
    ds.sigma_c = meta.at("sigma_c").get<double>();
    ds.design = design_from_string(meta.at("design").get<std::string>());
    ds.seed = meta.at("seed").get<uint64_t>();

    const size_t x_len = static_cast<size_t>(ds.dims.m) * ds.dims.q;
    const size_t y_len = static_cast<size_t>(ds.dims.n) * ds.dims.p;
    std::ifstream xf(dir / "X.bin", std::ios::binary);
    if (!xf) throw IoError("cannot open: " + (dir / "X.bin").string());
    std::ifstream yf(dir / "Y.bin", std::ios::binary);
    if (!yf) throw IoError("cannot open: " + (dir / "Y.bin").string());
    for (long t = 0; t < ds.dims.T; ++t) {
        ds.predictors.push_back(
            unvectorize(read_doubles_le(xf, x_len, "X.bin"), ds.dims.m, ds.dims.q));
        ds.responses.push_back(
            unvectorize(read_doubles_le(yf, y_len, "Y.bin"), ds.dims.n, ds.dims.p));
    }
    return ds;
}

}  // namespace bmlr
