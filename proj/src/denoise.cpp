#include "bmlr/denoise.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "bmlr/estimators.hpp"
#include "bmlr/linalg.hpp"
#include "bmlr/rng.hpp"
#include "json.hpp"

namespace bmlr {

ImageBatch::ImageBatch(int count_, int height_, int width_)
    : count(count_), height(height_), width(width_) {
    if (count_ < 0 || height_ < 1 || width_ < 1) throw ConfigError("bad image batch dims");
    data.assign(static_cast<size_t>(count_) * channels * height_ * width_, 0.0);
}

double& ImageBatch::at(int image, int channel, int row, int col) {
    return data[((static_cast<size_t>(image) * channels + channel) * height + row) * width + col];
}

double ImageBatch::at(int image, int channel, int row, int col) const {
    return data[((static_cast<size_t>(image) * channels + channel) * height + row) * width + col];
}

RealMatrix ImageBatch::channel(int image, int channel) const {
    RealMatrix out(height, width);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) out(r, c) = at(image, channel, r, c);
    }
    return out;
}

void ImageBatch::set_channel(int image, int channel, const RealMatrix& values) {
    if (values.rows() != height || values.cols() != width) {
        throw DimensionError("set_channel: matrix dims do not match the batch");
    }
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) at(image, channel, r, c) = values(r, c);
    }
}

ImageBatch synthetic_image_batch(int count, int height, int width, uint64_t seed) {
    if (count < 1) throw ConfigError("synthetic batch needs count >= 1");
    ImageBatch batch(count, height, width);
    const double pi = std::numbers::pi;
    for (int img = 0; img < count; ++img) {
        RandomStream rs(derive_seed(seed, kStreamImage, static_cast<uint64_t>(img)));
        for (int ch = 0; ch < ImageBatch::channels; ++ch) {
            const double gx = rs.uniform() - 0.5;
            const double gy = rs.uniform() - 0.5;
            const double fx = 1.0 + 3.0 * rs.uniform();
            const double fy = 1.0 + 3.0 * rs.uniform();
            const double phase = 2.0 * pi * rs.uniform();
            const double base = 0.25 + 0.5 * rs.uniform();
            for (int r = 0; r < height; ++r) {
                for (int c = 0; c < width; ++c) {
                    const double u = (r + 0.5) / height;
                    const double v = (c + 0.5) / width;
                    double val = base + 0.4 * (gx * (u - 0.5) + gy * (v - 0.5)) +
                                 0.15 * std::sin(2.0 * pi * (fx * u + fy * v) + phase) +
                                 0.05 * (rs.uniform() - 0.5);
                    batch.at(img, ch, r, c) = std::clamp(val, 0.0, 1.0);
                }
            }
        }
    }
    return batch;
}

namespace {

RealMatrix invert_square(const RealMatrix& m, const char* what) {
    QrSolver solver(m);
    if (solver.condition_estimate() >= 1e8) {
        throw ConfigError(std::string(what) + " is too ill-conditioned to invert (estimate " +
                          std::to_string(solver.condition_estimate()) + "); reseed");
    }
    return solver.solve(RealMatrix::identity(m.rows()));
}

}  // namespace

CorruptionModel build_corruption(int height, int width, double epsilon, uint64_t seed) {
    if (height < 1 || width < 1) throw ConfigError("corruption dims must be >= 1");
    if (epsilon < 0.0) throw ConfigError("epsilon must be nonnegative");
    CorruptionModel model;
    model.epsilon = epsilon;
    if (epsilon == 0.0) {
        model.A_star = RealMatrix::identity(height);
        model.B_star = RealMatrix::identity(width);
        model.A_inv = model.A_star;
        model.B_inv = model.B_star;
        return model;
    }
    RandomStream rs(seed);
    RealMatrix a = RealMatrix::identity(height);
    for (double& v : a.data()) v += epsilon * rs.gaussian();
    for (int r = 0; r < height; ++r) {
        double sum = 0.0;
        for (int c = 0; c < height; ++c) sum += a(r, c);
        if (std::fabs(sum) < 1e-8) {
            throw ConfigError("corruption row sum degenerate; reseed");
        }
        for (int c = 0; c < height; ++c) a(r, c) /= sum;
    }
    RealMatrix b = RealMatrix::identity(width);
    for (double& v : b.data()) v += epsilon * rs.gaussian();

    model.A_star = std::move(a);
    model.B_star = std::move(b);
    model.A_inv = invert_square(model.A_star, "corruption A");
    model.B_inv = invert_square(model.B_star, "corruption B");
    return model;
}

ImageBatch corrupt_batch(const ImageBatch& batch, const CorruptionModel& model) {
    if (model.A_star.rows() != batch.height || model.B_star.rows() != batch.width) {
        throw DimensionError("corruption dims do not match the batch");
    }
    ImageBatch out(batch.count, batch.height, batch.width);
    for (int img = 0; img < batch.count; ++img) {
        for (int ch = 0; ch < ImageBatch::channels; ++ch) {
            out.set_channel(img, ch, model.A_inv * batch.channel(img, ch) * model.B_inv);
        }
    }
    return out;
}

CorrectionMatrices fit_correction(const ImageBatch& noisy_train, const ImageBatch& clean_train) {
    if (noisy_train.count != clean_train.count || noisy_train.height != clean_train.height ||
        noisy_train.width != clean_train.width) {
        throw DimensionError("fit_correction: noisy and clean batches are not aligned");
    }
    const int h = noisy_train.height;
    const int w = noisy_train.width;
    CorrectionMatrices out;
    for (int ch = 0; ch < ImageBatch::channels; ++ch) {
        Dataset ds;
        ds.dims = DatasetDims{h, h, w, w, noisy_train.count};
        ds.predictors.reserve(static_cast<size_t>(noisy_train.count));
        ds.responses.reserve(static_cast<size_t>(noisy_train.count));
        for (int img = 0; img < noisy_train.count; ++img) {
            ds.predictors.push_back(noisy_train.channel(img, ch));
            ds.responses.push_back(clean_train.channel(img, ch));
        }
        CHat c;
        try {
            c = compute_c_hat(ds);
        } catch (const SingularDesignError& e) {
            throw SingularDesignError(std::string(e.what()) +
                                          "; use a larger or more diverse training batch",
                                      e.condition_estimate());
        } catch (const ConfigError&) {
            throw SingularDesignError(
                "training batch smaller than H*W; use a larger training batch", 0.0);
        }
        out.B_hat[static_cast<size_t>(ch)] = estimate_b_hat(c);
        out.A_hat[static_cast<size_t>(ch)] = estimate_a_hat(estimate_a_tilde(c).values).values;
    }
    return out;
}

ImageBatch apply_correction(const ImageBatch& noisy, const CorrectionMatrices& corrections) {
    if (corrections.A_hat[0].rows() != noisy.height || corrections.B_hat[0].rows() != noisy.width) {
        throw DimensionError("correction dims do not match the batch");
    }
    ImageBatch out(noisy.count, noisy.height, noisy.width);
    for (int img = 0; img < noisy.count; ++img) {
        for (int ch = 0; ch < ImageBatch::channels; ++ch) {
            out.set_channel(img, ch,
                            corrections.A_hat[static_cast<size_t>(ch)] * noisy.channel(img, ch) *
                                corrections.B_hat[static_cast<size_t>(ch)]);
        }
    }
    return out;
}

DistanceReport evaluate_distances(const ImageBatch& original, const ImageBatch& noisy,
                                  const ImageBatch& corrected) {
    if (original.count != noisy.count || original.count != corrected.count ||
        original.height != noisy.height || original.height != corrected.height ||
        original.width != noisy.width || original.width != corrected.width) {
        throw DimensionError("evaluate_distances: batches are not aligned");
    }
    DistanceReport rep;
    rep.d_on.resize(static_cast<size_t>(original.count));
    rep.d_oc.resize(static_cast<size_t>(original.count));
    for (int img = 0; img < original.count; ++img) {
        double on = 0.0, oc = 0.0;
        for (int ch = 0; ch < ImageBatch::channels; ++ch) {
            const RealMatrix o = original.channel(img, ch);
            on += frobenius_norm_sq(o - noisy.channel(img, ch));
            oc += frobenius_norm_sq(o - corrected.channel(img, ch));
        }
        rep.d_on[static_cast<size_t>(img)] = on;
        rep.d_oc[static_cast<size_t>(img)] = oc;
    }
    auto moments = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        sd = std::sqrt(var);
    };
    moments(rep.d_on, rep.mean_on, rep.std_on);
    moments(rep.d_oc, rep.mean_oc, rep.std_oc);
    return rep;
}

namespace {

void write_matrices_le(const std::array<RealMatrix, 3>& ms, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + file.string());
    for (const RealMatrix& m : ms) {
        for (double v : vectorize(m)) {
            uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            unsigned char bytes[8];
            for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
            out.write(reinterpret_cast<const char*>(bytes), 8);
        }
    }
    if (!out) throw IoError("write failed: " + file.string());
}

std::array<RealMatrix, 3> read_matrices_le(const std::filesystem::path& file, int dim) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open: " + file.string());
    std::array<RealMatrix, 3> out;
    const size_t len = static_cast<size_t>(dim) * dim;
    for (int ch = 0; ch < 3; ++ch) {
        std::vector<double> values(len);
        for (size_t idx = 0; idx < len; ++idx) {
            unsigned char bytes[8];
            in.read(reinterpret_cast<char*>(bytes), 8);
            if (!in) throw IoError("read failed or file truncated: " + file.string());
            uint64_t bits = 0;
            for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(bytes[i]) << (8 * i);
            double v;
            std::memcpy(&v, &bits, sizeof(v));
            values[idx] = v;
        }
        out[static_cast<size_t>(ch)] = unvectorize(values, dim, dim);
    }
    return out;
}

}  // namespace

void save_corrections(const CorrectionMatrices& c, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    nlohmann::json meta{{"H", c.A_hat[0].rows()}, {"W", c.B_hat[0].rows()}, {"channels", 3}};
    std::ofstream mf(dir / "meta.json");
    if (!mf) throw IoError("cannot open for writing: " + (dir / "meta.json").string());
    mf << meta.dump(2) << "\n";
    write_matrices_le(c.A_hat, dir / "A.bin");
    write_matrices_le(c.B_hat, dir / "B.bin");
}

CorrectionMatrices load_corrections(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "meta.json");
    if (!mf) throw IoError("cannot open: " + (dir / "meta.json").string());
    nlohmann::json meta;
    try {
        mf >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad meta.json in " + dir.string() + ": " + e.what());
    }
    CorrectionMatrices c;
    c.A_hat = read_matrices_le(dir / "A.bin", meta.at("H").get<int>());
    c.B_hat = read_matrices_le(dir / "B.bin", meta.at("W").get<int>());
    return c;
}

}  // namespace bmlr
