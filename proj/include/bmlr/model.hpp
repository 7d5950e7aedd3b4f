#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bmlr/matrix.hpp"

namespace bmlr {

enum class DesignKind {
    Canonical,         // the mq canonical basis matrices, T = mq
    UniformIID,        // i.i.d. uniform [0,1) entries
    OrthogonalScaled,  // stacked design has orthonormal columns scaled by sqrt(T)
};

std::string to_string(DesignKind kind);
DesignKind design_from_string(const std::string& name);

/// Ground truth of the model Y_t = A* X_t B* + E_t. Rows of A* are
/// nonnegative and sum to 1; noise scales may be 0 (noiseless).
struct ModelParameters {
    RealMatrix A_star;  // n x m
    RealMatrix B_star;  // q x p
    double sigma_r = 1.0;
    double sigma_c = 1.0;

    int n() const { return A_star.rows(); }
    int m() const { return A_star.cols(); }
    int q() const { return B_star.rows(); }
    int p() const { return B_star.cols(); }
    double sigma() const { return sigma_r * sigma_c; }
};

struct DatasetDims {
    int n = 0, m = 0, p = 0, q = 0;
    long T = 0;
};

/// Aligned predictor/response sequences plus the provenance needed to
/// reproduce or serialize the draw.
struct Dataset {
    DatasetDims dims;
    std::vector<RealMatrix> predictors;  // each m x q
    std::vector<RealMatrix> responses;   // each n x p
    double sigma_r = 0.0;
    double sigma_c = 0.0;
    DesignKind design = DesignKind::UniformIID;
    uint64_t seed = 0;
};

/// Uniform [0,1) entries, each row divided by its sum (redrawn if the sum
/// underflows). Rows of the result sum to 1 within 1e-12.
RealMatrix generate_A_star(int n, int m, uint64_t seed);

/// Uniform [0,1) entries, no normalization.
RealMatrix generate_B_star(int q, int p, uint64_t seed);

/// n x p matrix with i.i.d. N(0, (sigma_r*sigma_c)^2) entries; the diagonal
/// separable-covariance case. Scales must be positive.
RealMatrix sample_matrix_normal(int n, int p, double sigma_r, double sigma_c, uint64_t seed);

/// Canonical ordering: predictor t = k + l*m carries the single 1 at (k, l).
std::vector<RealMatrix> generate_design(DesignKind kind, int m, int q, long T, uint64_t seed);

/// Exact triple product A* X B*.
RealMatrix forward_map(const ModelParameters& params, const RealMatrix& x);

/// Responses are forward maps plus a fresh noise draw per t (none if
/// sigma_r*sigma_c == 0). Identical (params, kind, T, seed) give bit-identical
/// datasets; per-t noise seeds are derive_seed(seed, kStreamNoise, t).
Dataset generate_dataset(const ModelParameters& params, DesignKind kind, long T, uint64_t seed);

/// Directory layout: meta.json plus X.bin / Y.bin, little-endian float64 in
/// t-major, column-stacked order.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace bmlr
