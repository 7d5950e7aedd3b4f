#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "bmlr/matrix.hpp"

namespace bmlr {

/// RGB image batch; pixel values are doubles, [0,1] on ingest. Corruption may
/// push values outside that range; they are clamped only when written as PNG.
struct ImageBatch {
    int count = 0;
    int height = 0;
    int width = 0;
    static constexpr int channels = 3;
    std::vector<double> data;  // [image][channel][row][col]

    ImageBatch() = default;
    ImageBatch(int count_, int height_, int width_);

    double& at(int image, int channel, int row, int col);
    double at(int image, int channel, int row, int col) const;

    /// View of one channel of one image as an H x W matrix.
    RealMatrix channel(int image, int channel) const;
    void set_channel(int image, int channel, const RealMatrix& values);
};

/// Seeded batch of smooth-but-full-rank synthetic RGB images in [0,1]:
/// gradients plus sinusoids plus a little uniform texture.
ImageBatch synthetic_image_batch(int count, int height, int width, uint64_t seed);

/// Invertible linear corruption. A* is I + eps*E1 with rows rescaled to sum
/// to 1, B* is I + eps*E2; E1, E2 have i.i.d. standard normal entries.
struct CorruptionModel {
    double epsilon = 0.0;
    RealMatrix A_star, B_star;  // H x H, W x W
    RealMatrix A_inv, B_inv;    // cached inverses
};

/// Throws ConfigError when the draw is too ill-conditioned to invert
/// (condition estimate >= 1e8); the caller may reseed.
CorruptionModel build_corruption(int height, int width, double epsilon, uint64_t seed);

/// Each channel becomes A_inv * X * B_inv. Values are not re-clamped.
ImageBatch corrupt_batch(const ImageBatch& batch, const CorruptionModel& model);

/// Per-channel corrections learned from an aligned (noisy, clean) batch.
struct CorrectionMatrices {
    std::array<RealMatrix, 3> A_hat;  // H x H
    std::array<RealMatrix, 3> B_hat;  // W x W
};

/// Fits each channel independently: predictors are the noisy channels,
/// responses the clean ones. Throws SingularDesignError (advising a larger
/// training batch) when the stacked design is rank deficient.
CorrectionMatrices fit_correction(const ImageBatch& noisy_train, const ImageBatch& clean_train);

/// Each channel becomes A_hat * X * B_hat.
ImageBatch apply_correction(const ImageBatch& noisy, const CorrectionMatrices& corrections);

/// Summed squared Frobenius distances over the three channels, per image,
/// plus batch mean and population standard deviation.
struct DistanceReport {
    std::vector<double> d_on;  // original vs noisy
    std::vector<double> d_oc;  // original vs corrected
    double mean_on = 0.0, std_on = 0.0;
    double mean_oc = 0.0, std_oc = 0.0;
};

DistanceReport evaluate_distances(const ImageBatch& original, const ImageBatch& noisy,
                                  const ImageBatch& corrected);

/// Corrections in the shared binary layout: meta.json plus A.bin / B.bin of
/// little-endian float64 in channel-major, column-stacked order.
void save_corrections(const CorrectionMatrices& c, const std::filesystem::path& dir);
CorrectionMatrices load_corrections(const std::filesystem::path& dir);

/// All equal-size 8-bit RGB PNGs in a directory (sorted by filename),
/// values scaled to [0,1].
ImageBatch load_png_directory(const std::filesystem::path& dir);

/// Writes one PNG per image, values clamped to [0,1] and quantized to 8 bits.
void write_png_previews(const ImageBatch& batch, const std::filesystem::path& dir,
                        const std::string& prefix);

}  // namespace bmlr
