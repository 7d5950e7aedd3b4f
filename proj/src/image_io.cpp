#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "bmlr/denoise.hpp"

namespace bmlr {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decoded 8-bit RGB rows for one file.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<unsigned char> rgb;  // row-major, 3 bytes per pixel
};

RgbImage read_png_rgb8(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open PNG: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed for " + path.string());
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed for " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize whatever we were given to 8-bit RGB.
    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    RgbImage img;
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.width = static_cast<int>(png_get_image_width(png, info));
    const size_t row_bytes = png_get_rowbytes(png, info);
    img.rgb.resize(static_cast<size_t>(img.height) * row_bytes);
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int r = 0; r < img.height; ++r) rows[static_cast<size_t>(r)] = img.rgb.data() + r * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png_rgb8(const std::filesystem::path& path, int height, int width,
                    const std::vector<unsigned char>& rgb) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open PNG for writing: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed for " + path.string());
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed for " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<size_t>(height));
    for (int r = 0; r < height; ++r) {
        rows[static_cast<size_t>(r)] =
            const_cast<png_bytep>(rgb.data() + static_cast<size_t>(r) * width * 3);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageBatch load_png_directory(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files.push_back(entry.path());
        }
    }
    if (ec) throw IoError("cannot list directory: " + dir.string());
    if (files.empty()) throw IoError("no .png files in " + dir.string());
    std::sort(files.begin(), files.end());

    ImageBatch batch;
    for (size_t idx = 0; idx < files.size(); ++idx) {
        const RgbImage img = read_png_rgb8(files[idx]);
        if (idx == 0) {
            batch = ImageBatch(static_cast<int>(files.size()), img.height, img.width);
        } else if (img.height != batch.height || img.width != batch.width) {
            throw IoError("PNG size mismatch: " + files[idx].string() + " is not " +
                          std::to_string(batch.height) + "x" + std::to_string(batch.width));
        }
        for (int r = 0; r < batch.height; ++r) {
            for (int c = 0; c < batch.width; ++c) {
                const size_t base = (static_cast<size_t>(r) * batch.width + c) * 3;
                for (int ch = 0; ch < 3; ++ch) {
                    batch.at(static_cast<int>(idx), ch, r, c) = img.rgb[base + ch] / 255.0;
                }
            }
        }
    }
    return batch;
}

void write_png_previews(const ImageBatch& batch, const std::filesystem::path& dir,
                        const std::string& prefix) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::vector<unsigned char> rgb(static_cast<size_t>(batch.height) * batch.width * 3);
    for (int img = 0; img < batch.count; ++img) {
        for (int r = 0; r < batch.height; ++r) {
            for (int c = 0; c < batch.width; ++c) {
                const size_t base = (static_cast<size_t>(r) * batch.width + c) * 3;
                for (int ch = 0; ch < 3; ++ch) {
                    const double v = std::clamp(batch.at(img, ch, r, c), 0.0, 1.0);
                    rgb[base + ch] = static_cast<unsigned char>(std::lround(v * 255.0));
                }
            }
        }
        char name[64];
        std::snprintf(name, sizeof(name), "%s%04d.png", prefix.c_str(), img);
        write_png_rgb8(dir / name, batch.height, batch.width, rgb);
    }
}

}  // namespace bmlr
