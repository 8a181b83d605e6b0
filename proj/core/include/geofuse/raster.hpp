#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace geofuse {

/// Band-major multispectral image: data[(b * height + i) * width + j].
class RasterStack {
public:
    RasterStack() = default;
    RasterStack(std::size_t bands, std::size_t height, std::size_t width, double fill = 0.0);
    RasterStack(std::size_t bands, std::size_t height, std::size_t width, std::vector<double> data,
                std::vector<std::string> band_names = {});

    std::size_t bands() const noexcept { return bands_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t pixels() const noexcept { return height_ * width_; }

    double& at(std::size_t b, std::size_t i, std::size_t j) { return data_[(b * height_ + i) * width_ + j]; }
    double at(std::size_t b, std::size_t i, std::size_t j) const {
        return data_[(b * height_ + i) * width_ + j];
    }

    std::span<double> band(std::size_t b);
    std::span<const double> band(std::size_t b) const;
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    const std::vector<std::string>& band_names() const noexcept { return names_; }
    const std::string& band_name(std::size_t b) const { return names_.at(b); }
    void set_band_name(std::size_t b, std::string name) { names_.at(b) = std::move(name); }

    /// (min, max) of one band.
    std::pair<double, double> band_range(std::size_t b) const;
    bool all_finite() const noexcept;
    bool same_geometry(const RasterStack& other) const noexcept;

    friend bool operator==(const RasterStack&, const RasterStack&) = default;

private:
    std::size_t bands_ = 0;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
    std::vector<std::string> names_;
};

/// Single-band class map.
struct LabelImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint16_t> labels;

    LabelImage() = default;
    LabelImage(std::size_t h, std::size_t w, std::uint16_t fill = 0)
        : height(h), width(w), labels(h * w, fill) {}

    std::uint16_t& at(std::size_t i, std::size_t j) { return labels[i * width + j]; }
    std::uint16_t at(std::size_t i, std::size_t j) const { return labels[i * width + j]; }
    bool same_shape(const LabelImage& o) const { return height == o.height && width == o.width; }

    friend bool operator==(const LabelImage&, const LabelImage&) = default;
};

// ---------------------------------------------------------------------------
// Enhancement

/// Quantizes the band into `levels` equal-width bins over its value range,
/// remaps bin v to round((cdf(v) - cdf_min) / (N - cdf_min) * (levels - 1)),
/// and rescales back to the original range. A band with one distinct value
/// is returned unchanged.
std::vector<double> histogram_equalize(std::span<const double> band, std::size_t levels);

/// (v - min) / (max - min); a constant band maps to zeros.
std::vector<double> contrast_stretch(std::span<const double> band);

RasterStack equalize_stack(const RasterStack& stack, std::size_t levels);
RasterStack stretch_stack(const RasterStack& stack);

// ---------------------------------------------------------------------------
// PCA

class DimensionalityCapExceeded : public std::invalid_argument {
public:
    DimensionalityCapExceeded(std::size_t requested, std::size_t cap);
    std::size_t requested;
    std::size_t cap;
};

struct PcaModel {
    std::vector<double> mean;                     // [bands]
    std::vector<std::vector<double>> components;  // [retained][bands], orthonormal rows
    std::vector<double> eigenvalues;              // retained, descending
    std::vector<double> explained_ratio;          // retained, descending

    std::size_t bands() const { return mean.size(); }
    std::size_t retained() const { return components.size(); }
};

struct SymmetricEigen {
    std::vector<double> values;                // descending
    std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

/// Cyclic Jacobi rotations on a symmetric n x n row-major matrix.
SymmetricEigen jacobi_eigen(std::vector<double> matrix, std::size_t n, double tolerance = 1e-14,
                            std::size_t max_sweeps = 100);

/// Population covariance of pixel band-vectors, [bands x bands] row-major.
std::vector<double> band_covariance(const RasterStack& stack, std::vector<double>* mean = nullptr);

/// Eigen-decomposition of the band covariance, keeping the `retain` largest
/// components. Each component's largest-magnitude entry is positive.
/// Throws std::invalid_argument for retain = 0 or retain > bands, and
/// DimensionalityCapExceeded when `max_dimensions` is set and exceeded.
PcaModel pca_fit(const RasterStack& stack, std::size_t retain,
                 std::optional<std::size_t> max_dimensions = std::nullopt);
RasterStack pca_transform(const RasterStack& stack, const PcaModel& model);
RasterStack pca_inverse(const RasterStack& scores, const PcaModel& model);
/// Mean squared difference between the stack and its reconstruction.
double pca_reconstruction_error(const RasterStack& stack, const PcaModel& model);

// ---------------------------------------------------------------------------
// Fusion

/// Per-pixel, per-band convex combination. Weights must be >= 0 and sum to
/// 1 within 1e-9.
RasterStack pixel_fuse(std::span<const RasterStack> stacks, std::span<const double> weights);

/// Band-wise concatenation of stacks with matching height and width.
RasterStack concat_bands(std::span<const RasterStack> stacks);

// ---------------------------------------------------------------------------
// MSRS file format
//
//   "MSRS" | u16 version (=1) | u32 bands | u32 height | u32 width |
//   payload | u16 name count | { u16 byte length | UTF-8 bytes }*
//
// All integers little-endian. The raster payload is bands*H*W float32; the
// label variant stores one band of u16.

class RasterFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BadMagicError : public RasterFormatError {
public:
    explicit BadMagicError(std::size_t offset);
    std::size_t offset;
};

class TruncatedError : public RasterFormatError {
public:
    TruncatedError(std::size_t needed, std::size_t available);
};

class DimensionOverflowError : public RasterFormatError {
public:
    using RasterFormatError::RasterFormatError;
};

inline constexpr std::uint16_t kRasterFormatVersion = 1;
/// Largest payload element count accepted by the codec.
inline constexpr std::uint64_t kMaxRasterValues = std::uint64_t{1} << 30;

std::string encode_raster(const RasterStack& stack);
RasterStack decode_raster(std::string_view bytes);
std::string encode_labels(const LabelImage& labels, const std::string& name = "labels");
LabelImage decode_labels(std::string_view bytes);

void write_raster(const RasterStack& stack, const std::filesystem::path& path);
RasterStack read_raster(const std::filesystem::path& path);
void write_labels(const LabelImage& labels, const std::filesystem::path& path);
LabelImage read_labels(const std::filesystem::path& path);

}  // namespace geofuse
