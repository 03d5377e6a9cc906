#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "agrimon/crop_model.hpp"

namespace agrimon {

/// Malformed AGR1 stream.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PixelCoord {
    std::uint32_t row = 0;
    std::uint32_t col = 0;

    auto operator<=>(const PixelCoord&) const = default;
};

/// Inclusive rectangle of grid cells.
struct Region {
    std::uint32_t row0 = 0;
    std::uint32_t col0 = 0;
    std::uint32_t row1 = 0;
    std::uint32_t col1 = 0;

    std::uint32_t rows() const noexcept { return row1 - row0 + 1; }
    std::uint32_t cols() const noexcept { return col1 - col0 + 1; }
    std::size_t pixel_count() const noexcept { return std::size_t{rows()} * cols(); }
    bool fits(std::uint32_t grid_rows, std::uint32_t grid_cols) const noexcept {
        return row0 <= row1 && col0 <= col1 && row1 < grid_rows && col1 < grid_cols;
    }
    /// Throws ValidationError when the region is not inside a grid of the given shape.
    void require_within(std::uint32_t grid_rows, std::uint32_t grid_cols) const;
    static Region full(std::uint32_t grid_rows, std::uint32_t grid_cols) { return {0, 0, grid_rows - 1, grid_cols - 1}; }

    bool operator==(const Region&) const = default;
};

/// Dense band-major, then row-major, grid of 64-bit observations.
class RasterGrid {
public:
    static constexpr double kDefaultNodata = -9999.0;

    RasterGrid() = default;
    /// Zero-filled grid.
    RasterGrid(std::uint32_t rows, std::uint32_t cols, std::uint32_t bands, double nodata = kDefaultNodata);
    /// Adopts `values`; validates its length and that non-nodata values are finite.
    RasterGrid(std::uint32_t rows, std::uint32_t cols, std::uint32_t bands, double nodata, std::vector<double> values);

    std::uint32_t rows() const noexcept { return rows_; }
    std::uint32_t cols() const noexcept { return cols_; }
    std::uint32_t bands() const noexcept { return bands_; }
    double nodata() const noexcept { return nodata_; }
    std::span<const double> values() const noexcept { return values_; }

    std::size_t index(std::uint32_t band, std::uint32_t row, std::uint32_t col) const noexcept {
        return (std::size_t{band} * rows_ + row) * cols_ + col;
    }
    double at(std::uint32_t band, std::uint32_t row, std::uint32_t col) const { return values_.at(index(band, row, col)); }
    void set(std::uint32_t band, std::uint32_t row, std::uint32_t col, double value);

    std::span<const double> band(std::uint32_t b) const {
        return std::span<const double>(values_).subspan(std::size_t{b} * rows_ * cols_, std::size_t{rows_} * cols_);
    }
    std::vector<double> pixel_series(std::uint32_t row, std::uint32_t col) const;
    bool is_nodata(double value) const noexcept;
    /// A pixel with any nodata band is excluded from assimilation.
    bool is_nodata_pixel(std::uint32_t row, std::uint32_t col) const noexcept;

private:
    std::uint32_t rows_ = 0;
    std::uint32_t cols_ = 0;
    std::uint32_t bands_ = 0;
    double nodata_ = kDefaultNodata;
    std::vector<double> values_;
};

/// Same shape, same nodata bits, same value bits.
bool bit_identical(const RasterGrid& a, const RasterGrid& b) noexcept;

/// AGR1 layout, all little-endian:
///   "AGR1" | u32 rows | u32 cols | u32 bands | f64 nodata | f64 values[bands][rows][cols]
inline constexpr std::size_t kAgr1HeaderBytes = 4 + 3 * 4 + 8;

std::vector<std::byte> write_raster(const RasterGrid& grid);
RasterGrid read_raster(std::span<const std::byte> bytes);
void save_raster(const RasterGrid& grid, const std::filesystem::path& path);
RasterGrid load_raster(const std::filesystem::path& path);

struct RegionExtract {
    RasterGrid grid;
    /// parent[i] is the parent coordinate of sub-grid cell i in row-major order.
    std::vector<PixelCoord> parent;
};

RegionExtract extract_region(const RasterGrid& grid, const Region& region);

/// Row-major grid of ground-truth genomes.
struct ParamField {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<CropGenome> genomes;

    const CropGenome& at(std::uint32_t row, std::uint32_t col) const { return genomes.at(std::size_t{row} * cols + col); }
    bool operator==(const ParamField&) const = default;
};

ParamField extract_field(const ParamField& field, const Region& region);

/// Renders the observation raster a satellite would deliver for `field`. Pixel
/// (r, c) uses noise seed mix_seed(seed, r, c).
RasterGrid synthesize_truth(const ParamField& field, const WeatherSeries& weather, int revisit_days, double noise_sd,
                            std::uint64_t seed);

}  // namespace agrimon
