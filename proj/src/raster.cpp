#include "agrimon/raster.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "agrimon/rng.hpp"

namespace agrimon {

namespace {

constexpr char kMagic[4] = {'A', 'G', 'R', '1'};

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <typename T>
void put(std::vector<std::byte>& out, T value) {
    const auto le = to_little(value);
    const auto* p = reinterpret_cast<const std::byte*>(&le);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T take(std::span<const std::byte> bytes, std::size_t offset) {
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return to_little(value);
}

std::size_t cell_count(std::uint32_t rows, std::uint32_t cols, std::uint32_t bands) {
    if (rows == 0 || cols == 0 || bands == 0) throw ValidationError("raster dimensions must be positive");
    constexpr auto max = std::numeric_limits<std::size_t>::max() / sizeof(double);
    std::size_t n = rows;
    if (n > max / cols) throw ValidationError("raster dimensions overflow");
    n *= cols;
    if (n > max / bands) throw ValidationError("raster dimensions overflow");
    return n * bands;
}

}  // namespace

void Region::require_within(std::uint32_t grid_rows, std::uint32_t grid_cols) const {
    if (!fits(grid_rows, grid_cols)) {
        std::ostringstream msg;
        msg << "region rows " << row0 << ".." << row1 << " cols " << col0 << ".." << col1 << " is not inside a "
            << grid_rows << "x" << grid_cols << " grid";
        throw ValidationError(msg.str());
    }
}

RasterGrid::RasterGrid(std::uint32_t rows, std::uint32_t cols, std::uint32_t bands, double nodata)
    : rows_(rows), cols_(cols), bands_(bands), nodata_(nodata), values_(cell_count(rows, cols, bands), 0.0) {}

RasterGrid::RasterGrid(std::uint32_t rows, std::uint32_t cols, std::uint32_t bands, double nodata,
                       std::vector<double> values)
    : rows_(rows), cols_(cols), bands_(bands), nodata_(nodata), values_(std::move(values)) {
    if (values_.size() != cell_count(rows, cols, bands)) {
        throw ValidationError("raster value count " + std::to_string(values_.size()) + " does not match dimensions");
    }
    for (double v : values_) {
        if (!is_nodata(v) && !std::isfinite(v)) throw ValidationError("raster holds a non-finite value");
    }
}

void RasterGrid::set(std::uint32_t band, std::uint32_t row, std::uint32_t col, double value) {
    if (!is_nodata(value) && !std::isfinite(value)) throw ValidationError("raster values must be finite or nodata");
    values_.at(index(band, row, col)) = value;
}

std::vector<double> RasterGrid::pixel_series(std::uint32_t row, std::uint32_t col) const {
    std::vector<double> out(bands_);
    for (std::uint32_t b = 0; b < bands_; ++b) out[b] = at(b, row, col);
    return out;
}

bool RasterGrid::is_nodata(double value) const noexcept {
    return std::isnan(nodata_) ? std::isnan(value) : value == nodata_;
}

bool RasterGrid::is_nodata_pixel(std::uint32_t row, std::uint32_t col) const noexcept {
    for (std::uint32_t b = 0; b < bands_; ++b) {
        if (is_nodata(values_[index(b, row, col)])) return true;
    }
    return false;
}

bool bit_identical(const RasterGrid& a, const RasterGrid& b) noexcept {
    return a.rows() == b.rows() && a.cols() == b.cols() && a.bands() == b.bands() &&
           std::bit_cast<std::uint64_t>(a.nodata()) == std::bit_cast<std::uint64_t>(b.nodata()) &&
           a.values().size() == b.values().size() &&
           std::memcmp(a.values().data(), b.values().data(), a.values().size_bytes()) == 0;
}

std::vector<std::byte> write_raster(const RasterGrid& grid) {
    std::vector<std::byte> out;
    out.reserve(kAgr1HeaderBytes + grid.values().size_bytes());
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    put(out, grid.rows());
    put(out, grid.cols());
    put(out, grid.bands());
    put(out, grid.nodata());
    for (double v : grid.values()) put(out, v);
    return out;
}

RasterGrid read_raster(std::span<const std::byte> bytes) {
    if (bytes.size() < kAgr1HeaderBytes) throw FormatError("AGR1: truncated header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("AGR1: bad magic");
    const auto rows = take<std::uint32_t>(bytes, 4);
    const auto cols = take<std::uint32_t>(bytes, 8);
    const auto bands = take<std::uint32_t>(bytes, 12);
    const auto nodata = take<double>(bytes, 16);

    std::size_t cells = 0;
    try {
        cells = cell_count(rows, cols, bands);
    } catch (const ValidationError& e) {
        throw FormatError(std::string("AGR1: ") + e.what());
    }
    const std::size_t body = bytes.size() - kAgr1HeaderBytes;
    if (body / sizeof(double) < cells) throw FormatError("AGR1: truncated body");
    if (body != cells * sizeof(double)) throw FormatError("AGR1: trailing bytes after body");

    std::vector<double> values(cells);
    for (std::size_t i = 0; i < cells; ++i) values[i] = take<double>(bytes, kAgr1HeaderBytes + i * sizeof(double));
    try {
        return RasterGrid(rows, cols, bands, nodata, std::move(values));
    } catch (const ValidationError& e) {
        throw FormatError(std::string("AGR1: ") + e.what());
    }
}

void save_raster(const RasterGrid& grid, const std::filesystem::path& path) {
    const auto bytes = write_raster(grid);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

RasterGrid load_raster(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_raster(std::as_bytes(std::span(raw)));
}

RegionExtract extract_region(const RasterGrid& grid, const Region& region) {
    region.require_within(grid.rows(), grid.cols());
    RegionExtract out{RasterGrid(region.rows(), region.cols(), grid.bands(), grid.nodata()), {}};
    out.parent.reserve(region.pixel_count());
    for (std::uint32_t r = 0; r < region.rows(); ++r) {
        for (std::uint32_t c = 0; c < region.cols(); ++c) out.parent.push_back({region.row0 + r, region.col0 + c});
    }
    std::vector<double> values;
    values.reserve(std::size_t{grid.bands()} * region.pixel_count());
    for (std::uint32_t b = 0; b < grid.bands(); ++b) {
        for (const auto& p : out.parent) values.push_back(grid.at(b, p.row, p.col));
    }
    out.grid = RasterGrid(region.rows(), region.cols(), grid.bands(), grid.nodata(), std::move(values));
    return out;
}

ParamField extract_field(const ParamField& field, const Region& region) {
    region.require_within(field.rows, field.cols);
    ParamField out{region.rows(), region.cols(), {}};
    out.genomes.reserve(region.pixel_count());
    for (std::uint32_t r = region.row0; r <= region.row1; ++r) {
        for (std::uint32_t c = region.col0; c <= region.col1; ++c) out.genomes.push_back(field.at(r, c));
    }
    return out;
}

RasterGrid synthesize_truth(const ParamField& field, const WeatherSeries& weather, int revisit_days, double noise_sd,
                            std::uint64_t seed) {
    if (field.rows == 0 || field.cols == 0 || field.genomes.size() != std::size_t{field.rows} * field.cols) {
        throw ValidationError("parameter field shape does not match its genome count");
    }
    const auto bands = static_cast<std::uint32_t>(sample_count(weather.season_len(), revisit_days));
    RasterGrid grid(field.rows, field.cols, bands);
    for (std::uint32_t r = 0; r < field.rows; ++r) {
        for (std::uint32_t c = 0; c < field.cols; ++c) {
            const auto states = simulate(field.at(r, c), weather);
            const auto series = observe(states, revisit_days, noise_sd, mix_seed(seed, r, c));
            for (std::uint32_t b = 0; b < bands; ++b) grid.set(b, r, c, series.values[b]);
        }
    }
    return grid;
}

}  // namespace agrimon
