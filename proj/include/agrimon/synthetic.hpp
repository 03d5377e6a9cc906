#pragma once

#include <cstdint>

#include "agrimon/crop_model.hpp"
#include "agrimon/raster.hpp"

namespace agrimon::synthetic {

/// Dry-season forcing: rain on ~8% of days (exponential, mean 6 mm), ET0 peaking
/// mid-season at 6.5 mm. Dry enough that capacity limits growth, which keeps
/// wmax_mm identifiable from LAI alone.
WeatherSeries weather(std::size_t days, std::uint64_t seed);

/// Values for the genes the demo scenario holds fixed.
CropGenome template_genome();

/// Range truth genomes are drawn from; strictly inside the search bounds so
/// recovery is not helped by clamping.
GenomeBounds truth_prior(std::size_t days);

/// Row-major field with free genes {sow_day, wmax_mm, growth_rate} drawn from
/// truth_prior and the rest from template_genome().
ParamField random_field(std::uint32_t rows, std::uint32_t cols, std::size_t days, std::uint64_t seed);

}  // namespace agrimon::synthetic
