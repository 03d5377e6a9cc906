#pragma once

#include <cstddef>

#include "agrimon/distribution.hpp"

namespace agrimon {

/// Per-gene recovery tolerances: sow_day absolute in days, the others relative to truth.
struct RecoveryTolerance {
    double sow_days = 2.0;
    double wmax_frac = 0.10;
    double growth_frac = 0.20;
};

struct RecoveryScore {
    std::size_t pixels = 0;
    std::size_t recovered = 0;
    double max_sow_error = 0.0;
    double max_wmax_rel_error = 0.0;
    double max_growth_rel_error = 0.0;

    double fraction() const noexcept { return pixels == 0 ? 0.0 : static_cast<double>(recovered) / pixels; }
};

bool recovered(const CropGenome& truth, const CropGenome& estimate, const RecoveryTolerance& tol) noexcept;

/// Scores every entry of `result` against the truth genome at the same grid cell.
RecoveryScore score_recovery(const ParamField& truth, const ParamMap& result, const RecoveryTolerance& tol = {});

/// The truth field dressed as a perfect result, rmse 0.
ParamMap field_as_param_map(const ParamField& field);

}  // namespace agrimon
