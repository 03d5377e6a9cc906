#include "agrimon/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace agrimon {

bool recovered(const CropGenome& truth, const CropGenome& estimate, const RecoveryTolerance& tol) noexcept {
    return std::abs(estimate.sow_day - truth.sow_day) <= tol.sow_days &&
           std::abs(estimate.wmax_mm - truth.wmax_mm) <= tol.wmax_frac * std::abs(truth.wmax_mm) &&
           std::abs(estimate.growth_rate - truth.growth_rate) <= tol.growth_frac * std::abs(truth.growth_rate);
}

RecoveryScore score_recovery(const ParamField& truth, const ParamMap& result, const RecoveryTolerance& tol) {
    RecoveryScore score;
    for (const auto& e : result.entries) {
        if (e.coord.row >= truth.rows || e.coord.col >= truth.cols) {
            throw ValidationError("result pixel lies outside the truth field");
        }
        const auto& t = truth.at(e.coord.row, e.coord.col);
        const auto& g = e.result.genome;
        ++score.pixels;
        score.recovered += recovered(t, g, tol) ? 1 : 0;
        score.max_sow_error = std::max(score.max_sow_error, std::abs(double(g.sow_day - t.sow_day)));
        score.max_wmax_rel_error = std::max(score.max_wmax_rel_error, std::abs(g.wmax_mm - t.wmax_mm) / t.wmax_mm);
        score.max_growth_rel_error =
            std::max(score.max_growth_rel_error, std::abs(g.growth_rate - t.growth_rate) / t.growth_rate);
    }
    return score;
}

ParamMap field_as_param_map(const ParamField& field) {
    ParamMap map;
    map.region = Region::full(field.rows, field.cols);
    for (std::uint32_t r = 0; r < field.rows; ++r) {
        for (std::uint32_t c = 0; c < field.cols; ++c) map.entries.push_back({{r, c}, {field.at(r, c), 0.0, 0, 0}});
    }
    return map;
}

}  // namespace agrimon
