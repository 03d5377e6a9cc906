#pragma once

// Independent re-derivation of the surrogate crop model and RMSE, written from
// the model's update rule without touching library code. Tests compare the
// library against it; the lattice search uses it to establish where the RMSE
// global minimum lies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

struct Params {
    int sow = 0;
    double wmax = 150.0;
    double s0 = 0.5;
    double thr = 0.0;
    double depth = 0.0;
    double rate = 0.1;
    double lmax = 5.0;
};

struct Day {
    double soil = 0.0;
    double lai = 0.0;
    double et = 0.0;
    double irr = 0.0;
    double drain = 0.0;
    double fw = 0.0;
    double fc = 0.0;
};

inline std::vector<Day> run(const Params& p, const std::vector<double>& rain, const std::vector<double>& et0) {
    std::vector<Day> out;
    out.reserve(rain.size());
    double soil = p.s0 * p.wmax;
    double lai = 0.0;
    for (std::size_t i = 0; i < rain.size(); ++i) {
        const int t = static_cast<int>(i);
        if (t == p.sow) lai = 0.1;
        const double irr = (t >= p.sow && soil / p.wmax < p.thr) ? p.depth : 0.0;
        const double total = soil + rain[i] + irr;
        const double drain = std::max(0.0, total - p.wmax);
        const double held = std::min(total, p.wmax);
        const double fw = std::min(1.0, held / (0.5 * p.wmax));
        const double fc = std::min(1.0, lai / 3.0);
        const double et = std::min(held, et0[i] * fc * fw);
        out.push_back({soil, lai, et, irr, drain, fw, fc});
        soil = held - et;
        if (t >= p.sow) lai = std::clamp(lai + p.rate * lai * (1.0 - lai / p.lmax) * fw, 0.0, p.lmax);
    }
    return out;
}

inline std::vector<double> lai_samples(const Params& p, const std::vector<double>& rain, const std::vector<double>& et0,
                                       int k) {
    const auto days = run(p, rain, et0);
    std::vector<double> out;
    for (std::size_t t = 0; t < days.size(); t += static_cast<std::size_t>(k)) out.push_back(days[t].lai);
    return out;
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

struct LatticeHit {
    Params best;
    double rmse = 0.0;
};

/// Exhaustive n^3 search over (sow, wmax, rate) with the other genes taken from `fixed`.
/// sow is rounded to whole days, so some lattice rows repeat.
inline LatticeHit lattice_search(const std::vector<double>& observed, const std::vector<double>& rain,
                                 const std::vector<double>& et0, int k, const Params& fixed, int n, double sow_lo,
                                 double sow_hi, double wmax_lo, double wmax_hi, double rate_lo, double rate_hi) {
    LatticeHit hit{fixed, INFINITY};
    for (int i = 0; i < n; ++i) {
        Params p = fixed;
        p.sow = static_cast<int>(std::lround(sow_lo + (sow_hi - sow_lo) * i / (n - 1)));
        for (int j = 0; j < n; ++j) {
            p.wmax = wmax_lo + (wmax_hi - wmax_lo) * j / (n - 1);
            for (int l = 0; l < n; ++l) {
                p.rate = rate_lo + (rate_hi - rate_lo) * l / (n - 1);
                const double r = rmse(lai_samples(p, rain, et0, k), observed);
                if (r < hit.rmse) hit = {p, r};
            }
        }
    }
    return hit;
}

}  // namespace oracle
