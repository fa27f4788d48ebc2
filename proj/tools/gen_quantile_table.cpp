// Regenerates the standard-law quantile table embedded in
// include/levylab/stable_quantile_table.inc. Run manually; output goes to
// stdout in the .inc initializer format.

#include <cstdio>

#include "levylab/stable.hpp"

using namespace levylab;

namespace {

double cdf_std(double alpha, double z, const detail::FourierGrid& grid) {
    if (z > detail::kCdfTailSwitch) return 1.0 - detail::tail_prob_series(alpha, z);
    return detail::cdf_standard_grid(z, grid);
}

double quantile(double alpha, double p, const detail::FourierGrid& grid) {
    double lo = 0.0, hi = 1.0;
    while (cdf_std(alpha, hi, grid) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (cdf_std(alpha, mid, grid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

int main() {
    std::printf("inline constexpr std::array<QuantileRow, 61> kStableQuantileTable = {{\n");
    for (int i = 0; i <= 60; ++i) {
        double alpha = 0.5 + 0.025 * i;
        detail::FourierGrid grid(alpha, detail::kCdfTailSwitch);
        double q75 = quantile(alpha, 0.75, grid);
        double q95 = quantile(alpha, 0.95, grid);
        std::printf("    {%.3f, %.12g, %.12g},\n", alpha, q95 / q75, q75);
        std::fflush(stdout);
    }
    std::printf("}};\n");
    return 0;
}
