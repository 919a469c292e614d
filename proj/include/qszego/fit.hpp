#pragma once

#include <span>
#include <utility>

namespace qszego {

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    double residual_rms = 0.0;
    std::size_t points = 0;
};

/// Least squares of log(y) against t over samples with t in [window.first, window.second].
/// Throws std::invalid_argument on fewer than 10 points in the window, on
/// nonpositive y inside it, or on mismatched lengths.
FitResult fit_exponential(std::span<const double> t, std::span<const double> y, std::pair<double, double> window);

}  // namespace qszego
