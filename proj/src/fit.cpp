#include "qszego/fit.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace qszego {

FitResult fit_exponential(std::span<const double> t, std::span<const double> y, std::pair<double, double> window) {
    if (t.size() != y.size()) throw std::invalid_argument("fit_exponential: t and y lengths differ");
    if (!(window.first <= window.second)) throw std::invalid_argument("fit_exponential: empty window");

    std::vector<double> ts, ls;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window.first || t[i] > window.second) continue;
        if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
            throw std::invalid_argument("fit_exponential: nonpositive value at t = " + std::to_string(t[i]));
        }
        ts.push_back(t[i]);
        ls.push_back(std::log(y[i]));
    }
    const std::size_t n = ts.size();
    if (n < 10) throw std::invalid_argument("fit_exponential: need at least 10 points, got " + std::to_string(n));

    // Centred sums for conditioning.
    double tm = 0.0, lm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tm += ts[i];
        lm += ls[i];
    }
    tm /= static_cast<double>(n);
    lm /= static_cast<double>(n);
    double stt = 0.0, stl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (ts[i] - tm) * (ts[i] - tm);
        stl += (ts[i] - tm) * (ls[i] - lm);
    }
    if (stt == 0.0) throw std::invalid_argument("fit_exponential: all sample times coincide");

    FitResult r;
    r.slope = stl / stt;
    r.intercept = lm - r.slope * tm;
    r.t_start = ts.front();
    r.t_end = ts.back();
    r.points = n;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ls[i] - (r.intercept + r.slope * ts[i]);
        ss += e * e;
    }
    r.residual_rms = std::sqrt(ss / static_cast<double>(n));
    return r;
}

}  // namespace qszego
