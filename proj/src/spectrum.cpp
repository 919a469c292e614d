#include "qszego/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qszego {

namespace {

bool all_finite(std::span<const cplx> v) {
    return std::all_of(v.begin(), v.end(),
                       [](cplx a) { return std::isfinite(a.real()) && std::isfinite(a.imag()); });
}

void require_same_cutoff(const SpectrumPlus& u, const SpectrumPlus& v, const char* what) {
    if (u.cutoff() != v.cutoff()) {
        throw std::invalid_argument(std::string(what) + ": cutoff mismatch (" +
                                    std::to_string(u.cutoff()) + " vs " +
                                    std::to_string(v.cutoff()) + ")");
    }
}

}  // namespace

SpectrumPlus::SpectrumPlus(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("SpectrumPlus: need at least one coefficient");
    if (!all_finite(coeffs_)) throw std::invalid_argument("SpectrumPlus: non-finite coefficient");
}

SpectrumPlus SpectrumPlus::monomial(std::size_t n, cplx a, std::size_t cutoff) {
    if (n > cutoff) throw std::invalid_argument("SpectrumPlus::monomial: degree above cutoff");
    SpectrumPlus u(cutoff);
    u[n] = a;
    return u;
}

SpectrumPlus SpectrumPlus::resized(std::size_t cutoff) const {
    SpectrumPlus out(cutoff);
    const std::size_t n = std::min(size(), out.size());
    std::copy_n(coeffs_.begin(), n, out.coeffs_.begin());
    return out;
}

bool SpectrumPlus::is_finite() const { return all_finite(coeffs_); }

SpectrumPlus& SpectrumPlus::operator+=(const SpectrumPlus& other) {
    require_same_cutoff(*this, other, "operator+");
    for (std::size_t n = 0; n < size(); ++n) coeffs_[n] += other.coeffs_[n];
    return *this;
}

SpectrumPlus& SpectrumPlus::operator-=(const SpectrumPlus& other) {
    require_same_cutoff(*this, other, "operator-");
    for (std::size_t n = 0; n < size(); ++n) coeffs_[n] -= other.coeffs_[n];
    return *this;
}

SpectrumPlus& SpectrumPlus::operator*=(cplx a) {
    for (auto& c : coeffs_) c *= a;
    return *this;
}

TwoSidedSpectrum::TwoSidedSpectrum(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.size() % 2 == 0) {
        throw std::invalid_argument("TwoSidedSpectrum: need an odd number of coefficients");
    }
    if (!all_finite(coeffs_)) throw std::invalid_argument("TwoSidedSpectrum: non-finite coefficient");
    cutoff_ = coeffs_.size() / 2;
}

std::size_t TwoSidedSpectrum::index(long mode) const {
    const long n = static_cast<long>(cutoff_);
    if (mode < -n || mode > n) {
        throw std::out_of_range("TwoSidedSpectrum: mode " + std::to_string(mode) + " outside [-" +
                                std::to_string(n) + ", " + std::to_string(n) + "]");
    }
    return static_cast<std::size_t>(mode + n);
}

bool TwoSidedSpectrum::is_finite() const { return all_finite(coeffs_); }

SpectrumPlus project_szego(const TwoSidedSpectrum& f) {
    const auto c = f.coeffs();
    return SpectrumPlus(std::vector<cplx>(c.begin() + static_cast<long>(f.cutoff()), c.end()));
}

TwoSidedSpectrum embed(const SpectrumPlus& u) {
    TwoSidedSpectrum f(u.cutoff());
    for (std::size_t n = 0; n < u.size(); ++n) f.at(static_cast<long>(n)) = u[n];
    return f;
}

SpectrumPlus multiply(const SpectrumPlus& u, const SpectrumPlus& v) {
    require_same_cutoff(u, v, "multiply");
    const std::size_t N = u.cutoff();
    SpectrumPlus w(N);
    for (std::size_t j = 0; j <= N; ++j) {
        const cplx uj = u[j];
        if (uj == cplx{}) continue;
        for (std::size_t k = 0; j + k <= N; ++k) w[j + k] += uj * v[k];
    }
    return w;
}

TwoSidedSpectrum mod_squared(const SpectrumPlus& u) {
    const std::size_t N = u.cutoff();
    TwoSidedSpectrum f(N);
    for (std::size_t m = 0; m <= N; ++m) {
        cplx acc{};
        for (std::size_t k = 0; k + m <= N; ++k) acc += u[k + m] * std::conj(u[k]);
        const long mm = static_cast<long>(m);
        if (m == 0) {
            f.at(0) = cplx(acc.real(), 0.0);
        } else {
            f.at(mm) = acc;
            f.at(-mm) = std::conj(acc);
        }
    }
    return f;
}

SpectrumPlus projected_mod_squared(const SpectrumPlus& u) {
    const std::size_t N = u.cutoff();
    SpectrumPlus w(N);
    for (std::size_t m = 0; m <= N; ++m) {
        cplx acc{};
        for (std::size_t k = 0; k + m <= N; ++k) acc += u[k + m] * std::conj(u[k]);
        w[m] = acc;
    }
    w[0] = cplx(w[0].real(), 0.0);
    return w;
}

cplx inner(const SpectrumPlus& u, const SpectrumPlus& v) {
    require_same_cutoff(u, v, "inner");
    cplx acc{};
    for (std::size_t n = 0; n < u.size(); ++n) acc += u[n] * std::conj(v[n]);
    return acc;
}

double l2_norm(const SpectrumPlus& u) {
    double acc = 0.0;
    for (cplx a : u.coeffs()) acc += std::norm(a);
    return std::sqrt(acc);
}

double l2_distance(const SpectrumPlus& u, const SpectrumPlus& v) {
    require_same_cutoff(u, v, "l2_distance");
    double acc = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) acc += std::norm(u[n] - v[n]);
    return std::sqrt(acc);
}

cplx compute_J(const SpectrumPlus& u) { return inner(multiply(u, u), u); }

ConservedSet conserved(const SpectrumPlus& u) {
    ConservedSet c;
    for (std::size_t n = 0; n < u.size(); ++n) {
        const double a2 = std::norm(u[n]);
        c.Q += a2;
        c.M += static_cast<double>(n) * a2;
    }
    c.J = compute_J(u);
    c.E = 0.5 * std::norm(c.J);
    return c;
}

double sobolev_norm(const SpectrumPlus& u, double s) {
    if (!(s >= 0.0)) throw std::invalid_argument("sobolev_norm: s must be nonnegative");
    double acc = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        acc += std::pow(1.0 + static_cast<double>(n), 2.0 * s) * std::norm(u[n]);
    }
    return std::sqrt(acc);
}

SpectrumPlus shift_adjoint(const SpectrumPlus& u) {
    SpectrumPlus out(u.cutoff());
    for (std::size_t n = 0; n + 1 < u.size(); ++n) out[n] = u[n + 1];
    return out;
}

SpectrumPlus poisson_smooth(const SpectrumPlus& u, double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("poisson_smooth: r must lie in [0, 1]");
    SpectrumPlus out = u;
    double rn = 1.0;
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] *= rn;
        rn *= r;
    }
    return out;
}

}  // namespace qszego
