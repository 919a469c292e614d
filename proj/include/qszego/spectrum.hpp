#pragma once

// Truncated Hardy-space symbols on the circle.
//
// A SpectrumPlus holds the Fourier coefficients u(0) ... u(N) of a function
// with no negative frequencies; everything above the cutoff N is zero. All
// products are exact coefficient convolutions followed by Galerkin truncation
// to modes 0..N.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qszego {

using cplx = std::complex<double>;

class SpectrumPlus {
public:
    /// The zero function at cutoff 0.
    SpectrumPlus() : coeffs_(1) {}

    /// The zero function at the given cutoff.
    explicit SpectrumPlus(std::size_t cutoff) : coeffs_(cutoff + 1) {}

    /// Takes ownership of coefficients u(0) ... u(N). Throws std::invalid_argument
    /// on an empty vector or non-finite entries.
    explicit SpectrumPlus(std::vector<cplx> coeffs);

    /// a * z^n at the given cutoff.
    static SpectrumPlus monomial(std::size_t n, cplx a, std::size_t cutoff);

    std::size_t cutoff() const { return coeffs_.size() - 1; }
    std::size_t size() const { return coeffs_.size(); }

    cplx operator[](std::size_t n) const { return coeffs_[n]; }
    cplx& operator[](std::size_t n) { return coeffs_[n]; }

    std::span<const cplx> coeffs() const { return coeffs_; }
    std::span<cplx> coeffs() { return coeffs_; }

    /// Zero-extends (or truncates) to a new cutoff.
    SpectrumPlus resized(std::size_t cutoff) const;

    bool is_finite() const;

    SpectrumPlus& operator+=(const SpectrumPlus& other);
    SpectrumPlus& operator-=(const SpectrumPlus& other);
    SpectrumPlus& operator*=(cplx a);

    friend SpectrumPlus operator+(SpectrumPlus a, const SpectrumPlus& b) { return a += b; }
    friend SpectrumPlus operator-(SpectrumPlus a, const SpectrumPlus& b) { return a -= b; }
    friend SpectrumPlus operator*(cplx s, SpectrumPlus a) { return a *= s; }
    friend SpectrumPlus operator*(SpectrumPlus a, cplx s) { return a *= s; }

    friend bool operator==(const SpectrumPlus&, const SpectrumPlus&) = default;

private:
    std::vector<cplx> coeffs_;
};

/// Coefficients of a symbol with modes -N ... N.
class TwoSidedSpectrum {
public:
    TwoSidedSpectrum() : cutoff_(0), coeffs_(1) {}
    explicit TwoSidedSpectrum(std::size_t cutoff) : cutoff_(cutoff), coeffs_(2 * cutoff + 1) {}

    /// coeffs[k] is the coefficient of mode k - N; requires an odd, nonzero length.
    explicit TwoSidedSpectrum(std::vector<cplx> coeffs);

    std::size_t cutoff() const { return cutoff_; }

    cplx at(long mode) const { return coeffs_[index(mode)]; }
    cplx& at(long mode) { return coeffs_[index(mode)]; }

    std::span<const cplx> coeffs() const { return coeffs_; }

    bool is_finite() const;

    friend bool operator==(const TwoSidedSpectrum&, const TwoSidedSpectrum&) = default;

private:
    std::size_t index(long mode) const;

    std::size_t cutoff_;
    std::vector<cplx> coeffs_;
};

/// Mass, momentum, energy and the factor J = (u^2|u).
struct ConservedSet {
    double Q = 0.0;
    double M = 0.0;
    double E = 0.0;
    cplx J{0.0, 0.0};
};

/// Szego projection: keeps modes 0..N, discards negative modes.
SpectrumPlus project_szego(const TwoSidedSpectrum& f);

/// Inclusion of L^2_+ into the two-sided representation.
TwoSidedSpectrum embed(const SpectrumPlus& u);

/// Galerkin-truncated product u*v. Throws std::invalid_argument on cutoff mismatch.
SpectrumPlus multiply(const SpectrumPlus& u, const SpectrumPlus& v);

/// Exact two-sided spectrum of |u|^2. Mode m is sum_k u(k+m) conj(u(k)).
TwoSidedSpectrum mod_squared(const SpectrumPlus& u);

/// Pi(|u|^2) directly, skipping the negative half.
SpectrumPlus projected_mod_squared(const SpectrumPlus& u);

/// (u|v) = sum_n u(n) conj(v(n)). Cutoffs must agree.
cplx inner(const SpectrumPlus& u, const SpectrumPlus& v);

double l2_norm(const SpectrumPlus& u);
double l2_distance(const SpectrumPlus& u, const SpectrumPlus& v);

/// J = (u^2|u).
///
/// Only modes 0..N of u^2 pair with u, so the Galerkin-truncated square gives
/// the same value as the exact square; padding u with zeros leaves J unchanged.
cplx compute_J(const SpectrumPlus& u);

ConservedSet conserved(const SpectrumPlus& u);

/// (sum_n (1+n)^{2s} |u(n)|^2)^{1/2}. With this weight the H^{1/2} norm squared
/// is exactly Q + M.
double sobolev_norm(const SpectrumPlus& u, double s);

/// S* u: coefficients shifted down by one, top mode set to zero.
SpectrumPlus shift_adjoint(const SpectrumPlus& u);

/// Poisson smoothing u(n) -> r^n u(n), 0 <= r <= 1 (0^0 = 1).
SpectrumPlus poisson_smooth(const SpectrumPlus& u, double r);

}  // namespace qszego
