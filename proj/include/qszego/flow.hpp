#pragma once

// Galerkin-truncated flow of  i u_t = 2 J Pi(|u|^2) + conj(J) u^2  and the
// dynamical checks built on it.

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qszego/hankel.hpp"
#include "qszego/spectrum.hpp"

namespace qszego {

/// Thrown when a step produces non-finite coefficients.
class NumericalInstability : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Integrator { rk4, rk6 };

struct FlowConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    std::size_t cutoff = 64;
    std::size_t monitor_stride = 1;
    std::size_t spectrum_rank = 5;
    bool keep_snapshots = false;
    /// Fixed-step method. RK6 keeps the drift of Q, M, E below 1e-8 over
    /// O(1) times at dt = 1e-3 where RK4 does not.
    Integrator integrator = Integrator::rk6;

    /// Throws std::invalid_argument when dt <= 0, t_end < 0, stride == 0 or
    /// spectrum_rank > cutoff.
    void validate() const;
    std::size_t steps() const;
};

/// Monitored quantities, one row per monitor time.
///
/// Columns are t, Q, M, E, absJ, H12, H1, bmo_proxy, sigma1..sigmaR where the
/// sigmas are singular values of K_u.
struct TrajectoryRecord {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<SpectrumPlus> snapshots;

    bool aborted = false;
    double last_valid_time = 0.0;
    std::string diagnostic;
    /// Largest |u(N)| seen at monitor times; a cheap truncation indicator.
    double max_top_mode = 0.0;

    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

std::vector<std::string> trajectory_columns(std::size_t spectrum_rank);

/// One row of monitors for state u at time t.
std::vector<double> monitor_row(const SpectrumPlus& u, double t, std::size_t spectrum_rank);

/// du/dt = -i (2 J Pi(|u|^2) + conj(J) u^2), truncated to modes 0..N.
SpectrumPlus rhs(const SpectrumPlus& u);

/// One RK4 step of size dt > 0. Throws NumericalInstability on non-finite output.
SpectrumPlus step_rk4(const SpectrumPlus& u, double dt);

/// One step of the sixth-order method. Throws NumericalInstability on non-finite output.
SpectrumPlus step_rk6(const SpectrumPlus& u, double dt);

/// `steps` fixed steps of signed size h; h < 0 integrates backward.
SpectrumPlus integrate(const SpectrumPlus& u, double h, std::size_t steps,
                       Integrator method = Integrator::rk6);

using Observer = std::function<void(double t, const SpectrumPlus& u)>;

/// Time-steps u0 from 0 to cfg.t_end recording monitors every monitor_stride
/// steps (and at the final step). u0 is resized to cfg.cutoff. Instability
/// does not throw: the record is marked aborted with the last valid time.
TrajectoryRecord evolve(const SpectrumPlus& u0, const FlowConfig& cfg, const Observer& observer = {});

/// Max-entry norm of dK/dt - (B A - A conj(B)) at u, with dK/dt from a
/// central difference of width 2 dt and A = K_u, B = B_u on the leading N x N
/// block. Products are formed at full cutoff size before restriction, so the
/// only error left is the O(dt^2) difference error when 2N - 1 <= cutoff.
double lax_residual(const SpectrumPlus& u, double dt, std::size_t N,
                    Integrator method = Integrator::rk6);

struct LipschitzSeries {
    std::vector<double> times;
    std::vector<double> ratios;  // ||u(t) - v(t)|| / ||u0 - v0||

    /// max over t > 0 of log(r(t)) / t, the smallest B with r(t) <= exp(B t).
    double empirical_rate() const;
};

/// Co-evolves two states. Throws std::invalid_argument if they coincide or
/// have different cutoffs.
LipschitzSeries lipschitz_ratio(const SpectrumPlus& u0, const SpectrumPlus& v0, const FlowConfig& cfg);

struct TildeEResult {
    double blowup_time = 0.0;
    /// Samples (t, x, y, Q) with x + iy the mean of u.
    std::vector<std::array<double, 4>> path;
};

/// Right-hand side of the flow generated by Re J (no J factor):
/// du/dt = -i (2 Pi(|u|^2) + u^2).
SpectrumPlus tilde_e_rhs(const SpectrumPlus& u);

/// Blow-up time of the Re J flow started from u0 = (x0 + i y0) + beta z with
/// |beta|^2 = Q - x0^2 - y0^2, so that u0 has mean x0 + iy0 and mass Q.
///
/// The mean a = x + iy obeys i a' = 2 Q(t) + a^2 exactly, and Q(t) >= |a|^2
/// forces y' <= -y^2. Integration runs in the direction where that bound
/// forces blow-up, with steps shrinking like 1/||u||_Wiener, and stops when
/// |y| > 1e6. Throws std::invalid_argument for x0 = y0 = Q = 0 or
/// Q < x0^2 + y0^2, std::runtime_error if no blow-up is seen.
TildeEResult tilde_e_demo(double x0, double y0, double Q, double dt, std::size_t cutoff = 16);

}  // namespace qszego
