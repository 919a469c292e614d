#pragma once

// Exact dynamics on the invariant manifold of rank-one K_u,
//
//     u(z) = b + c z / (1 - p z),   |p| < 1,  c != 0,
//
// in the coordinates (b, c, p): closed-form conservation laws, the reduced
// ODE, the resonance condition E = Q^3 / 2 and the envelope polynomial that
// governs |c(t)|.

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qszego/flow.hpp"
#include "qszego/spectrum.hpp"

namespace qszego {

struct RationalState {
    cplx b{};
    cplx c{};
    cplx p{};

    /// |p| < 1 and c != 0.
    bool on_manifold() const;
    /// Throws std::invalid_argument when not on_manifold().
    void validate() const;

    RationalState& operator+=(const RationalState& o) {
        b += o.b;
        c += o.c;
        p += o.p;
        return *this;
    }
    friend RationalState operator+(RationalState a, const RationalState& o) { return a += o; }
    friend RationalState operator*(double s, RationalState a) {
        a.b *= s;
        a.c *= s;
        a.p *= s;
        return a;
    }
};

struct EnvelopeData {
    double Q = 0.0;
    double M = 0.0;
    double kappa = 0.0;
    double r_minus = 0.0;
    double r_plus = 0.0;
};

/// u(0) = b, u(k) = c p^{k-1} for 1 <= k <= N. Throws if |p| >= 1.
SpectrumPlus to_spectrum(const RationalState& s, std::size_t N);

/// J = |b|^2 b + 2 b |c|^2 / (1-|p|^2) + |c|^2 c conj(p) / (1-|p|^2)^2.
cplx j_closed_form(const RationalState& s);

/// Q, M, J in closed form; E from its own expanded formula, not from |J|^2.
ConservedSet conserved_closed_form(const RationalState& s);

/// (db/dt, dc/dt, dp/dt) of the reduced system.
RationalState ode_rhs(const RationalState& s);

struct L1Trajectory {
    std::vector<double> times;
    std::vector<RationalState> states;
    bool aborted = false;
    std::string diagnostic;
};

/// Fixed-step integration (cfg.integrator) of the reduced system up to
/// cfg.t_end, sampling every monitor_stride steps; cfg.cutoff is unused.
/// Stops early, marking the trajectory aborted, if |p| >= 1 - 1e-12 or c
/// vanishes.
L1Trajectory evolve_ode(const RationalState& s0, const FlowConfig& cfg);

/// E - Q^3 / 2 from the closed forms.
double resonance_residual(const RationalState& s);

/// kappa = Q^{3/2} sqrt(4M - Q). Throws std::domain_error unless Q, M > 0 and Q < 4M.
double kappa(double Q, double M);

/// Roots r_- < r_+ of the envelope polynomial P.
std::pair<double, double> envelope_roots(double Q, double M);

/// P(X) = -(M+Q)^2 X^2 + 2 Q^2 (M-Q) X + Q^3 (4M-Q).
double p_polynomial(double X, double Q, double M);

EnvelopeData envelope_data(double Q, double M);

/// Thrown by find_blowup_initial when no resonant phase exists.
class NoResonantPhase : public std::runtime_error {
public:
    NoResonantPhase(const std::string& what, double min_residual, double max_residual)
        : std::runtime_error(what), min_residual(min_residual), max_residual(max_residual) {}
    double min_residual;
    double max_residual;
};

/// A resonant state with prescribed Q, M and |p|.
///
/// Gauge: b, c real positive, the phase psi = arg(b conj(c) p) carried by p.
/// |c| = sqrt(M)(1 - p_abs^2), |b|^2 = Q - sqrt(M)|c|, and psi is found by a
/// 256-point sign-change scan followed by bisection. The residual is
/// alpha + beta cos(psi), so its roots come in a pair psi, 2 pi - psi; the
/// one with sin(psi) < 0 is returned, for which |c| decreases at t = 0.
RationalState find_blowup_initial(double Q_target, double M_target, double p_abs);

/// Thrown by growth_diagnostic on a trajectory without a decaying |c| regime.
class NoExponentialRegime : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Index of the first sample where |c| < |c(0)| / 2; the fit window runs from
/// there to the end of the trajectory. Throws NoExponentialRegime if |c| never
/// halves or is not monotone on the window.
std::size_t decay_window_start(const L1Trajectory& traj);

/// Least-squares slope of log(M^{1/2+s} |c|^{1-2s}) against t over the decay
/// window; tends to (2s-1) kappa on a resonant trajectory. Requires s >= 1/2.
double growth_diagnostic(const L1Trajectory& traj, double s);

/// sigma_1, sigma_2 of H_u, from the 2x2 compression of H_u to span{1, z/(1-pz)}.
std::array<double, 2> hankel_sigma_closed_form(const RationalState& s);

/// sum_n (1+n)^2 |u(n)|^2 summed in closed form.
double h1_norm_sq_closed_form(const RationalState& s);

/// |c| |p|^N / (1 - |p|), the l^1 mass dropped by truncation at N.
double tail_magnitude(const RationalState& s, std::size_t N);

/// Left side minus right side of the resonance identity rewritten with the
/// conservation laws:
///   Q(Q - |c| sqrt M) + 2(Q + |c| sqrt M) Re(b conj(c) p / (1-|p|^2))
///     - 2|c|^2 M + |c| M sqrt M.
double resonance_identity_residual(const RationalState& s, double Q, double M);

/// (1/|c|) d|c|/dt evaluated from the reduced system.
double log_c_rate(const RationalState& s);

/// Monitor rows (same schema as the PDE trajectory) from closed forms. The
/// K_u spectrum of a rank-one symbol is sqrt(M) followed by zeros.
TrajectoryRecord l1_record(const L1Trajectory& traj, std::size_t spectrum_rank);

}  // namespace qszego
