#include "qszego/l1_manifold.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "qszego/fit.hpp"
#include "qszego/runge_kutta.hpp"

namespace qszego {

namespace {

constexpr double kEdgeOfDisc = 1e-12;

double one_minus_p2(const RationalState& s) { return 1.0 - std::norm(s.p); }

bool finite(cplx a) { return std::isfinite(a.real()) && std::isfinite(a.imag()); }

}  // namespace

bool RationalState::on_manifold() const { return std::abs(p) < 1.0 && c != cplx{}; }

void RationalState::validate() const {
    if (!finite(b) || !finite(c) || !finite(p)) throw std::invalid_argument("RationalState: non-finite entry");
    if (!(std::abs(p) < 1.0)) throw std::invalid_argument("RationalState: |p| must be < 1");
    if (c == cplx{}) throw std::invalid_argument("RationalState: c must be nonzero");
}

SpectrumPlus to_spectrum(const RationalState& s, std::size_t N) {
    if (!(std::abs(s.p) < 1.0)) throw std::invalid_argument("to_spectrum: |p| must be < 1");
    SpectrumPlus u(N);
    u[0] = s.b;
    cplx term = s.c;
    for (std::size_t k = 1; k <= N; ++k) {
        u[k] = term;
        term *= s.p;
    }
    return u;
}

cplx j_closed_form(const RationalState& s) {
    const double d = one_minus_p2(s);
    const double c2 = std::norm(s.c);
    return std::norm(s.b) * s.b + 2.0 * s.b * c2 / d + c2 * s.c * std::conj(s.p) / (d * d);
}

ConservedSet conserved_closed_form(const RationalState& s) {
    const double d = one_minus_p2(s);
    const double b2 = std::norm(s.b);
    const double c2 = std::norm(s.c);
    const double re_w = (s.b * std::conj(s.c) * s.p).real();

    ConservedSet out;
    out.Q = b2 + c2 / d;
    out.M = c2 / (d * d);
    out.J = j_closed_form(s);
    out.E = 0.5 * b2 * b2 * b2 + 2.0 * b2 * b2 * c2 / d + b2 * c2 / (d * d) * (re_w + 2.0 * c2) +
            2.0 * c2 * c2 / (d * d * d) * re_w + 0.5 * std::norm(s.p) * c2 * c2 * c2 / (d * d * d * d);
    return out;
}

RationalState ode_rhs(const RationalState& s) {
    const cplx J = j_closed_form(s);
    const cplx Jb = std::conj(J);
    const double d = one_minus_p2(s);
    const double c2 = std::norm(s.c);
    const cplx minus_i{0.0, -1.0};

    RationalState rate;
    rate.p = minus_i * s.c * Jb;
    rate.c = minus_i * (2.0 * s.b * s.c * Jb + 2.0 * std::conj(s.b) * s.c * J + 2.0 * J * s.p * c2 / d);
    rate.b = minus_i * (s.b * s.b * Jb + 2.0 * std::norm(s.b) * J + 2.0 * J * c2 / d);
    return rate;
}

L1Trajectory evolve_ode(const RationalState& s0, const FlowConfig& cfg) {
    s0.validate();
    cfg.validate();
    L1Trajectory out;
    out.times.push_back(0.0);
    out.states.push_back(s0);

    RationalState s = s0;
    const std::size_t n = cfg.steps();
    for (std::size_t i = 1; i <= n; ++i) {
        const double t = static_cast<double>(i) * cfg.dt;
        const RationalState next = cfg.integrator == Integrator::rk4 ? rk4_step(s, cfg.dt, ode_rhs)
                                                                     : rk6_step(s, cfg.dt, ode_rhs);
        if (!finite(next.b) || !finite(next.c) || !finite(next.p)) {
            out.aborted = true;
            out.diagnostic = "non-finite state at t = " + std::to_string(t);
            break;
        }
        if (std::abs(next.p) >= 1.0 - kEdgeOfDisc) {
            out.aborted = true;
            out.diagnostic = "|p| reached 1 - 1e-12 at t = " + std::to_string(t) +
                             " (|c| = " + std::to_string(std::abs(next.c)) + ")";
            break;
        }
        if (next.c == cplx{}) {
            out.aborted = true;
            out.diagnostic = "c vanished at t = " + std::to_string(t);
            break;
        }
        s = next;
        if (i % cfg.monitor_stride == 0 || i == n) {
            out.times.push_back(t);
            out.states.push_back(s);
        }
    }
    return out;
}

double resonance_residual(const RationalState& s) {
    const ConservedSet c = conserved_closed_form(s);
    return c.E - 0.5 * c.Q * c.Q * c.Q;
}

double kappa(double Q, double M) {
    if (!(Q > 0.0 && M > 0.0)) throw std::domain_error("kappa: Q and M must be positive");
    if (!(Q < 4.0 * M)) throw std::domain_error("kappa: requires Q < 4M");
    return std::pow(Q, 1.5) * std::sqrt(4.0 * M - Q);
}

std::pair<double, double> envelope_roots(double Q, double M) {
    if (!(Q > 0.0 && M > 0.0)) throw std::domain_error("envelope_roots: Q and M must be positive");
    const double denom = (M + Q) * (M + Q);
    const double centre = Q * Q * (M - Q);
    const double spread = 2.0 * M * Q * std::sqrt(2.0 * Q * Q + M * Q);
    return {(centre - spread) / denom, (centre + spread) / denom};
}

double p_polynomial(double X, double Q, double M) {
    return -(M + Q) * (M + Q) * X * X + 2.0 * Q * Q * (M - Q) * X + Q * Q * Q * (4.0 * M - Q);
}

EnvelopeData envelope_data(double Q, double M) {
    EnvelopeData e;
    e.Q = Q;
    e.M = M;
    e.kappa = Q < 4.0 * M ? kappa(Q, M) : 0.0;
    std::tie(e.r_minus, e.r_plus) = envelope_roots(Q, M);
    return e;
}

RationalState find_blowup_initial(double Q_target, double M_target, double p_abs) {
    if (!(Q_target > 0.0 && M_target > 0.0)) {
        throw std::invalid_argument("find_blowup_initial: Q and M must be positive");
    }
    if (!(Q_target < 4.0 * M_target)) throw std::invalid_argument("find_blowup_initial: requires Q < 4M");
    if (!(p_abs > 0.0 && p_abs < 1.0)) throw std::invalid_argument("find_blowup_initial: need 0 < |p| < 1");

    const double sqrt_m = std::sqrt(M_target);
    const double c_abs = sqrt_m * (1.0 - p_abs * p_abs);
    const double b2 = Q_target - sqrt_m * c_abs;
    if (!(b2 > 0.0)) {
        throw std::invalid_argument("find_blowup_initial: |b|^2 = Q - sqrt(M)|c| is not positive");
    }
    const double b_abs = std::sqrt(b2);

    auto state = [&](double psi) { return RationalState{b_abs, c_abs, std::polar(p_abs, psi)}; };
    auto f = [&](double psi) { return resonance_residual(state(psi)); };

    constexpr int samples = 256;
    const double two_pi = 2.0 * std::numbers::pi;
    double lo = 0.0, hi = 0.0;
    bool found = false;
    double fmin = f(0.0), fmax = fmin;
    double prev = fmin;
    for (int k = 1; k <= samples; ++k) {
        const double psi = two_pi * k / samples;
        const double val = f(psi);
        fmin = std::min(fmin, val);
        fmax = std::max(fmax, val);
        const double a = two_pi * (k - 1) / samples;
        if ((prev <= 0.0) != (val <= 0.0)) {
            const bool decaying = std::sin(0.5 * (a + psi)) < 0.0;
            if (!found || decaying) {
                lo = a;
                hi = psi;
                found = true;
            }
        }
        prev = val;
    }
    if (!found) {
        throw NoResonantPhase("find_blowup_initial: residual E - Q^3/2 has no sign change in psi", fmin, fmax);
    }

    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((fm <= 0.0) == (flo <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    const double psi = std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
    return state(psi);
}

std::size_t decay_window_start(const L1Trajectory& traj) {
    if (traj.states.empty()) throw NoExponentialRegime("empty trajectory");
    const double c0 = std::abs(traj.states.front().c);
    std::size_t start = traj.states.size();
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        if (std::abs(traj.states[i].c) < 0.5 * c0) {
            start = i;
            break;
        }
    }
    if (start == traj.states.size()) throw NoExponentialRegime("no exponential regime: |c| never halves");
    for (std::size_t i = start + 1; i < traj.states.size(); ++i) {
        if (std::abs(traj.states[i].c) > std::abs(traj.states[i - 1].c)) {
            throw NoExponentialRegime("no exponential regime: |c| not monotone after halving (t = " +
                                      std::to_string(traj.times[i]) + ")");
        }
    }
    return start;
}

double growth_diagnostic(const L1Trajectory& traj, double s) {
    if (!(s >= 0.5)) throw std::invalid_argument("growth_diagnostic: requires s >= 1/2");
    const std::size_t start = decay_window_start(traj);
    std::vector<double> t, y;
    for (std::size_t i = start; i < traj.states.size(); ++i) {
        const RationalState& st = traj.states[i];
        const double M = conserved_closed_form(st).M;
        t.push_back(traj.times[i]);
        y.push_back(std::pow(M, 0.5 + s) * std::pow(std::abs(st.c), 1.0 - 2.0 * s));
    }
    return fit_exponential(t, y, {t.front(), t.back()}).slope;
}

std::array<double, 2> hankel_sigma_closed_form(const RationalState& s) {
    // H_u = F G F^T with F = [e_0, w/|w|], w = z/(1-pz), orthonormal columns,
    // so the singular values of H_u are those of G.
    const double d = one_minus_p2(s);
    const double wn = 1.0 / std::sqrt(d);
    Eigen::Matrix2cd g;
    g << s.b, s.c * wn, s.c * wn, s.c * s.p / d;
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(g);
    const auto& sv = svd.singularValues();
    return {sv(0), sv(1)};
}

double h1_norm_sq_closed_form(const RationalState& s) {
    // sum_{j>=0} (j+2)^2 x^j = x(1+x)/(1-x)^3 + 4x/(1-x)^2 + 4/(1-x)
    const double x = std::norm(s.p);
    const double om = 1.0 - x;
    const double series = x * (1.0 + x) / (om * om * om) + 4.0 * x / (om * om) + 4.0 / om;
    return std::norm(s.b) + std::norm(s.c) * series;
}

double tail_magnitude(const RationalState& s, std::size_t N) {
    const double pa = std::abs(s.p);
    return std::abs(s.c) * std::pow(pa, static_cast<double>(N)) / (1.0 - pa);
}

double resonance_identity_residual(const RationalState& s, double Q, double M) {
    const double ca = std::abs(s.c);
    const double sm = std::sqrt(M);
    const double re_term = (s.b * std::conj(s.c) * s.p / one_minus_p2(s)).real();
    return Q * (Q - ca * sm) + 2.0 * (Q + ca * sm) * re_term - 2.0 * ca * ca * M + ca * M * sm;
}

double log_c_rate(const RationalState& s) {
    const RationalState rate = ode_rhs(s);
    return (std::conj(s.c) * rate.c).real() / std::norm(s.c);
}

TrajectoryRecord l1_record(const L1Trajectory& traj, std::size_t spectrum_rank) {
    TrajectoryRecord rec;
    rec.columns = trajectory_columns(spectrum_rank);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const RationalState& s = traj.states[i];
        const ConservedSet c = conserved_closed_form(s);
        std::vector<double> row{traj.times[i],
                                c.Q,
                                c.M,
                                c.E,
                                std::abs(c.J),
                                std::sqrt(c.Q + c.M),
                                std::sqrt(h1_norm_sq_closed_form(s)),
                                hankel_sigma_closed_form(s)[0]};
        for (std::size_t k = 0; k < spectrum_rank; ++k) row.push_back(k == 0 ? std::abs(s.c) / one_minus_p2(s) : 0.0);
        rec.rows.push_back(std::move(row));
    }
    rec.aborted = traj.aborted;
    rec.diagnostic = traj.diagnostic;
    rec.last_valid_time = traj.times.empty() ? 0.0 : traj.times.back();
    return rec;
}

}  // namespace qszego
