#include "qszego/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qszego/runge_kutta.hpp"

namespace qszego {

void FlowConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("FlowConfig: dt must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("FlowConfig: t_end must be >= 0");
    if (monitor_stride == 0) throw std::invalid_argument("FlowConfig: monitor_stride must be >= 1");
    if (spectrum_rank > cutoff) throw std::invalid_argument("FlowConfig: spectrum_rank exceeds cutoff");
}

std::size_t FlowConfig::steps() const {
    // Tolerate t_end / dt landing a hair above an integer.
    return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

std::size_t TrajectoryRecord::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::out_of_range("TrajectoryRecord: no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> TrajectoryRecord::column(const std::string& name) const {
    const std::size_t j = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[j]);
    return out;
}

std::vector<std::string> trajectory_columns(std::size_t spectrum_rank) {
    std::vector<std::string> cols{"t", "Q", "M", "E", "absJ", "H12", "H1", "bmo_proxy"};
    for (std::size_t k = 1; k <= spectrum_rank; ++k) cols.push_back("sigma" + std::to_string(k));
    return cols;
}

std::vector<double> monitor_row(const SpectrumPlus& u, double t, std::size_t spectrum_rank) {
    const ConservedSet c = conserved(u);
    std::vector<double> row{t, c.Q, c.M, c.E, std::abs(c.J), sobolev_norm(u, 0.5), sobolev_norm(u, 1.0),
                            bmo_proxy(u, u.cutoff() + 1)};
    if (spectrum_rank > 0) {
        const SigmaSpectrum s = sigma_spectrum(k_matrix(u, u.cutoff() + 1));
        for (std::size_t k = 0; k < spectrum_rank; ++k) row.push_back(k < s.values.size() ? s.values[k] : 0.0);
    }
    return row;
}

SpectrumPlus rhs(const SpectrumPlus& u) {
    const cplx J = compute_J(u);
    SpectrumPlus pm = projected_mod_squared(u);
    SpectrumPlus sq = multiply(u, u);
    const cplx minus_i{0.0, -1.0};
    for (std::size_t n = 0; n < pm.size(); ++n) pm[n] = minus_i * (2.0 * J * pm[n] + std::conj(J) * sq[n]);
    return pm;
}

namespace {

SpectrumPlus raw_step(const SpectrumPlus& u, double h, Integrator method) {
    const auto field = [](const SpectrumPlus& v) { return rhs(v); };
    return method == Integrator::rk4 ? rk4_step(u, h, field) : rk6_step(u, h, field);
}

}  // namespace

SpectrumPlus integrate(const SpectrumPlus& u, double h, std::size_t steps, Integrator method) {
    SpectrumPlus y = u;
    for (std::size_t i = 0; i < steps; ++i) {
        y = raw_step(y, h, method);
        if (!y.is_finite()) throw NumericalInstability("integrate: non-finite state, step too large");
    }
    return y;
}

SpectrumPlus step_rk4(const SpectrumPlus& u, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt must be positive");
    return integrate(u, dt, 1, Integrator::rk4);
}

SpectrumPlus step_rk6(const SpectrumPlus& u, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_rk6: dt must be positive");
    return integrate(u, dt, 1, Integrator::rk6);
}

TrajectoryRecord evolve(const SpectrumPlus& u0, const FlowConfig& cfg, const Observer& observer) {
    cfg.validate();
    TrajectoryRecord rec;
    rec.columns = trajectory_columns(cfg.spectrum_rank);

    SpectrumPlus u = u0.resized(cfg.cutoff);
    auto record = [&](double t) {
        rec.rows.push_back(monitor_row(u, t, cfg.spectrum_rank));
        if (cfg.keep_snapshots) rec.snapshots.push_back(u);
        rec.max_top_mode = std::max(rec.max_top_mode, std::abs(u[u.cutoff()]));
        if (observer) observer(t, u);
    };

    record(0.0);
    const std::size_t n = cfg.steps();
    for (std::size_t i = 1; i <= n; ++i) {
        const double t = static_cast<double>(i) * cfg.dt;
        SpectrumPlus next = raw_step(u, cfg.dt, cfg.integrator);
        if (!next.is_finite()) {
            rec.aborted = true;
            rec.diagnostic = "non-finite state at t = " + std::to_string(t);
            return rec;
        }
        u = std::move(next);
        rec.last_valid_time = t;
        if (i % cfg.monitor_stride == 0 || i == n) record(t);
    }
    return rec;
}

double lax_residual(const SpectrumPlus& u, double dt, std::size_t N, Integrator method) {
    if (!(dt > 0.0)) throw std::invalid_argument("lax_residual: dt must be positive");
    if (N > u.cutoff()) throw std::invalid_argument("lax_residual: N exceeds cutoff");
    const std::size_t full = u.cutoff() + 1;
    const auto n = static_cast<Eigen::Index>(N);

    const SpectrumPlus up = integrate(u, dt, 1, method);
    const SpectrumPlus um = integrate(u, -dt, 1, method);
    const Matrix dk = (k_matrix(up, full).matrix() - k_matrix(um, full).matrix()) / (2.0 * dt);

    const AntilinearHankel a = k_matrix(u, full);
    const ToeplitzOp b = b_u_matrix(u, full);
    const Matrix commutator = compose(b, a) - compose(a, b);

    return (dk - commutator).topLeftCorner(n, n).cwiseAbs().maxCoeff();
}

double LipschitzSeries::empirical_rate() const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] > 0.0) best = std::max(best, std::log(ratios[i]) / times[i]);
    }
    return best;
}

LipschitzSeries lipschitz_ratio(const SpectrumPlus& u0, const SpectrumPlus& v0, const FlowConfig& cfg) {
    cfg.validate();
    if (u0.cutoff() != v0.cutoff()) throw std::invalid_argument("lipschitz_ratio: cutoff mismatch");
    SpectrumPlus u = u0.resized(cfg.cutoff);
    SpectrumPlus v = v0.resized(cfg.cutoff);
    const double d0 = l2_distance(u, v);
    if (d0 == 0.0) throw std::invalid_argument("lipschitz_ratio: identical initial data");

    LipschitzSeries out;
    out.times.push_back(0.0);
    out.ratios.push_back(1.0);
    const std::size_t n = cfg.steps();
    for (std::size_t i = 1; i <= n; ++i) {
        u = integrate(u, cfg.dt, 1, cfg.integrator);
        v = integrate(v, cfg.dt, 1, cfg.integrator);
        if (i % cfg.monitor_stride == 0 || i == n) {
            out.times.push_back(static_cast<double>(i) * cfg.dt);
            out.ratios.push_back(l2_distance(u, v) / d0);
        }
    }
    return out;
}

SpectrumPlus tilde_e_rhs(const SpectrumPlus& u) {
    SpectrumPlus pm = projected_mod_squared(u);
    const SpectrumPlus sq = multiply(u, u);
    const cplx minus_i{0.0, -1.0};
    for (std::size_t n = 0; n < pm.size(); ++n) pm[n] = minus_i * (2.0 * pm[n] + sq[n]);
    return pm;
}

TildeEResult tilde_e_demo(double x0, double y0, double Q, double dt, std::size_t cutoff) {
    if (!(dt > 0.0)) throw std::invalid_argument("tilde_e_demo: dt must be positive");
    if (x0 == 0.0 && y0 == 0.0 && Q == 0.0) throw std::invalid_argument("tilde_e_demo: trivial rest point");
    const double rest = Q - (x0 * x0 + y0 * y0);
    if (rest < -1e-14 * std::max(Q, 1.0)) {
        throw std::invalid_argument("tilde_e_demo: need Q >= x0^2 + y0^2");
    }
    if (cutoff < 1) throw std::invalid_argument("tilde_e_demo: cutoff must be >= 1");

    SpectrumPlus u(cutoff);
    u[0] = cplx(x0, y0);
    u[1] = std::sqrt(std::max(rest, 0.0));

    // y' <= -y^2 - 3x^2: y > 0 blows up backward, y <= 0 forward.
    const double direction = y0 > 0.0 ? -1.0 : 1.0;
    const double horizon = 1.5 * (y0 != 0.0 ? 1.0 / std::abs(y0) : 2.0 / std::sqrt(Q));
    constexpr double threshold = 1e6;
    constexpr double step_fraction = 1e-3;

    TildeEResult out;
    double t = 0.0;
    auto sample = [&] {
        double q = 0.0;
        for (cplx a : u.coeffs()) q += std::norm(a);
        out.path.push_back({t, u[0].real(), u[0].imag(), q});
    };
    sample();
    std::size_t steps = 0;
    while (std::abs(t) < horizon) {
        double wiener = 0.0;
        for (cplx a : u.coeffs()) wiener += std::abs(a);
        const double h = std::min(dt, step_fraction / wiener);
        u = rk6_step(u, direction * h, [](const SpectrumPlus& v) { return tilde_e_rhs(v); });
        t += direction * h;
        if (!u.is_finite()) throw std::runtime_error("tilde_e_demo: non-finite state before threshold");
        if (++steps % 64 == 0) sample();
        if (std::abs(u[0].imag()) > threshold) {
            sample();
            out.blowup_time = t;
            return out;
        }
    }
    throw std::runtime_error("tilde_e_demo: no blow-up within |t| < " + std::to_string(horizon));
}

}  // namespace qszego
