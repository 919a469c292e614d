#pragma once

namespace qszego {

/// One classical Runge-Kutta step y -> y(t+h) for an autonomous field f.
/// State needs State + State and double * State.
template <class State, class Field>
State rk4_step(const State& y, double h, Field&& f) {
    const State k1 = f(y);
    const State k2 = f(y + (0.5 * h) * k1);
    const State k3 = f(y + (0.5 * h) * k2);
    const State k4 = f(y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Butcher's seven-stage explicit method of order six.
template <class State, class Field>
State rk6_step(const State& y, double h, Field&& f) {
    const State k1 = f(y);
    const State k2 = f(y + (h / 3.0) * k1);
    const State k3 = f(y + (2.0 * h / 3.0) * k2);
    const State k4 = f(y + (h / 12.0) * (k1 + 4.0 * k2 + (-1.0) * k3));
    const State k5 = f(y + (h / 16.0) * ((-1.0) * k1 + 18.0 * k2 + (-3.0) * k3 + (-6.0) * k4));
    const State k6 = f(y + (h / 8.0) * (9.0 * k2 + (-3.0) * k3 + (-6.0) * k4 + 4.0 * k5));
    const State k7 = f(y + (h / 44.0) * (9.0 * k1 + (-36.0) * k2 + 63.0 * k3 + 72.0 * k4 + (-64.0) * k6));
    return y + (h / 120.0) * (11.0 * (k1 + k7) + 81.0 * (k3 + k4) + (-32.0) * (k5 + k6));
}

}  // namespace qszego
