"""Reference computations that share no code with the package under test."""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp


def ode_response(gain, a2, a1, a0, delay_samples, dt, inputs):
    """Sampled output of gain/(a2 s^2 + a1 s + a0) e^{-delay s} under piecewise-constant input.

    Returns y at t = dt, 2 dt, ..., len(inputs) dt, integrating the second-order
    ODE interval by interval with tight tolerances.
    """
    x = np.zeros(2)
    out = []
    for k in range(len(inputs)):
        u_d = inputs[k - delay_samples] if k >= delay_samples else 0.0

        def rhs(_t, z, u=u_d):
            return [z[1], (u - a1 * z[1] - a0 * z[0]) / a2]

        sol = solve_ivp(rhs, (0.0, dt), x, method="RK45", rtol=1e-11, atol=1e-13, max_step=1e-1)
        x = sol.y[:, -1]
        out.append(gain * x[0])
    return np.array(out)


def double_pole_step(t, gain=0.3, pole=0.2, delay=10.0):
    """Closed-form unit-step response of gain/(s/pole + 1)^2 delayed by ``delay``."""
    tau = np.maximum(np.asarray(t, dtype=float) - delay, 0.0)
    return gain * (1.0 - np.exp(-pole * tau) * (1.0 + pole * tau))


def naive_mlp(weights, biases, x, out_act):
    """Straight-line loop evaluation of a rectifier MLP for a single input vector."""
    h = [float(v) for v in x]
    n_layers = len(weights)
    for li in range(n_layers):
        W, b = weights[li], biases[li]
        nxt = []
        for j in range(W.shape[1]):
            acc = float(b[j])
            for i in range(W.shape[0]):
                acc += h[i] * float(W[i, j])
            if li < n_layers - 1:
                acc = acc if acc > 0 else 0.0
            elif out_act == "tanh":
                acc = float(np.tanh(acc))
            nxt.append(acc)
        h = nxt
    return np.array(h)
