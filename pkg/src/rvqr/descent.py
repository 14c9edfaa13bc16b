"""Accelerated gradient descent with backtracking and function-value restart.

Shared by the transport-dual solver and the smoothed pinball baseline. The
momentum schedule is t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2 with extrapolation
y = x + ((t_k - 1)/t_{k+1})(x - x_prev).

Once the sufficient-decrease quantity drops below the objective's own
floating-point resolution, line-search decisions become noise; the loop then
switches to a terminal polish phase of plain gradient steps accepted on
gradient-norm descent, which needs no objective comparisons.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

SUFFICIENT_DECREASE = 1e-4
STEP_GROWTH = 2.0
STEP_SHRINK = 0.5
MIN_STEP = 1e-18
F_RESOLUTION = 4e-16


@dataclass
class DescentResult:
    x: np.ndarray
    fun: float
    grad_inf: float
    iterations: int
    converged: bool
    n_restarts: int = 0
    trace: list = field(default_factory=list)


def estimate_lipschitz(grad, x0, n_iter=20, delta=1e-6, seed=0):
    """Largest Hessian eigenvalue via power iteration on finite-difference
    Hessian-vector products."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(x0.shape)
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(n_iter):
        hv = (grad(x0 + delta * v) - grad(x0 - delta * v)) / (2 * delta)
        norm = np.linalg.norm(hv)
        if norm == 0:
            return 1.0
        lam = norm
        v = hv / norm
    return lam


def _backtrack(fun, x, fx, g, step):
    """Halve the step until the sufficient-decrease condition holds.

    Returns (x_new, f_new, step, resolved): resolved is False when the
    required decrease is smaller than the objective's rounding error, i.e.
    the test has lost meaning.
    """
    gsq = float(g @ g)
    while step > MIN_STEP:
        need = SUFFICIENT_DECREASE * step * gsq
        if need < F_RESOLUTION * max(abs(fx), 1.0):
            return x, fx, step, False
        x_new = x - step * g
        f_new = fun(x_new)
        if f_new <= fx - need:
            return x_new, f_new, step, True
        step *= STEP_SHRINK
    return x, fx, step, False


def _polish(fun, grad, x, g, step, tol, budget):
    """Plain gradient steps accepted when the gradient 2-norm does not grow."""
    gn = float(np.linalg.norm(g))
    it = 0
    while it < budget:
        it += 1
        x_new = x - step * g
        g_new = grad(x_new)
        gn_new = float(np.linalg.norm(g_new))
        if gn_new <= gn:
            x, g, gn = x_new, g_new, gn_new
            step *= 1.25
            if float(np.abs(g).max()) <= tol:
                return x, g, it, True
        else:
            step *= STEP_SHRINK
            if step < MIN_STEP:
                break
    return x, g, it, float(np.abs(g).max()) <= tol


def accelerated_minimize(
    fun,
    grad,
    x0,
    tol=1e-8,
    max_iter=10000,
    step_mode="backtracking",
    restart=True,
    record_trace=False,
):
    """Minimize a smooth convex function; stops when the gradient inf-norm
    at the current iterate falls below tol.

    With restart=True the recorded objective sequence is nonincreasing: any
    momentum-induced increase triggers a restart replaced by a plain
    backtracked gradient step from the previous iterate.
    """
    if step_mode not in ("backtracking", "fixed"):
        raise ConfigError(f"unknown step_mode {step_mode!r}")
    x = np.asarray(x0, dtype=float).copy()
    x_prev = x.copy()
    tk = 1.0
    fx = fun(x)
    step = 1.0
    if step_mode == "fixed":
        step = 1.0 / max(estimate_lipschitz(grad, x), 1e-12)
    n_restarts = 0
    trace = [fx] if record_trace else []

    g = grad(x)
    ginf = float(np.abs(g).max()) if g.size else 0.0
    if ginf <= tol or x.size == 0:
        return DescentResult(x, fx, ginf, 0, True, 0, trace)

    it = 0
    while it < max_iter:
        it += 1
        tk_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        y = x + ((tk - 1.0) / tk_next) * (x - x_prev)
        gy = grad(y)
        if step_mode == "backtracking":
            fy = fun(y)
            x_new, f_new, step, resolved = _backtrack(fun, y, fy, gy, step * STEP_GROWTH)
            if not resolved:
                # objective differences hit the rounding floor: polish with
                # gradient-norm-monotone plain descent
                x, g, used, converged = _polish(fun, grad, x, g, step, tol,
                                                max_iter - it)
                it += used
                fx = fun(x)
                if record_trace:
                    trace.append(fx)
                return DescentResult(x, fx, float(np.abs(g).max()), it,
                                     converged, n_restarts, trace)
        else:
            x_new = y - step * gy
            f_new = fun(x_new)

        if restart and f_new > fx:
            # momentum overshot: restart from the last good iterate
            n_restarts += 1
            tk_next = 1.0
            if step_mode == "backtracking":
                x_new, f_new, step, resolved = _backtrack(fun, x, fx, g, step)
                if not resolved:
                    x, g, used, converged = _polish(fun, grad, x, g, step, tol,
                                                    max_iter - it)
                    it += used
                    fx = fun(x)
                    if record_trace:
                        trace.append(fx)
                    return DescentResult(x, fx, float(np.abs(g).max()), it,
                                         converged, n_restarts, trace)
            else:
                x_new = x - step * g
                f_new = fun(x_new)

        x_prev = x
        x = x_new
        fx = f_new
        tk = tk_next
        if record_trace:
            trace.append(fx)

        g = grad(x)
        ginf = float(np.abs(g).max())
        if ginf <= tol:
            return DescentResult(x, fx, ginf, it, True, n_restarts, trace)

    return DescentResult(x, fx, ginf, max_iter, False, n_restarts, trace)
