"""Smoothed transport dual with mean-independence: objective, gradients,
gauge fixing, accelerated minimization and coupling extraction.

Conventions: psi has one entry per observation j, b one row per rank node i.
theta_ij = [u_i.y_j - b_i.x_j - psi_j] / epsilon, and the dual objective is

    J(psi, b) = sum_j psi_j nu_j + eps * sum_i mu_i log sum_j exp(theta_ij).

All log-sum-exp / softmax reductions are row-max stabilized (see kernels).
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, NonConvergenceError, RvqrError
from .descent import accelerated_minimize
from .measures import Dataset, RankGrid

MASS_EXPORT_FLOOR = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float
    tol: float = 1e-9
    max_iter: int = 50000
    step_mode: str = "backtracking"
    restart: str = "function-value"
    phi_mode: str = "soft"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.tol <= 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.step_mode not in ("fixed", "backtracking"):
            raise ConfigError(f"unknown step_mode {self.step_mode!r}")
        if self.restart not in ("none", "function-value"):
            raise ConfigError(f"unknown restart mode {self.restart!r}")
        if self.phi_mode not in ("soft", "hard"):
            raise ConfigError(f"unknown phi_mode {self.phi_mode!r}")


@dataclass(frozen=True)
class DualVariables:
    psi: np.ndarray
    b: np.ndarray
    gauge: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float).ravel())
        object.__setattr__(self, "b", np.atleast_2d(np.asarray(self.b, dtype=float)))

    @classmethod
    def zeros(cls, n_obs, n_nodes, n_cov):
        return cls(psi=np.zeros(n_obs), b=np.zeros((n_nodes, n_cov)))


@dataclass(frozen=True)
class Coupling:
    alpha: np.ndarray
    row_residual: np.ndarray
    col_residual: np.ndarray
    mi_residual: np.ndarray


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    objective: float
    grad_inf: float
    duality_gap: float
    wall_time: float
    converged: bool
    n_restarts: int = 0

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "objective": self.objective,
            "grad_inf": self.grad_inf,
            "duality_gap": self.duality_gap,
            "wall_time": self.wall_time,
            "converged": self.converged,
            "n_restarts": self.n_restarts,
        }


def _scores(dv, data, grid):
    """I x J matrix u_i.y_j - b_i.x_j (psi not yet subtracted)."""
    S = grid.U @ data.Y.T
    if data.n_cov:
        S -= dv.b @ data.X.T
    return S


def theta(dv, data, grid, epsilon):
    return (_scores(dv, data, grid) - dv.psi[None, :]) / epsilon


def dual_objective(dv, data, grid, epsilon):
    if not (np.isfinite(dv.psi).all() and np.isfinite(dv.b).all()):
        raise RvqrError("dual variables contain NaN or Inf")
    S = _scores(dv, data, grid)
    lse, _, _ = kernels.dual_terms(S, dv.psi, grid.mu, data.nu, data.X, epsilon)
    return float(dv.psi @ data.nu + epsilon * (grid.mu @ lse))


def dual_gradient(dv, data, grid, epsilon):
    S = _scores(dv, data, grid)
    _, grad_psi, grad_b = kernels.dual_terms(S, dv.psi, grid.mu, data.nu, data.X, epsilon)
    return grad_psi, grad_b


def normalize(dv, data, grid, epsilon):
    """Pin b_1 = 0 via (b, psi) <- (b - b_1, psi + b_1.x), then shift psi so
    that sum_{ij} exp(theta_ij) = 1. Leaves the objective unchanged."""
    b1 = dv.b[0].copy()
    b = dv.b - b1[None, :]
    psi = dv.psi + (data.X @ b1 if data.n_cov else 0.0)
    S = grid.U @ data.Y.T
    if data.n_cov:
        S = S - b @ data.X.T
    lam = epsilon * kernels.logsumexp_all(S, psi, epsilon)
    psi = psi + lam
    return DualVariables(psi=psi, b=b, gauge={"b_pin": b1, "psi_shift": float(lam)})


def extract_coupling(dv, data, grid, epsilon):
    S = _scores(dv, data, grid)
    alpha = kernels.coupling(S, dv.psi, grid.mu, epsilon)
    row_residual = alpha.sum(axis=1) - grid.mu
    col_residual = alpha.sum(axis=0) - data.nu
    mi_residual = alpha @ data.X if data.n_cov else np.zeros((grid.n_nodes, 0))
    return Coupling(alpha=alpha, row_residual=row_residual,
                    col_residual=col_residual, mi_residual=mi_residual)


def primal_value(coupling, grid, data, epsilon):
    """Regularized primal sum alpha (u.y) - eps sum alpha log alpha, with the
    0 log 0 = 0 convention."""
    a = coupling.alpha
    gain = float(np.sum(a * (grid.U @ data.Y.T)))
    pos = a > 0
    ent = float(np.sum(a[pos] * np.log(a[pos])))
    return gain - epsilon * ent


def dual_value_centered(dv, data, grid, epsilon):
    """Dual objective on the same scale as primal_value.

    The log-sum-exp objective drops the constant -eps * sum_i mu_i log mu_i
    carried by the exact Lagrangian dual; adding it back makes the duality
    gap vanish at the optimum.
    """
    return dual_objective(dv, data, grid, epsilon) - epsilon * float(
        grid.mu @ np.log(grid.mu)
    )


def hard_potential(dv, data, grid):
    """phi_i = max_j (u_i.y_j - b_i.x_j - psi_j)."""
    S = _scores(dv, data, grid)
    return (S - dv.psi[None, :]).max(axis=1)


def soft_potential(dv, data, grid, epsilon):
    """Smoothed counterpart eps * log sum_j exp of the same arguments."""
    S = _scores(dv, data, grid)
    lse, _, _ = kernels.dual_terms(S, dv.psi, grid.mu, data.nu, data.X, epsilon)
    return epsilon * lse


def solve(data, grid, cfg):
    """Accelerated gradient descent on the smoothed dual from psi=0, b=0.

    Returns (DualVariables, Coupling, SolveReport); the dual variables come
    back gauge-normalized. Raises NonConvergenceError (carrying the best
    iterate) if max_iter is hit with the gradient above tol.
    """
    if grid.n_dim != data.n_dim:
        raise ConfigError(
            f"grid dimension {grid.n_dim} does not match response dimension {data.n_dim}"
        )
    if data.n_cov and np.abs(data.nu @ data.X).max() > 1e-8:
        raise ConfigError("covariates must be centered before solving")

    J, I, N = data.n_obs, grid.n_nodes, data.n_cov
    UY = grid.U @ data.Y.T

    def unpack(z):
        return z[:J], z[J:].reshape(I, N)

    def fun(z):
        psi, b = unpack(z)
        S = UY - b @ data.X.T if N else UY
        lse, _, _ = kernels.dual_terms(S, psi, grid.mu, data.nu, data.X, cfg.epsilon)
        return float(psi @ data.nu + cfg.epsilon * (grid.mu @ lse))

    def grad(z):
        psi, b = unpack(z)
        S = UY - b @ data.X.T if N else UY
        _, gpsi, gb = kernels.dual_terms(S, psi, grid.mu, data.nu, data.X, cfg.epsilon)
        return np.concatenate([gpsi, gb.ravel()])

    start = time.perf_counter()
    res = accelerated_minimize(
        fun, grad, np.zeros(J + I * N),
        tol=cfg.tol, max_iter=cfg.max_iter,
        step_mode=cfg.step_mode, restart=(cfg.restart == "function-value"),
    )
    wall = time.perf_counter() - start

    psi, b = unpack(res.x)
    dv = normalize(DualVariables(psi=psi, b=b), data, grid, cfg.epsilon)
    coupling = extract_coupling(dv, data, grid, cfg.epsilon)
    gap = abs(dual_value_centered(dv, data, grid, cfg.epsilon)
              - primal_value(coupling, grid, data, cfg.epsilon))
    report = SolveReport(
        iterations=res.iterations, objective=res.fun, grad_inf=res.grad_inf,
        duality_gap=gap, wall_time=wall, converged=res.converged,
        n_restarts=res.n_restarts,
    )
    if not res.converged:
        raise NonConvergenceError(
            f"gradient inf-norm {res.grad_inf:.3e} above tol {cfg.tol:g} "
            f"after {cfg.max_iter} iterations",
            best=(dv, coupling), report=report,
        )
    return dv, coupling, report


# --- fitted-model persistence -------------------------------------------------

def model_to_json_dict(dv, data, grid, cfg, report):
    return {
        "epsilon": cfg.epsilon,
        "phi_mode": cfg.phi_mode,
        "grid": grid.to_json_dict(),
        "psi": dv.psi.tolist(),
        "b": dv.b.tolist(),
        "x_mean": data.x_mean.tolist(),
        "x_names": list(data.x_names),
        "y_names": list(data.y_names),
        "data_meta": dict(data.meta),
        "report": report.to_dict(),
    }


def save_model(path, dv, data, grid, cfg, report):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json_dict(dv, data, grid, cfg, report), fh, indent=1)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    dv = DualVariables(psi=np.array(doc["psi"]), b=np.array(doc["b"]))
    grid = RankGrid.from_json_dict(doc["grid"])
    return doc, dv, grid


def coupling_to_csv(path, coupling, threshold=MASS_EXPORT_FLOOR):
    """Export (i, j, alpha_ij) triples above a mass threshold."""
    a = coupling.alpha
    ii, jj = np.nonzero(a > threshold)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i,j,alpha\n")
        for i, j in zip(ii, jj):
            fh.write(f"{i},{j},{a[i, j]:.17g}\n")
