"""Conditional quantile queries on a fitted transport coupling.

The quantile at covariate x and rank node u_i is the coupling-weighted
conditional mean of Y over the observations matching x (exactly, or within a
Euclidean ball of radius eta). The "hard" variant replaces the weighted mean
by the response carrying the largest weight.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyBallError, InsufficientMassError
from .measures import value_scale

MASS_FLOOR = 1e-14


@dataclass(frozen=True)
class QuantileModel:
    alpha: np.ndarray          # I x J coupling masses
    X: np.ndarray              # J x N centered covariates
    Y: np.ndarray              # J x d responses
    U: np.ndarray              # I x d rank nodes
    mu: np.ndarray
    nu: np.ndarray
    epsilon: float
    x_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def from_fit(cls, coupling, data, grid, epsilon):
        return cls(alpha=coupling.alpha, X=data.X, Y=data.Y, U=grid.U,
                   mu=grid.mu, nu=data.nu, epsilon=float(epsilon),
                   x_mean=data.x_mean)

    @property
    def n_nodes(self):
        return self.U.shape[0]

    @property
    def n_dim(self):
        return self.Y.shape[1]

    def _exact_group(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if self.X.shape[1] == 0:
            return np.arange(self.X.shape[0])
        mask = np.all(self.X == x[None, :], axis=1)
        if not mask.any():
            raise ConfigError(
                f"covariate value {x.tolist()} does not occur in the data; "
                "use the ball variant"
            )
        return np.nonzero(mask)[0]

    def _ball_group(self, x, eta):
        x = np.asarray(x, dtype=float).ravel()
        if self.X.shape[1] == 0:
            return np.arange(self.X.shape[0])
        dist = np.linalg.norm(self.X - x[None, :], axis=1)
        idx = np.nonzero(dist <= eta)[0]
        if idx.size == 0:
            raise EmptyBallError(x, eta, float(dist.min()))
        return idx

    def _mean_over(self, idx, i, hard=False):
        w = self.alpha[i, idx]
        total = float(w.sum())
        if total < MASS_FLOOR:
            raise InsufficientMassError(None, i, total)
        if hard:
            return self.Y[idx[int(np.argmax(w))]].copy()
        return (w @ self.Y[idx]) / total


def default_eta(model):
    """Half the median nearest-neighbor distance between distinct covariates."""
    Xd = np.unique(model.X, axis=0)
    if Xd.shape[0] < 2:
        return 0.0
    d2 = np.linalg.norm(Xd[:, None, :] - Xd[None, :, :], axis=2)
    np.fill_diagonal(d2, np.inf)
    return 0.5 * float(np.median(d2.min(axis=1)))


def conditional_quantile(model, x, i, hard=False):
    """E[Y | X = x, U = u_i] under the fitted coupling."""
    return model._mean_over(model._exact_group(x), i, hard=hard)


def ball_conditional_quantile(model, x, eta, i, hard=False):
    """E[Y | X in B_eta(x), U = u_i]; eta = 0 reduces to the exact variant."""
    if eta < 0:
        raise ConfigError("eta must be nonnegative")
    return model._mean_over(model._ball_group(x, eta), i, hard=hard)


def quantile_table(model, x_probes, i_set=None, eta=None, hard=False):
    """Rows (x-probe components, u_i components, quantile components).

    Deterministic given a fitted model. Probes are in the model's (centered)
    covariate coordinates.
    """
    if i_set is None:
        i_set = range(model.n_nodes)
    if eta is None:
        eta = default_eta(model)
    rows = []
    for x in np.atleast_2d(np.asarray(x_probes, dtype=float)):
        for i in i_set:
            q = ball_conditional_quantile(model, x, eta, i, hard=hard)
            rows.append((tuple(x), tuple(model.U[i]), tuple(np.atleast_1d(q))))
    return rows


def table_to_csv(path, rows, x_names=None, y_names=None):
    if not rows:
        raise ConfigError("empty quantile table")
    n_x = len(rows[0][0])
    n_d = len(rows[0][2])
    xh = list(x_names) if x_names else [f"x_{k + 1}" for k in range(n_x)]
    head = xh + [f"u_{k + 1}" for k in range(n_d)] + [f"q_{k + 1}" for k in range(n_d)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(head) + "\n")
        for x, u, q in rows:
            cells = [f"{v:.17g}" for v in (*x, *u, *q)]
            fh.write(",".join(cells) + "\n")


def monotonicity_diagnostic(model, x_probe, eta=None, tol=None):
    """List rank-node pairs where the fitted quantile map fails monotonicity.

    d = 1: adjacent nodes (sorted by u) where Q decreases by more than tol.
    d >= 2: node pairs with (Q(u1) - Q(u2)) . (u1 - u2) < -tol.
    """
    if eta is None:
        eta = default_eta(model)
    if tol is None:
        tol = 1e-6 * value_scale(model.Y)
    Q = np.array([
        ball_conditional_quantile(model, x_probe, eta, i)
        for i in range(model.n_nodes)
    ])
    violations = []
    if model.n_dim == 1:
        order = np.argsort(model.U[:, 0])
        for a, b in zip(order[:-1], order[1:]):
            drop = float(Q[a, 0] - Q[b, 0])
            if drop > tol:
                violations.append((int(a), int(b), drop))
    else:
        for a in range(model.n_nodes):
            for b in range(a + 1, model.n_nodes):
                val = float((Q[a] - Q[b]) @ (model.U[a] - model.U[b]))
                if val < -tol:
                    violations.append((int(a), int(b), val))
    return violations
