"""Orthogonalized impulse responses of a fitted panel VAR, with bootstrap bands."""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NotPositiveDefiniteError, PanelfluxError
from .pvar import PvarModel, _as_cube, companion, fit, recurse, stability

log = logging.getLogger(__name__)

IRF_COLUMNS = ("horizon", "shock", "response_var", "value", "lower", "upper")


def cholesky(sigma, tol: float = 1e-10) -> np.ndarray:
    """Lower-triangular ``P`` with ``P @ P.T == sigma`` (Cholesky-Banachiewicz)."""
    a = np.asarray(sigma, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(a, a.T, rtol=0.0, atol=tol * max(1.0, np.abs(a).max())):
        raise ValueError("matrix is not symmetric")
    k = a.shape[0]
    L = np.zeros_like(a)
    for j in range(k):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if d <= tol:
            raise NotPositiveDefiniteError(j, float(d))
        L[j, j] = math.sqrt(d)
        for i in range(j + 1, k):
            L[i, j] = (a[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


def ma_coefficients(lag_matrices, horizon: int) -> np.ndarray:
    """Moving-average matrices Phi_0..Phi_H by Phi_h = sum_j G_j Phi_{h-j}."""
    g = np.asarray(lag_matrices, dtype=float)
    if g.ndim == 2:
        g = g[None]
    p, K, _ = g.shape
    phi = np.zeros((horizon + 1, K, K))
    phi[0] = np.eye(K)
    for h in range(1, horizon + 1):
        for j in range(1, min(h, p) + 1):
            phi[h] += g[j - 1] @ phi[h - j]
    return phi


def ma_coefficients_companion(lag_matrices, horizon: int) -> np.ndarray:
    """Same as :func:`ma_coefficients`, via powers of the companion matrix."""
    A = companion(lag_matrices)
    K = np.asarray(lag_matrices).shape[-1]
    out = np.empty((horizon + 1, K, K))
    power = np.eye(A.shape[0])
    for h in range(horizon + 1):
        out[h] = power[:K, :K]
        power = A @ power
    return out


def _ordering_index(variables: Sequence[str], ordering: Sequence[str] | None) -> list[int]:
    if ordering is None:
        return list(range(len(variables)))
    ordering = list(ordering)
    if sorted(ordering) != sorted(variables):
        raise ValueError(f"ordering {ordering} must be a permutation of {list(variables)}")
    return [list(variables).index(v) for v in ordering]


def impact_matrix(sigma, perm: Sequence[int]) -> np.ndarray:
    """Cholesky factor for the given variable ordering, in the original variable order.

    Column ``j`` is the impact of a one-s.d. shock to variable ``j``.
    """
    sigma = np.asarray(sigma, dtype=float)
    perm = list(perm)
    L = cholesky(sigma[np.ix_(perm, perm)])
    P = np.zeros_like(sigma)
    P[np.ix_(perm, perm)] = L
    return P


@dataclass(frozen=True)
class IrfResult:
    """``responses[h, i, j]``: response of variable i at horizon h to a one-s.d. shock in j."""

    variables: tuple[str, ...]
    ordering: tuple[str, ...]
    responses: np.ndarray
    lower: np.ndarray | None = field(default=None, repr=False)
    upper: np.ndarray | None = field(default=None, repr=False)
    level: float | None = None
    dropped: int = 0

    @property
    def horizon(self) -> int:
        return self.responses.shape[0] - 1

    def path(self, response: str, shock: str) -> np.ndarray:
        i, j = self.variables.index(response), self.variables.index(shock)
        return self.responses[:, i, j]

    def band(self, response: str, shock: str) -> tuple[np.ndarray, np.ndarray] | None:
        if self.lower is None:
            return None
        i, j = self.variables.index(response), self.variables.index(shock)
        return self.lower[:, i, j], self.upper[:, i, j]

    def with_bands(self, lower, upper, level: float, dropped: int = 0) -> "IrfResult":
        return IrfResult(self.variables, self.ordering, self.responses, lower, upper, level, dropped)


def orthogonal_responses(lag_matrices, sigma, horizon: int, perm: Sequence[int]) -> np.ndarray:
    return ma_coefficients(lag_matrices, horizon) @ impact_matrix(sigma, perm)


def impulse_response(model: PvarModel, horizon: int = 10,
                     ordering: Sequence[str] | None = None) -> IrfResult:
    """Responses to orthogonalized one-standard-deviation shocks, h = 0..horizon.

    ``ordering`` is the Cholesky order (default: the model's variable order).
    An unstable model only triggers a warning.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    perm = _ordering_index(model.variables, ordering)
    if not stability(model).stable:
        warnings.warn("VAR is not stable; impulse responses will not die out", RuntimeWarning, stacklevel=2)
    resp = orthogonal_responses(model.lag_matrices, model.sigma, horizon, perm)
    return IrfResult(model.variables, tuple(model.variables[i] for i in perm), resp)


def bootstrap_bands(model: PvarModel, panel, reps: int = 200, horizon: int = 10,
                    level: float = 0.90, ordering: Sequence[str] | None = None,
                    seed: int = 0) -> IrfResult:
    """Residual-bootstrap percentile bands around the point responses.

    Each replicate resamples every unit's residual rows with replacement,
    rebuilds the series from the unit's first ``p`` observations with the
    estimated coefficients and unit intercepts, refits and recomputes the
    responses.  Bands are percentiles of the replicate responses shifted so
    the replicate median sits on the point estimate.  Replicates whose refit
    fails are dropped and counted.
    """
    if reps < 100:
        raise ValueError("reps must be >= 100")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    point = impulse_response(model, horizon, ordering)
    perm = _ordering_index(model.variables, ordering)
    cube, *_ = _as_cube(panel, model.variables if hasattr(panel, "indicators") else None)
    N, T, K = cube.shape
    p = model.lags
    resid = model.resid
    if resid is None or resid.shape != (N, T - p, K):
        raise PanelfluxError("model residuals do not match the panel")
    a_i = model.unit_intercepts
    draws = []
    dropped = 0
    for child in np.random.SeedSequence(seed).spawn(reps):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, T - p, size=(N, T - p))
        shocks = np.take_along_axis(resid, idx[:, :, None], axis=1)
        sim = np.concatenate([cube[:, :p], recurse(cube[:, :p], a_i, model.lag_matrices, shocks)], axis=1)
        try:
            m = fit(sim, p, fe_dof=model.fe_dof)
            draws.append(orthogonal_responses(m.lag_matrices, m.sigma, horizon, perm))
        except (PanelfluxError, np.linalg.LinAlgError) as exc:
            dropped += 1
            log.warning("bootstrap replicate dropped: %s", exc)
    if not draws:
        raise PanelfluxError("every bootstrap replicate failed")
    draws = np.stack(draws)
    alpha = 0.5 * (1.0 - level)
    dev = draws - np.median(draws, axis=0)
    lower = point.responses + np.quantile(dev, alpha, axis=0)
    upper = point.responses + np.quantile(dev, 1.0 - alpha, axis=0)
    return point.with_bands(lower, upper, level, dropped)


def irf_rows(irf: IrfResult) -> list[list[str]]:
    rows = [list(IRF_COLUMNS)]
    for j, shock in enumerate(irf.variables):
        for i, resp in enumerate(irf.variables):
            for h in range(irf.horizon + 1):
                lo = "" if irf.lower is None else repr(float(irf.lower[h, i, j]))
                hi = "" if irf.upper is None else repr(float(irf.upper[h, i, j]))
                rows.append([str(h), shock, resp, repr(float(irf.responses[h, i, j])), lo, hi])
    return rows


def write_irf_csv(irf: IrfResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(irf_rows(irf))
    return path
