"""Fixed-effects panel VAR estimated by within-transformation OLS.

The model for unit ``i`` at time ``t`` is::

    y_it = a_i + G_1 y_i,t-1 + ... + G_p y_i,t-p + e_it

with ``a_i = c + U_i`` and ``sum_i U_i = 0``.  Each equation is estimated by
OLS on data demeaned within unit, which is numerically identical to the
least-squares dummy-variable regression.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InsufficientDataError, PanelError, SingularMatrixError
from .panel import PanelDataset, Period


def _as_cube(panel, variables: Sequence[str] | None):
    """(cube, variables, units, periods) from a dataset or an (N, T, K) array."""
    if isinstance(panel, PanelDataset):
        variables = tuple(variables) if variables is not None else panel.indicators
        cube = panel.cube(variables)
        units, periods = panel.units, panel.periods
    else:
        cube = np.array(panel, dtype=float)
        if cube.ndim != 3:
            raise PanelError("panel array must have shape (units, periods, variables)")
        if variables is None:
            variables = tuple(f"y{k + 1}" for k in range(cube.shape[2]))
        units, periods = tuple(str(i) for i in range(cube.shape[0])), None
    if cube.size == 0:
        raise PanelError("empty panel")
    if len(variables) != cube.shape[2]:
        raise PanelError("variable names do not match the panel")
    if np.isnan(cube).any():
        raise PanelError("unbalanced panel: missing cells")
    return cube, tuple(variables), units, periods


def within_demean(panel) -> tuple[np.ndarray, np.ndarray]:
    """Subtract each (unit, variable) time mean.

    Returns the demeaned (N, T, K) cube and the (N, K) unit means.
    """
    cube = panel.values if isinstance(panel, PanelDataset) else np.asarray(panel, dtype=float)
    if cube.ndim == 2:
        cube = cube[:, :, None]
    if cube.size == 0:
        raise PanelError("empty panel")
    if np.isnan(cube).any():
        raise PanelError("unbalanced panel: missing cells")
    means = cube.mean(axis=1)
    return cube - means[:, None, :], means


def lagged_design(cube: np.ndarray, lags: int, start: int | None = None):
    """Per-unit regressand rows ``t >= start`` and their ``lags`` lags.

    Returns ``Y`` with shape (N, n, K) and ``X`` with shape (N, n, K*lags),
    columns ordered lag 1 (all variables), lag 2, ...
    """
    start = lags if start is None else start
    N, T, K = cube.shape
    Y = cube[:, start:, :]
    X = np.concatenate([cube[:, start - j:T - j, :] for j in range(1, lags + 1)], axis=2)
    return Y, X


class Stability(NamedTuple):
    moduli: np.ndarray
    stable: bool


@dataclass(frozen=True)
class PvarModel:
    variables: tuple[str, ...]
    lags: int
    lag_matrices: np.ndarray  # (p, K, K); lag_matrices[j-1][k, m] = effect of var m at lag j on eq k
    sigma: np.ndarray  # residual covariance (K, K)
    intercept: np.ndarray = field(default=None)  # (K,)
    fixed_effects: np.ndarray = field(default=None, repr=False)  # (N, K), sum zero over units
    std_errors: np.ndarray = field(default=None, repr=False)  # (K, K*p), same layout as coefficients()
    intercept_se: np.ndarray = field(default=None, repr=False)
    r_squared: np.ndarray = field(default=None)
    f_statistic: np.ndarray = field(default=None)
    nobs: int = 0
    dof: int = 0
    fe_dof: bool = False
    units: tuple[str, ...] = ()
    sample: tuple[Period, Period] | None = None
    resid: np.ndarray = field(default=None, repr=False)  # (N, T-p, K)

    @classmethod
    def from_coefficients(cls, lag_matrices, sigma, variables: Sequence[str] | None = None) -> "PvarModel":
        """A model known only through its dynamics, e.g. a data-generating process."""
        g = np.asarray(lag_matrices, dtype=float)
        if g.ndim == 2:
            g = g[None]
        k = g.shape[1]
        variables = tuple(variables) if variables is not None else tuple(f"y{i + 1}" for i in range(k))
        return cls(variables, g.shape[0], g, np.asarray(sigma, dtype=float), np.zeros(k))

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def coefficients(self) -> np.ndarray:
        """(K, K*p) matrix; row k holds equation k's lag coefficients."""
        return np.concatenate(list(self.lag_matrices), axis=1)

    @property
    def t_stats(self) -> np.ndarray:
        return self.coefficients() / self.std_errors

    @property
    def intercept_t(self) -> np.ndarray:
        return self.intercept / self.intercept_se

    @property
    def unit_intercepts(self) -> np.ndarray:
        return self.intercept + self.fixed_effects

    def regressor_names(self) -> list[str]:
        return [f"{v}(-{j})" for j in range(1, self.lags + 1) for v in self.variables]


def _solve(XtX: np.ndarray, XtY: np.ndarray):
    w = np.linalg.eigvalsh(XtX)
    if w.min() <= 1e-12 * max(w.max(), 1e-300):
        raise SingularMatrixError("regressor matrix is rank deficient")
    inv = np.linalg.inv(XtX)
    return inv @ XtY, inv


def fit(panel, lags: int = 1, variables: Sequence[str] | None = None,
        fe_dof: bool = False) -> PvarModel:
    """Estimate a fixed-effects panel VAR(``lags``) equation by equation.

    ``fe_dof`` subtracts the N estimated unit effects (instead of a single
    intercept) from the residual degrees of freedom.
    """
    cube, variables, units, periods = _as_cube(panel, variables)
    N, T, K = cube.shape
    if lags < 1:
        raise ValueError("lag order must be >= 1")
    if T - lags < 10:
        raise InsufficientDataError(f"{T} periods leave fewer than 10 usable rows at lag {lags}")
    Yr, Xr = lagged_design(cube, lags)
    ybar_i, xbar_i = Yr.mean(axis=1), Xr.mean(axis=1)
    Yd = (Yr - ybar_i[:, None]).reshape(-1, K)
    Xd = (Xr - xbar_i[:, None]).reshape(-1, K * lags)
    n, m = Xd.shape
    B, inv = _solve(Xd.T @ Xd, Xd.T @ Yd)  # (Kp, K)
    E = Yd - Xd @ B
    dof = n - m - (N if fe_dof else 1)
    if dof <= 0:
        raise InsufficientDataError("no residual degrees of freedom")
    sigma = E.T @ E / dof
    sigma = 0.5 * (sigma + sigma.T)
    se = np.sqrt(np.outer(np.diag(sigma), np.diag(inv)))  # (K, Kp)
    ssr = np.sum(E * E, axis=0)
    sst = np.sum(Yd * Yd, axis=0)
    r2 = 1.0 - ssr / sst
    fstat = (r2 / m) / ((1.0 - r2) / dof)

    a_i = ybar_i - xbar_i @ B  # unit intercepts (N, K)
    ybar, xbar = Yr.reshape(-1, K).mean(axis=0), Xr.reshape(-1, K * lags).mean(axis=0)
    c = ybar - xbar @ B
    c_se = np.sqrt(np.diag(sigma) * (1.0 / n + xbar @ inv @ xbar))
    coef = B.T  # (K, Kp)
    gammas = np.stack([coef[:, j * K:(j + 1) * K] for j in range(lags)])
    sample = (periods[lags], periods[-1]) if periods else None
    return PvarModel(
        variables=variables, lags=lags, lag_matrices=gammas, sigma=sigma,
        intercept=c, fixed_effects=a_i - c, std_errors=se, intercept_se=c_se,
        r_squared=r2, f_statistic=fstat, nobs=n, dof=dof, fe_dof=fe_dof, units=units, sample=sample,
        resid=E.reshape(N, T - lags, K),
    )


def information_criterion(sigma_ml: np.ndarray, n: int, n_params: int, criterion: str) -> float:
    sign, logdet = np.linalg.slogdet(sigma_ml)
    if sign <= 0:
        return math.inf
    if criterion == "aic":
        return logdet + 2.0 * n_params / n
    if criterion == "bic":
        return logdet + math.log(n) * n_params / n
    raise ValueError(f"criterion must be 'aic' or 'bic', got {criterion!r}")


def select_lag(panel, p_max: int, criterion: str = "bic",
               variables: Sequence[str] | None = None) -> int:
    """Lag order in 1..p_max minimizing the criterion on a common sample.

    Ties go to the smaller order.
    """
    criterion = criterion.lower()
    cube, *_ = _as_cube(panel, variables)
    N, T, K = cube.shape
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    if T - p_max < 10:
        raise InsufficientDataError(f"{T} periods are too few for p_max={p_max}")
    best, best_ic = 1, math.inf
    for p in range(1, p_max + 1):
        Yr, Xr = lagged_design(cube, p, start=p_max)
        Yd = (Yr - Yr.mean(axis=1, keepdims=True)).reshape(-1, K)
        Xd = (Xr - Xr.mean(axis=1, keepdims=True)).reshape(-1, K * p)
        B, _ = _solve(Xd.T @ Xd, Xd.T @ Yd)
        E = Yd - Xd @ B
        n = Yd.shape[0]
        ic = information_criterion(E.T @ E / n, n, K * K * p, criterion)
        if ic < best_ic - 1e-12:
            best, best_ic = p, ic
    return best


def companion(model_or_lags) -> np.ndarray:
    """(pK, pK) companion matrix of a VAR(p)."""
    g = np.asarray(getattr(model_or_lags, "lag_matrices", model_or_lags), dtype=float)
    if g.ndim == 2:
        g = g[None]
    p, K, _ = g.shape
    A = np.zeros((p * K, p * K))
    A[:K, :] = np.concatenate(list(g), axis=1)
    if p > 1:
        A[K:, :-K] = np.eye((p - 1) * K)
    return A


def stability(model) -> Stability:
    """Companion eigenvalue moduli, descending; stable iff all are below one."""
    moduli = np.sort(np.abs(np.linalg.eigvals(companion(model))))[::-1]
    return Stability(moduli, bool(moduli[0] < 1.0))


def residuals(model: PvarModel, panel) -> np.ndarray:
    """Residuals of the within-transformed equations, shape (N, T-p, K)."""
    cube, *_ = _as_cube(panel, model.variables if isinstance(panel, PanelDataset) else None)
    N, T, K = cube.shape
    if K != model.n_vars or (model.units and N != len(model.units)) or (
        model.resid is not None and model.resid.shape[1] != T - model.lags
    ):
        raise PanelError("panel does not match the estimation sample of the model")
    Yr, Xr = lagged_design(cube, model.lags)
    Yd = Yr - Yr.mean(axis=1, keepdims=True)
    Xd = Xr - Xr.mean(axis=1, keepdims=True)
    return Yd - Xd @ model.coefficients().T


# ---------------------------------------------------------------- simulation


def simulate(lag_matrices, sigma, n_units: int, n_periods: int, intercepts=None,
             seed: int = 0, burn: int = 100) -> np.ndarray:
    """Draw an (N, T, K) panel from a Gaussian VAR with unit intercepts.

    ``intercepts`` is (N, K); zero when omitted.  Each unit starts at zero and
    runs ``burn`` discarded periods first.
    """
    g = np.asarray(lag_matrices, dtype=float)
    if g.ndim == 2:
        g = g[None]
    p, K, _ = g.shape
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(np.asarray(sigma, dtype=float))
    a = np.zeros((n_units, K)) if intercepts is None else np.asarray(intercepts, dtype=float)
    total = burn + n_periods
    shocks = rng.standard_normal((n_units, total, K)) @ chol.T
    return recurse(np.zeros((n_units, p, K)), a, g, shocks)[:, burn:]


def recurse(initial: np.ndarray, intercepts: np.ndarray, lag_matrices: np.ndarray,
            shocks: np.ndarray) -> np.ndarray:
    """Run the VAR forward for ``shocks.shape[1]`` periods.

    ``initial`` (N, p, K) holds the presample values in time order; they are
    not part of the output.
    """
    p = lag_matrices.shape[0]
    N, total, K = shocks.shape
    out = np.empty((N, total, K))
    hist = [initial[:, p - 1 - j] for j in range(p)]  # hist[j] = y_{t-1-j}
    for t in range(total):
        y = intercepts + shocks[:, t]
        for j in range(p):
            y = y + hist[j] @ lag_matrices[j].T
        out[:, t] = y
        hist = [y] + hist[:-1]
    return out


# -------------------------------------------------------------------- report


def format_coefficient_block(coef: float, se: float, t: float) -> tuple[str, str, str]:
    return f"{coef:.6f}", f"({se:.5f})", f"[{t:.5f}]"


REPORT_HEADER_PREFIX = ("Regressor", "Row")


def report_rows(model: PvarModel) -> list[list[str]]:
    coef, se, tt = model.coefficients(), model.std_errors, model.t_stats
    rows: list[list[str]] = [list(REPORT_HEADER_PREFIX) + list(model.variables)]
    blocks = [(name, coef[:, j], se[:, j], tt[:, j]) for j, name in enumerate(model.regressor_names())]
    blocks.append(("C", model.intercept, model.intercept_se, model.intercept_t))
    for name, c, s, t in blocks:
        cells = [format_coefficient_block(*x) for x in zip(c, s, t)]
        for r, label in enumerate(("coefficient", "std_err", "t_stat")):
            rows.append([name, label] + [cell[r] for cell in cells])
    rows.append(["R-squared", ""] + [f"{x:.6f}" for x in model.r_squared])
    rows.append(["F-statistic", ""] + [f"{x:.3f}" for x in model.f_statistic])
    span = f"{model.sample[0]} {model.sample[1]}" if model.sample else ""
    rows.append(["Sample (adjusted)", "", span] + [""] * (model.n_vars - 1))
    rows.append(["Included observations", "", str(model.nobs)] + [""] * (model.n_vars - 1))
    return rows


def write_report_csv(model: PvarModel, path) -> Path:
    """Coefficient / (std err) / [t-stat] blocks, one column per equation."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(report_rows(model))
    return path
