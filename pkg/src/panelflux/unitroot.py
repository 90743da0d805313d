"""Unit-root tests: ADF, Phillips-Perron, Fisher combination and Levin-Lin-Chu.

Deterministic terms are ``"c"`` (constant) or ``"ct"`` (constant and linear
trend).  Per-unit p-values come from MacKinnon's (1994) response surfaces;
the LLC statistic is adjusted with the mean/standard-deviation tables of
Levin, Lin and Chu (2002).
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import InsufficientDataError, PanelError, SingularMatrixError
from .panel import PanelDataset

log = logging.getLogger(__name__)

DETERMINISTIC = ("c", "ct")

# MacKinnon (1994) response-surface coefficients for one unit root, tau statistic.
# p = Phi(sum_k coef[k] * tau**k); the small-p polynomial applies for tau <= tau_star.
_TAU_MAX = {"c": 2.74, "ct": 0.7}
_TAU_MIN = {"c": -18.83, "ct": -16.18}
_TAU_STAR = {"c": -1.61, "ct": -2.89}
_TAU_SMALLP = {
    "c": (2.1659, 1.4412, 0.038269),
    "ct": (3.2512, 1.6047, 0.049588),
}
_TAU_LARGEP = {
    "c": (1.7339, 0.93202, -0.12745, -0.010368),
    "ct": (2.5261, 0.61654, -0.37956, -0.060285),
}

# Levin-Lin-Chu (2002) adjustment moments: T, mu*, sigma* per deterministic spec.
_LLC_T = np.array([25, 30, 35, 40, 45, 50, 60, 70, 80, 90, 100, 250], dtype=float)
_LLC_MOMENTS = {
    "c": (
        np.array([-0.554, -0.546, -0.541, -0.537, -0.533, -0.531, -0.527, -0.524, -0.521, -0.520, -0.518, -0.509]),
        np.array([0.919, 0.889, 0.867, 0.850, 0.837, 0.826, 0.810, 0.798, 0.789, 0.782, 0.776, 0.742]),
    ),
    "ct": (
        np.array([-0.703, -0.674, -0.653, -0.637, -0.624, -0.614, -0.598, -0.587, -0.578, -0.571, -0.566, -0.533]),
        np.array([1.003, 0.949, 0.906, 0.871, 0.842, 0.818, 0.780, 0.751, 0.728, 0.710, 0.695, 0.603]),
    ),
}
_LLC_LIMIT = {"c": (-0.5, 0.707), "ct": (-0.5, 0.5)}


def _check_det(det: str) -> None:
    if det not in DETERMINISTIC:
        raise ValueError(f"deterministic spec must be one of {DETERMINISTIC}, got {det!r}")


def mackinnon_p(tau: float, det: str = "c") -> float:
    """Asymptotic p-value of a Dickey-Fuller tau statistic."""
    _check_det(det)
    if tau > _TAU_MAX[det]:
        return 1.0
    if tau < _TAU_MIN[det]:
        return 0.0
    coef = _TAU_SMALLP[det] if tau <= _TAU_STAR[det] else _TAU_LARGEP[det]
    return float(stats.norm.cdf(np.polynomial.polynomial.polyval(tau, coef)))


def llc_moments(t_adj: float, det: str = "c") -> tuple[float, float]:
    """(mu*, sigma*) for an average adjusted sample length ``t_adj``.

    Linear interpolation between table rows; beyond T=250 the moments are
    interpolated in 1/T towards their limits.  Below T=25 the first row is used.
    """
    _check_det(det)
    mu, sd = _LLC_MOMENTS[det]
    if t_adj < _LLC_T[0]:
        warnings.warn(
            f"LLC: adjusted T={t_adj:.1f} is below the table range; using T=25 moments",
            RuntimeWarning,
            stacklevel=3,
        )
        return float(mu[0]), float(sd[0])
    if t_adj <= _LLC_T[-1]:
        return float(np.interp(t_adj, _LLC_T, mu)), float(np.interp(t_adj, _LLC_T, sd))
    w = _LLC_T[-1] / t_adj  # 1 at T=250, 0 in the limit
    mu_inf, sd_inf = _LLC_LIMIT[det]
    return mu_inf + w * (mu[-1] - mu_inf), sd_inf + w * (sd[-1] - sd_inf)


# ----------------------------------------------------------------- regression


def _ols(y: np.ndarray, X: np.ndarray):
    n, k = X.shape
    if n <= k:
        raise InsufficientDataError(f"{n} observations for {k} regressors")
    q, r = np.linalg.qr(X)
    d = np.abs(np.diag(r))
    if d.min() <= 1e-10 * max(d.max(), 1.0):
        raise SingularMatrixError("regressor matrix is singular")
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X @ beta
    s2 = resid @ resid / (n - k)
    rinv = np.linalg.inv(r)
    se = np.sqrt(s2 * np.sum(rinv * rinv, axis=1))
    return beta, se, resid, s2


def _deterministic(n: int, det: str) -> np.ndarray:
    cols = [np.ones(n)]
    if det == "ct":
        cols.append(np.arange(1.0, n + 1.0))
    return np.column_stack(cols)


def _adf_design(y: np.ndarray, lags: int, det: str, drop: int | None = None):
    """Rows for dy_t = rho*y_{t-1} + det + sum_j gamma_j dy_{t-j}.

    ``drop`` leading differences are discarded (``drop >= lags``) so designs for
    different lag orders can share one sample.
    """
    drop = lags if drop is None else drop
    dy = np.diff(y)
    n = dy.size - drop
    lhs = dy[drop:]
    cols = [y[drop:-1]]
    cols.extend(_deterministic(n, det).T)
    for j in range(1, lags + 1):
        cols.append(dy[drop - j:dy.size - j])
    return lhs, np.column_stack(cols)


def default_max_lag(nobs: int) -> int:
    return int(math.floor(12.0 * (nobs / 100.0) ** 0.25))


def default_bandwidth(nobs: int) -> int:
    return int(math.floor(4.0 * (nobs / 100.0) ** (2.0 / 9.0)))


def select_adf_lag(y, max_lag: int | None = None, det: str = "c") -> int:
    """Lag order minimizing the Schwarz criterion on a common sample."""
    y = np.asarray(y, dtype=float)
    if max_lag is None:
        max_lag = default_max_lag(y.size)
    max_lag = max(0, min(max_lag, y.size - 12))
    best, best_bic = 0, math.inf
    for p in range(max_lag + 1):
        lhs, X = _adf_design(y, p, det, drop=max_lag)
        _, _, resid, _ = _ols(lhs, X)
        n = lhs.size
        bic = n * math.log(resid @ resid / n) + X.shape[1] * math.log(n)
        if bic < best_bic - 1e-12:
            best, best_bic = p, bic
    return best


@dataclass(frozen=True)
class UnitTestResult:
    statistic: float
    pvalue: float
    lags: int
    nobs: int


def _series_values(s) -> np.ndarray:
    v = np.asarray(getattr(s, "values", s), dtype=float)
    if v.ndim != 1:
        raise ValueError("expected a one-dimensional series")
    if np.isnan(v).any():
        raise InsufficientDataError("series contains missing values")
    return v


def adf_test(s, lags: int | None = None, det: str = "c") -> UnitTestResult:
    """Augmented Dickey-Fuller tau test.  ``lags=None`` selects the order by BIC."""
    _check_det(det)
    y = _series_values(s)
    if lags is None:
        lags = select_adf_lag(y, det=det)
    if y.size < lags + 10:
        raise InsufficientDataError(f"ADF with {lags} lags needs at least {lags + 10} observations")
    lhs, X = _adf_design(y, lags, det)
    beta, se, _, _ = _ols(lhs, X)
    tau = beta[0] / se[0]
    return UnitTestResult(float(tau), mackinnon_p(tau, det), lags, lhs.size)


def newey_west(u: np.ndarray, bandwidth: int) -> float:
    """Bartlett-kernel long-run variance of ``u`` (not demeaned), divisor n."""
    n = u.size
    lrv = u @ u / n
    for j in range(1, bandwidth + 1):
        lrv += 2.0 * (1.0 - j / (bandwidth + 1.0)) * (u[j:] @ u[:-j]) / n
    return float(lrv)


def pp_test(s, bandwidth: int | None = None, det: str = "c") -> UnitTestResult:
    """Phillips-Perron Z-tau: the unaugmented DF tau corrected for serial correlation."""
    _check_det(det)
    y = _series_values(s)
    if y.size < 10:
        raise InsufficientDataError("PP test needs at least 10 observations")
    if bandwidth is None:
        bandwidth = default_bandwidth(y.size)
    lhs, X = _adf_design(y, 0, det)
    beta, se, resid, s2 = _ols(lhs, X)
    n, k = X.shape
    if bandwidth >= n:
        raise InsufficientDataError(f"bandwidth {bandwidth} exceeds the {n} residuals")
    gamma0 = s2 * (n - k) / n
    lam2 = newey_west(resid, bandwidth)
    lam = math.sqrt(lam2)
    tau = beta[0] / se[0]
    z_tau = math.sqrt(gamma0 / lam2) * tau - 0.5 * ((lam2 - gamma0) / lam) * (n * se[0] / math.sqrt(s2))
    return UnitTestResult(float(z_tau), mackinnon_p(z_tau, det), bandwidth, n)


@dataclass(frozen=True)
class FisherResult:
    statistic: float
    pvalue: float
    dof: int
    clamped: int = 0


FISHER_P_FLOOR = 1e-16


def fisher_combine(pvalues: Sequence[float]) -> FisherResult:
    """Combine independent p-values: -2 sum(ln p) ~ chi2(2N)."""
    p = np.asarray(pvalues, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("need at least one p-value")
    if np.isnan(p).any() or (p < 0).any() or (p > 1).any():
        raise ValueError("p-values must lie in [0, 1]")
    clamped = int((p < FISHER_P_FLOOR).sum())
    if clamped:
        warnings.warn(f"{clamped} p-value(s) below {FISHER_P_FLOOR} clamped", RuntimeWarning, stacklevel=2)
        p = np.maximum(p, FISHER_P_FLOOR)
    stat = float(-2.0 * np.log(p).sum())
    dof = 2 * p.size
    return FisherResult(stat, float(stats.chi2.sf(stat, dof)), dof, clamped)


# ------------------------------------------------------------------------ LLC


@dataclass(frozen=True)
class LLCResult:
    statistic: float  # adjusted t*
    pvalue: float
    t_delta: float
    delta: float
    cross_sections: int
    nobs: int
    lags: tuple[int, ...]
    bandwidth: int


def _panel_matrix(panel, indicator: str | None) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(panel, PanelDataset):
        if indicator is None:
            if len(panel.indicators) != 1:
                raise ValueError("name the indicator to test")
            indicator = panel.indicators[0]
        Y = panel.values[:, :, panel.index(indicator)]
        units = panel.units
    else:
        Y = np.asarray(panel, dtype=float)
        if Y.ndim != 2:
            raise ValueError("panel array must be (units, periods)")
        units = tuple(str(i) for i in range(Y.shape[0]))
    if np.isnan(Y).any():
        raise PanelError("unbalanced panel: missing cells")
    return Y, units


def llc_test(panel, indicator: str | None = None, lags: int | None = None,
             det: str = "c") -> LLCResult:
    """Levin-Lin-Chu pooled t* test of a common unit root.

    ``panel`` is a :class:`PanelDataset` (with ``indicator``) or an (N, T)
    array.  ``lags=None`` picks each unit's ADF order by BIC.
    """
    _check_det(det)
    Y, _ = _panel_matrix(panel, indicator)
    N, T = Y.shape
    if N < 2:
        raise InsufficientDataError("LLC needs at least two cross-sections")
    lag_list = [select_adf_lag(y, det=det) if lags is None else lags for y in Y]
    if T < max(lag_list) + 12:
        raise InsufficientDataError(f"LLC with {max(lag_list)} lags needs T >= {max(lag_list) + 12}")
    bandwidth = int(math.floor(3.21 * T ** (1.0 / 3.0)))

    e_all, v_all, ratios = [], [], []
    for y, p in zip(Y, lag_list):
        lhs, X = _adf_design(y, p, det)
        Z = X[:, 1:]  # deterministics and lagged differences
        bz = np.linalg.lstsq(Z, np.column_stack([lhs, X[:, 0]]), rcond=None)[0]
        e = lhs - Z @ bz[:, 0]
        v = X[:, 0] - Z @ bz[:, 1]
        if v @ v <= 0:
            raise SingularMatrixError("lagged level is collinear with the deterministic terms")
        slope = (v @ e) / (v @ v)
        u = e - slope * v
        sigma = math.sqrt(u @ u / (lhs.size - X.shape[1]))
        e_all.append(e / sigma)
        v_all.append(v / sigma)
        dy = np.diff(y)
        dy = dy - dy.mean()
        ratios.append(math.sqrt(newey_west(dy, bandwidth)) / sigma)

    e = np.concatenate(e_all)
    v = np.concatenate(v_all)
    nobs = e.size
    svv = v @ v
    delta = (v @ e) / svv
    sig2 = np.mean((e - delta * v) ** 2)
    std_delta = math.sqrt(sig2 / svv)
    t_delta = delta / std_delta
    t_adj = T - float(np.mean(lag_list)) - 1.0
    mu, sd = llc_moments(t_adj, det)
    s_n = float(np.mean(ratios))
    t_star = (t_delta - N * t_adj * s_n / sig2 * std_delta * mu) / sd
    return LLCResult(
        float(t_star), float(stats.norm.cdf(t_star)), float(t_delta), float(delta),
        N, nobs, tuple(lag_list), bandwidth,
    )


# ---------------------------------------------------------------------- suite

METHOD_LLC = "Levin, Lin & Chu t*"
METHOD_ADF = "ADF - Fisher Chi-square"
METHOD_PP = "PP - Fisher Chi-square"
REPORT_COLUMNS = ("Method", "Statistic", "Prob", "Cross-sections", "Obs")


@dataclass(frozen=True)
class UnitRootReport:
    method: str
    statistic: float
    pvalue: float
    cross_sections: int
    observations: int
    deterministic: str
    units: tuple[tuple[str, float, float], ...] = field(default=(), repr=False)

    def row(self) -> list[str]:
        return [
            self.method,
            format_statistic(self.statistic),
            f"{self.pvalue:.4f}",
            str(self.cross_sections),
            str(self.observations),
        ]


def format_statistic(x: float) -> str:
    """Six significant digits, the layout of common econometrics packages."""
    return f"{x:.6g}"


@dataclass(frozen=True)
class SuiteResult:
    indicator: str
    reports: tuple[UnitRootReport, ...]
    level: float = 0.05

    @property
    def nonstationary(self) -> bool:
        return all(r.pvalue >= self.level for r in self.reports)

    @property
    def recommendation(self) -> str:
        return "first difference" if self.nonstationary else "levels"


def panel_unit_root_suite(panel: PanelDataset, indicator: str, lags: int | None = None,
                          det: str = "c", bandwidth: int | None = None,
                          level: float = 0.05) -> SuiteResult:
    """LLC, ADF-Fisher and PP-Fisher on one indicator.

    The indicator is flagged non-stationary when none of the three rejects
    the unit-root null at ``level``.
    """
    Y, units = _panel_matrix(panel, indicator)
    llc = llc_test(Y, lags=lags, det=det)
    adf = [adf_test(y, lags, det) for y in Y]
    pp = [pp_test(y, bandwidth, det) for y in Y]
    fa = fisher_combine([r.pvalue for r in adf])
    fp = fisher_combine([r.pvalue for r in pp])
    reports = (
        UnitRootReport(METHOD_LLC, llc.statistic, llc.pvalue, llc.cross_sections, llc.nobs, det),
        UnitRootReport(METHOD_ADF, fa.statistic, fa.pvalue, len(adf), sum(r.nobs for r in adf), det,
                       tuple((u, r.statistic, r.pvalue) for u, r in zip(units, adf))),
        UnitRootReport(METHOD_PP, fp.statistic, fp.pvalue, len(pp), sum(r.nobs for r in pp), det,
                       tuple((u, r.statistic, r.pvalue) for u, r in zip(units, pp))),
    )
    return SuiteResult(indicator, reports, level)


def write_report_csv(reports: Sequence[UnitRootReport], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            w.writerow(r.row())
    return path
