"""Synthetic control: simplex-constrained donor weights and V search.

Donor weights solve

    min_W (X1 - X0 W)' V (X1 - X0 W)   s.t.  W >= 0, sum(W) = 1

for a diagonal, normalized V.  With D = diag(sqrt(v)) this is the point of
the convex hull of the columns D (X0_j - X1) nearest the origin, which
Wolfe's minimum-norm-point algorithm finds exactly in finitely many steps.
A projected-gradient pass polishes the result if the duality gap is still
above tolerance.  V is chosen by a deterministic multi-start search that
minimizes the pre-event mean squared prediction error of the outcome path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .panel import PanelDataset, StudyConfig

KKT_TOL = 1e-9
MAX_ITER = 10_000
N_STARTS = 20
POOR_OVERLAP = 0.05  # pre-RMSPE as a share of the treated pre-event mean


class SynthError(ValueError):
    pass


# -- the simplex QP ------------------------------------------------------


@dataclass(frozen=True)
class SimplexSolution:
    w: np.ndarray
    objective: float
    gap: float  # Frank-Wolfe duality gap, an upper bound on suboptimality
    residual: float  # gap scaled by max(1, |X1|_V^2)
    iterations: int
    method: str


def _check_inputs(X1, X0, v):
    X1 = np.asarray(X1, dtype=float)
    X0 = np.asarray(X0, dtype=float)
    v = np.asarray(v, dtype=float)
    if X0.ndim != 2 or X1.shape != (X0.shape[0],):
        raise SynthError(f"shape mismatch: X1 {X1.shape}, X0 {X0.shape}")
    if v.shape != X1.shape:
        raise SynthError(f"V diagonal has {v.size} entries for {X1.size} predictors")
    if not (np.isfinite(X1).all() and np.isfinite(X0).all() and np.isfinite(v).all()):
        raise SynthError("non-finite values in synthetic control inputs")
    if (v < 0).any() or v.sum() <= 0:
        raise SynthError("V diagonal must be nonnegative with positive sum")
    if X0.shape[1] < 2:
        raise SynthError(f"need at least 2 donors, got {X0.shape[1]}")
    return X1, X0, v / v.sum()


def _affine_minimizer(PS: np.ndarray) -> np.ndarray:
    """argmin |PS mu| subject to sum(mu) = 1."""
    m = PS.shape[1]
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = PS.T @ PS
    A[:m, m] = 1.0
    A[m, :m] = 1.0
    b = np.zeros(m + 1)
    b[m] = 1.0
    sol = np.linalg.lstsq(A, b, rcond=None)[0]
    return sol[:m]


def min_norm_point(P: np.ndarray, tol: float = 1e-13, max_iter: int = MAX_ITER):
    """Wolfe's algorithm: convex weights of the columns of P with minimal norm.

    Returns ``(weights, iterations)``.
    """
    K, J = P.shape
    norms2 = np.einsum("ij,ij->j", P, P)
    scale = max(float(norms2.max()), 1e-300)
    S = [int(np.argmin(norms2))]
    lam = np.array([1.0])
    x = P[:, S[0]].copy()
    it = 0
    for it in range(1, max_iter + 1):
        g = P.T @ x
        j = int(np.argmin(g))
        if float(x @ x) - g[j] <= tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            mu = _affine_minimizer(P[:, S])
            if (mu > 1e-14).all():
                lam = mu
                break
            neg = mu <= 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg & (lam - mu > 0), lam / (lam - mu), np.inf)
            theta = min(float(ratios.min()), 1.0)
            lam = lam + theta * (mu - lam)
            keep = lam > 1e-14
            if keep.all():  # numerical safety: drop the smallest
                keep[int(np.argmin(lam))] = False
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = P[:, S] @ lam
    w = np.zeros(J)
    w[S] = lam
    return w, it


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _objective_and_gap(X1, X0, v, w):
    r = X0 @ w - X1
    obj = float(r @ (v * r))
    g = 2.0 * X0.T @ (v * r)
    gap = float(g @ w - g.min())
    return obj, max(gap, 0.0), g


def solve_weights(X1, X0, v, *, tol: float = KKT_TOL, max_iter: int = MAX_ITER) -> SimplexSolution:
    """Minimize the V-weighted predictor distance over the donor simplex.

    ``v`` is the diagonal of V; it is normalized to sum to one.
    """
    X1, X0, v = _check_inputs(X1, X0, v)
    d = np.sqrt(v)
    P = d[:, None] * (X0 - X1[:, None])
    w, iters = min_norm_point(P, max_iter=max_iter)
    scale = max(1.0, float(X1 @ (v * X1)))
    obj, gap, g = _objective_and_gap(X1, X0, v, w)
    method = "wolfe"
    if gap / scale > tol:
        # accelerated projected gradient from the Wolfe point
        L = 2.0 * max(np.linalg.norm(P, 2) ** 2, 1e-300)
        y, w_prev, t = w.copy(), w.copy(), 1.0
        for k in range(max_iter):
            _, _, gy = _objective_and_gap(X1, X0, v, y)
            w_new = project_simplex(y - gy / L)
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = w_new + ((t - 1.0) / t_new) * (w_new - w_prev)
            w_prev, t = w_new, t_new
            obj_k, gap_k, _ = _objective_and_gap(X1, X0, v, w_new)
            if gap_k / scale <= tol:
                break
        if obj_k <= obj:
            w, obj, gap = w_new, obj_k, gap_k
        iters += k + 1
        method = "wolfe+apg"
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    obj, gap, _ = _objective_and_gap(X1, X0, v, w)
    return SimplexSolution(w, obj, gap, gap / scale, iters, method)


# -- V search ------------------------------------------------------------


def v_starts(K: int, n: int = N_STARTS) -> list[np.ndarray]:
    """Equal weights, then axis-heavy corners of growing support."""
    starts = [np.full(K, 1.0 / K)]
    if K == 1:
        return starts
    seen = {tuple(np.round(starts[0], 12))}
    for mass in (0.9, 0.7, 0.5):
        for size in range(1, K):
            for combo in itertools.combinations(range(K), size):
                v = np.full(K, (1.0 - mass) / (K - size))
                v[list(combo)] = mass / size
                key = tuple(np.round(v, 12))
                if key in seen:
                    continue
                seen.add(key)
                starts.append(v)
                if len(starts) == n:
                    return starts
    return starts


def _to_simplex(z: np.ndarray) -> np.ndarray:
    a = np.abs(z)
    s = a.sum()
    return np.full(z.size, 1.0 / z.size) if s == 0 else a / s


@dataclass(frozen=True)
class SynthProblem:
    X1: np.ndarray
    X0: np.ndarray
    donors: tuple[str, ...]
    predictors: tuple[str, ...]
    Z1: np.ndarray  # treated pre-event outcome path
    Z0: np.ndarray  # donor pre-event outcome paths (T_pre x J)
    pre_years: tuple[int, ...] = ()
    scale: np.ndarray | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        K, J = np.shape(self.X0)
        if J < 2:
            raise SynthError(f"need at least 2 donors, got {J}")
        if np.shape(self.X1) != (K,) or len(self.donors) != J or len(self.predictors) != K:
            raise SynthError("inconsistent synthetic control problem dimensions")
        if np.shape(self.Z0) != (len(self.Z1), J):
            raise SynthError("pre-period outcome paths do not match donors")

    @property
    def K(self) -> int:
        return len(self.predictors)

    @property
    def J(self) -> int:
        return len(self.donors)

    def pre_mspe(self, w: np.ndarray) -> float:
        r = self.Z1 - self.Z0 @ w
        return float(np.mean(r * r))


@dataclass(frozen=True)
class VSearch:
    v: np.ndarray
    solution: SimplexSolution
    pre_mspe: float
    equal_mspe: float
    fallback: bool
    start_index: int | None


def optimize_v(problem: SynthProblem, *, n_starts: int = N_STARTS, maxfev: int = 150) -> VSearch:
    """Multi-start Nelder-Mead over diagonal V on the K-simplex."""
    K = problem.K
    cache: dict[tuple, tuple[float, SimplexSolution]] = {}

    def evaluate(v):
        key = tuple(np.round(v, 14))
        if key not in cache:
            sol = solve_weights(problem.X1, problem.X0, v)
            cache[key] = (problem.pre_mspe(sol.w), sol)
        return cache[key]

    equal = np.full(K, 1.0 / K)
    equal_loss, equal_sol = evaluate(equal)
    best = (equal_loss, equal, equal_sol, None)
    if K > 1 and equal_loss > 0:
        for i, v0 in enumerate(v_starts(K, n_starts)):
            res = optimize.minimize(
                lambda z: evaluate(_to_simplex(z))[0],
                v0,
                method="Nelder-Mead",
                options={"maxfev": maxfev, "xatol": 1e-6, "fatol": 1e-12},
            )
            v = _to_simplex(res.x)
            loss, sol = evaluate(v)
            if loss < best[0]:
                best = (loss, v, sol, i)
    loss, v, sol, idx = best
    fallback = idx is None
    return VSearch(v, sol, loss, equal_loss, fallback, idx)


# -- predictors and gaps ---------------------------------------------------


def _anchor_years(first: int, event_year: int) -> tuple[int, int, int]:
    return first, (first + event_year) // 2, event_year


def build_predictors(
    dataset: PanelDataset,
    study: StudyConfig,
    outcome: str = "le-total",
    *,
    normalize: bool = True,
    covariates: tuple[str, ...] = ("gdp-per-capita", "pop-15-64"),
) -> SynthProblem:
    """Predictor matrices for the treated unit and eligible donors.

    Predictors are the pre-event means of log GDP per capita and of the
    15-64 population share, plus the outcome at the first pre-event year,
    the midpoint and the event year.  A covariate with no treated data is
    dropped; donors missing any remaining predictor or any pre-event outcome
    year are excluded.  Rows are divided by their cross-unit standard
    deviation when ``normalize`` is set.
    """
    T0 = study.event_year
    out = dataset.wide(outcome) if outcome in dataset.indicators else None
    if out is None or study.treated not in out.columns:
        raise SynthError(f"{study.study_id}: no {outcome} data for {study.treated}")
    out = out.loc[(out.index >= study.start_year) & (out.index <= study.end_year)]
    treated_pre = out.loc[out.index <= T0, study.treated].dropna()
    if len(treated_pre) < 3:
        raise SynthError(
            f"{study.study_id}: {len(treated_pre)} pre-event {outcome} years for the treated unit (need 3)"
        )
    pre_years = tuple(int(y) for y in treated_pre.index)
    anchors = _anchor_years(pre_years[0], T0)
    notes: list[str] = []

    rows: list[tuple[str, dict[str, float]]] = []
    pre = lambda df: df.loc[(df.index >= pre_years[0]) & (df.index <= T0)]  # noqa: E731
    for cov in covariates:
        if cov not in dataset.indicators:
            notes.append(f"predictor {cov} absent from dataset; dropped")
            continue
        wide = pre(dataset.wide(cov))
        if cov == "gdp-per-capita":
            wide = np.log(wide.where(wide > 0))
            name = "mean log gdp-per-capita"
        else:
            name = f"mean {cov}"
        means = wide.mean(skipna=True)
        if study.treated not in means or not np.isfinite(means.get(study.treated, np.nan)):
            notes.append(f"predictor {name}: no pre-event data for treated unit; dropped")
            continue
        rows.append((name, means.to_dict()))
    for y in anchors:
        rows.append((f"{outcome} {y}", out.loc[y].to_dict() if y in out.index else {}))

    X1 = np.array([r[1].get(study.treated, np.nan) for r in rows])
    if not np.isfinite(X1).all():
        raise SynthError(f"{study.study_id}: treated predictor values incomplete")
    donors, cols, paths = [], [], []
    for c in study.controls:
        col = np.array([r[1].get(c, np.nan) for r in rows])
        path = out.loc[list(pre_years), c].to_numpy() if c in out.columns else np.full(len(pre_years), np.nan)
        if not np.isfinite(col).all():
            notes.append(f"donor {c} excluded: missing predictor")
            continue
        if not np.isfinite(path).all():
            notes.append(f"donor {c} excluded: incomplete pre-event {outcome}")
            continue
        donors.append(c)
        cols.append(col)
        paths.append(path)
    if len(donors) < 2:
        raise SynthError(f"{study.study_id}: only {len(donors)} eligible donors")
    X0 = np.column_stack(cols)
    scale = np.ones(len(rows))
    if normalize:
        sd = np.column_stack([X1[:, None], X0]).std(axis=1, ddof=1)
        scale = np.where(sd > 0, sd, 1.0)
    Z1 = treated_pre.to_numpy()
    Z0 = np.column_stack(paths)
    return SynthProblem(
        X1 / scale, X0 / scale[:, None], tuple(donors), tuple(r[0] for r in rows),
        Z1, Z0, pre_years, scale, tuple(notes),
    )


@dataclass(frozen=True)
class SynthResult:
    study: StudyConfig
    outcome: str
    donors: tuple[str, ...]
    weights: np.ndarray
    v: np.ndarray
    predictors: tuple[str, ...]
    objective: float
    pre_rmspe: float
    years: np.ndarray
    treated: np.ndarray
    synthetic: np.ndarray
    gap: np.ndarray
    poor_overlap: bool
    fallback_v: bool
    notes: tuple[str, ...] = field(default=())

    def weight_of(self, donor: str) -> float:
        return float(self.weights[self.donors.index(donor)])

    def curve_csv(self) -> str:
        lines = ["year,treated,synthetic,gap"]
        for y, a, b, g in zip(self.years, self.treated, self.synthetic, self.gap):
            lines.append(f"{int(y)},{_f(a)},{_f(b)},{_f(g)}")
        return "\n".join(lines) + "\n"

    def weights_csv(self) -> str:
        lines = ["donor,weight"]
        for d, w in zip(self.donors, self.weights):
            lines.append(f"{d},{w:.6f}")
        lines.append("")
        lines.append("predictor,v")
        for p, v in zip(self.predictors, self.v):
            lines.append(f"{p},{v:.6f}")
        return "\n".join(lines) + "\n"


def _f(x) -> str:
    return "" if not np.isfinite(x) else f"{x:.3f}"


def synth_gap(
    dataset: PanelDataset, study: StudyConfig, outcome: str, donors, weights
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-year treated, synthetic and gap series over the study window.

    Years where the treated unit or any positive-weight donor lacks data are
    NaN.
    """
    wide = dataset.wide(outcome)
    years = np.arange(study.start_year, study.end_year + 1)
    wide = wide.reindex(index=years)
    treated = wide[study.treated].to_numpy() if study.treated in wide else np.full(years.size, np.nan)
    w = np.asarray(weights, float)
    pos = [i for i in range(len(donors)) if w[i] > 0]
    Y = np.column_stack([wide[donors[i]].to_numpy() if donors[i] in wide else np.full(years.size, np.nan) for i in pos])
    ok = np.isfinite(Y).all(axis=1)
    synthetic = np.where(ok, np.nan_to_num(Y) @ w[pos], np.nan)
    gap = treated - synthetic
    return years, treated, synthetic, gap


def synth_study(
    dataset: PanelDataset,
    study: StudyConfig,
    outcome: str = "le-total",
    *,
    normalize: bool = True,
    n_starts: int = N_STARTS,
) -> SynthResult:
    problem = build_predictors(dataset, study, outcome, normalize=normalize)
    search = optimize_v(problem, n_starts=n_starts)
    w = search.solution.w
    years, treated, synthetic, gap = synth_gap(dataset, study, outcome, problem.donors, w)
    pre_rmspe = math.sqrt(search.pre_mspe)
    pre_mean = float(np.mean(problem.Z1))
    poor = pre_rmspe > POOR_OVERLAP * abs(pre_mean)
    notes = list(problem.notes)
    if poor:
        notes.append(
            f"poor pre-event overlap: RMSPE {pre_rmspe:.3f} exceeds "
            f"{POOR_OVERLAP:.0%} of the treated pre-event mean {pre_mean:.3f}"
        )
    return SynthResult(
        study, outcome, problem.donors, w, search.v, problem.predictors,
        search.solution.objective, pre_rmspe, years, treated, synthetic, gap,
        poor, search.fallback, tuple(notes),
    )
