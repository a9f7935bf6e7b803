"""Least squares with dummy-variable fixed effects.

Fixed effects are expanded as explicit dummies (a few hundred columns at
most at this scale), so residuals and R^2 are those of the dummy
formulation directly.  Collinear columns are detected through the
triangular factor of a QR decomposition and dropped latest-first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from scipy import linalg, stats

from .panel import StudySample

PIVOT_TOL = 1e-8
INTERCEPT = "intercept"


class RegressionError(ValueError):
    pass


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    labels: tuple[str, ...]
    keys: tuple[tuple[str, int], ...]  # (country, year) per row
    clusters: tuple[str, ...] = ()

    @property
    def shape(self):
        return self.X.shape

    def column(self, label: str) -> np.ndarray:
        return self.X[:, self.labels.index(label)]


def country_label(c: str) -> str:
    return f"country[{c}]"


def region_year_label(region: str, year: int) -> str:
    return f"region_year[{region}:{year}]"


def build_fe_design(
    sample: StudySample,
    treatment_columns: Mapping[str, Sequence[float]],
    *,
    reverse_reference: bool = False,
) -> DesignMatrix:
    """Intercept, country dummies, region-year dummies, then treatment columns.

    The reference country and the reference year within each region are the
    lexicographically first ones (last ones with ``reverse_reference``).
    """
    rows = sample.rows
    if rows.empty:
        raise RegressionError("cannot build a design from an empty sample")
    n = len(rows)
    cols: list[np.ndarray] = [np.ones(n)]
    labels: list[str] = [INTERCEPT]

    country = rows["country"].to_numpy()
    countries = sorted(set(country), reverse=reverse_reference)
    for c in countries[1:]:
        cols.append((country == c).astype(float))
        labels.append(country_label(c))

    region = rows["region"].to_numpy()
    year = rows["year"].to_numpy()
    for r in sorted(set(region)):
        in_r = region == r
        years = sorted(set(year[in_r]), reverse=reverse_reference)
        for y in years[1:]:
            cols.append((in_r & (year == y)).astype(float))
            labels.append(region_year_label(r, int(y)))

    for name, values in treatment_columns.items():
        v = np.asarray(values, dtype=float)
        if v.shape != (n,):
            raise RegressionError(f"treatment column {name!r} has {v.size} rows, sample has {n}")
        cols.append(v)
        labels.append(name)

    keys = tuple(zip(country.tolist(), (int(y) for y in year)))
    return DesignMatrix(np.column_stack(cols), tuple(labels), keys, tuple(country.tolist()))


def stars(p: float) -> str:
    if p is None or not math.isfinite(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


@dataclass(frozen=True)
class Term:
    label: str
    estimate: float
    se: float
    t: float
    p: float

    @property
    def stars(self) -> str:
        return stars(self.p)


@dataclass(frozen=True)
class RegressionFit:
    labels: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    r2: float
    n: int
    df_resid: int
    rss: float
    residuals: pd.Series  # indexed by (country, year)
    dropped: tuple[str, ...] = ()
    vcov: np.ndarray = field(default=None, repr=False)
    se_type: str = "classical"

    @property
    def rank(self) -> int:
        return len(self.labels)

    def has(self, label: str) -> bool:
        return label in self.labels

    def term(self, label: str) -> Term:
        try:
            i = self.labels.index(label)
        except ValueError:
            if label in self.dropped:
                raise KeyError(f"{label!r} was dropped as collinear") from None
            raise KeyError(f"no term {label!r}") from None
        return Term(label, float(self.coef[i]), float(self.se[i]), float(self.t[i]), float(self.p[i]))

    def params(self) -> dict[str, float]:
        return dict(zip(self.labels, map(float, self.coef)))

    def to_csv_text(self) -> str:
        lines = ["term,estimate,se,t,p,stars"]
        for i, lab in enumerate(self.labels):
            lines.append(
                f"{_csv_label(lab)},{self.coef[i]:.6f},{self.se[i]:.6f},"
                f"{self.t[i]:.6f},{self.p[i]:.6f},{stars(self.p[i])}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "terms": [
                {
                    "term": lab,
                    "estimate": _num(self.coef[i]),
                    "se": _num(self.se[i]),
                    "t": _num(self.t[i]),
                    "p": _num(self.p[i]),
                    "stars": stars(self.p[i]),
                }
                for i, lab in enumerate(self.labels)
            ],
            "r2": _num(self.r2),
            "n": self.n,
            "df_resid": self.df_resid,
            "dropped": list(self.dropped),
            "se_type": self.se_type,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _csv_label(s: str) -> str:
    return f'"{s}"' if "," in s else s


def _independent_columns(X: np.ndarray, tol: float) -> list[int]:
    """Indices of columns kept, dropping later columns of dependent sets."""
    keep = list(range(X.shape[1]))
    while True:
        R = linalg.qr(X[:, keep], mode="r")[0]
        diag = np.abs(np.diag(R))
        scale = diag.max() if diag.size else 0.0
        if scale == 0.0:
            return []
        bad = [keep[i] for i in np.flatnonzero(diag < tol * scale)]
        if not bad:
            # confirm with a rank-revealing factorisation
            _, Rp, _ = linalg.qr(X[:, keep], mode="economic", pivoting=True)
            dp = np.abs(np.diag(Rp))
            if dp[-1] >= tol * dp[0]:
                return keep
            bad = [keep[-1]]
        keep = [k for k in keep if k not in bad]


def ols_fit(
    design: DesignMatrix,
    y: Sequence[float],
    *,
    cluster: bool = False,
    tol: float = PIVOT_TOL,
) -> RegressionFit:
    """OLS with classical (default) or country-clustered standard errors."""
    X = np.asarray(design.X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    if y.shape != (n,):
        raise RegressionError(f"y has {y.size} rows, design has {n}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise RegressionError("non-finite values in design or outcome")

    keep = _independent_columns(X, tol)
    dropped = tuple(design.labels[j] for j in range(k) if j not in keep)
    Xk = X[:, keep]
    rank = len(keep)
    if n <= rank:
        raise RegressionError(f"insufficient degrees of freedom (N={n}, rank={rank})")

    Q, R = linalg.qr(Xk, mode="economic")
    beta = linalg.solve_triangular(R, Q.T @ y)
    resid = y - Xk @ beta
    rss = float(resid @ resid)
    df = n - rank
    Rinv = linalg.solve_triangular(R, np.eye(rank))
    bread = Rinv @ Rinv.T  # (X'X)^-1

    if cluster:
        groups = pd.Index(design.clusters)
        codes, uniq = pd.factorize(groups)
        G = len(uniq)
        if G < 2:
            raise RegressionError("clustered standard errors need at least 2 clusters")
        scores = np.zeros((G, rank))
        np.add.at(scores, codes, Xk * resid[:, None])
        meat = scores.T @ scores
        adj = G / (G - 1) * (n - 1) / (n - rank)
        vcov = adj * bread @ meat @ bread
        dist_df = G - 1
        se_type = "cluster"
    else:
        sigma2 = rss / df
        vcov = sigma2 * bread
        dist_df = df
        se_type = "classical"

    se = np.sqrt(np.clip(np.diag(vcov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.nan)
    p = 2.0 * stats.t.sf(np.abs(t), dist_df)

    tss = float(((y - y.mean()) ** 2).sum())
    if tss > 0:
        r2 = min(max(1.0 - rss / tss, 0.0), 1.0)
    else:
        r2 = 1.0 if rss <= 1e-24 else 0.0

    index = pd.MultiIndex.from_tuples(design.keys, names=["country", "year"])
    return RegressionFit(
        labels=tuple(design.labels[j] for j in keep),
        coef=beta,
        se=se,
        t=t,
        p=p,
        r2=r2,
        n=n,
        df_resid=df,
        rss=rss,
        residuals=pd.Series(resid, index=index, name="residual"),
        dropped=dropped,
        vcov=vcov,
        se_type=se_type,
    )


def simple_design(X: np.ndarray, labels: Sequence[str] | None = None) -> DesignMatrix:
    """Wrap a bare regressor matrix (rows keyed by position) as a design."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    labels = tuple(labels) if labels is not None else tuple(f"x{j}" for j in range(X.shape[1]))
    keys = tuple((f"row{i}", i) for i in range(X.shape[0]))
    return DesignMatrix(X, labels, keys, tuple(k[0] for k in keys))
