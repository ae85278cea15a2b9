"""Statistics over benchmark records.

OLS with heteroskedasticity-robust (sandwich) standard errors, method-dummy
regression models against a reference method, Welch t-tests, Pearson
correlation and the quantile grades used for the summary matrix.

Quantiles use numpy's inclusive linear-interpolation estimator
(``method="linear"``); grades compare strictly against the 10/25/75/90 %
quantiles, so ties at a quantile grade towards the middle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular

from .core import Criterion
from .datagen import ScenarioSpec, get_scenario
from .errors import DegenerateGroup, DegenerateInput, InvalidSpec, MissingReference, RankDeficient

CONTROLS = ("classnoise", "attributenoise", "classifier", "num_redundant_features",
            "minClassDev", "relFeatObs")

# controls used for each scenario family's model
GROUP_CONTROLS = {
    "noise": ("classnoise", "attributenoise", "classifier"),
    "redundant": ("classifier", "num_redundant_features"),
    "imbalanced": ("classifier", "minClassDev"),
    "dimensionality": ("classifier", "relFeatObs"),
}

BASE_CLASSIFIER = "nb"


class SeKind(str, Enum):
    HC0 = "HC0"
    HC1 = "HC1"


# --------------------------------------------------------------------------
# OLS
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AnalysisModel:
    names: tuple[str, ...]
    coefficients: np.ndarray
    robust_se: np.ndarray
    residuals: np.ndarray
    r2: float
    adj_r2: float
    n: int
    f_statistic: float
    se_kind: SeKind = SeKind.HC0
    dropped_controls: tuple[str, ...] = field(default=())

    @property
    def q(self) -> int:
        return self.coefficients.size

    @property
    def df_resid(self) -> int:
        return self.n - self.q

    @property
    def t_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coefficients / self.robust_se

    @property
    def p_values(self) -> np.ndarray:
        """Two-sided p-values of the robust t statistics."""
        t = self.t_values
        p = 2.0 * stats.t.sf(np.abs(t), self.df_resid)
        # a zero estimate with zero standard error carries no evidence
        return np.where(np.isnan(t), 1.0, p)

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])


def ols_robust(design, y, se_kind: SeKind | str = SeKind.HC0, names=None,
               rank_tol: float = 1e-10) -> AnalysisModel:
    """Least squares via QR with sandwich covariance.

    With X = QR the HC0 covariance (X'X)^-1 X' diag(e^2) X (X'X)^-1 equals
    R^-1 (Q' diag(e^2) Q) R^-T; HC1 multiplies it by n / (n - q).  The
    design is expected to contain an intercept column.
    """
    se_kind = SeKind(se_kind)
    X = np.asarray(design, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise ValueError("design must be n x q and y of length n")
    n, q = X.shape
    if n <= q:
        raise RankDeficient(f"need more observations ({n}) than coefficients ({q})")
    Q, R = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(R))
    if diag.min() <= rank_tol * max(diag.max(), 1.0):
        raise RankDeficient("design matrix is not of full column rank")
    beta = solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    Rinv = solve_triangular(R, np.eye(q))
    meat = (Q * (resid ** 2)[:, None]).T @ Q
    cov = Rinv @ meat @ Rinv.T
    if se_kind is SeKind.HC1:
        cov *= n / (n - q)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))

    ssr = float(resid @ resid)
    centred = y - y.mean()
    sst = float(centred @ centred)
    if sst > 0:
        r2 = min(max(1.0 - ssr / sst, 0.0), 1.0)
        adj = 1.0 - (1.0 - r2) * (n - 1) / (n - q)
        if q > 1:
            f = (r2 / (q - 1)) / ((1.0 - r2) / (n - q)) if r2 < 1 else float("inf")
        else:
            f = float("nan")
    else:
        r2, adj, f = 0.0, 0.0, float("nan")
    if names is None:
        names = tuple(f"x{j}" for j in range(q))
    return AnalysisModel(tuple(names), beta, se, resid, r2, adj, n, f, se_kind)


# --------------------------------------------------------------------------
# Method-dummy models
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RegressionSpec:
    outcome: Criterion = Criterion.AUC
    reference_method: str = "none"
    controls: tuple[str, ...] = ()
    se_kind: SeKind = SeKind.HC0

    def __post_init__(self):
        object.__setattr__(self, "outcome", Criterion(self.outcome))
        object.__setattr__(self, "se_kind", SeKind(self.se_kind))
        object.__setattr__(self, "controls", tuple(self.controls))
        bad = [c for c in self.controls if c not in CONTROLS]
        if bad:
            raise InvalidSpec(f"unknown control(s) {bad}; allowed: {', '.join(CONTROLS)}")


@dataclass(frozen=True)
class Observation:
    """One unit of analysis: a criterion value for a method in a scenario."""
    scenario: str
    method: str
    value: float
    classifier: str = BASE_CLASSIFIER


def observations_from_records(records, criterion: Criterion) -> list[Observation]:
    """Per-fold observations for AUC, relevant fraction or runtime."""
    criterion = Criterion(criterion)
    if criterion is Criterion.STABILITY:
        raise ValueError("stability is not a per-fold quantity; use bench.per_repeat_stability")
    attr = {Criterion.AUC: "auc", Criterion.RELEVANT_FRACTION: "relevant_fraction",
            Criterion.RUNTIME: "runtime_seconds"}[criterion]
    return [Observation(r.scenario, r.method, float(getattr(r, attr)), r.classifier) for r in records]


def control_value(name: str, spec: ScenarioSpec, classifier: str) -> float:
    if name == "classnoise":
        return spec.class_noise
    if name == "attributenoise":
        return spec.attribute_noise
    if name == "num_redundant_features":
        return float(spec.features_redundant)
    if name == "minClassDev":
        # deviation from a 50 % minority share in percentage points, times 10
        return (0.5 - spec.minority_fraction) * 10.0
    if name == "relFeatObs":
        return spec.features_total / spec.observations
    raise InvalidSpec(name)


def fit_criterion_model(observations, spec: RegressionSpec,
                        scenario_specs: dict[str, ScenarioSpec] | None = None) -> AnalysisModel:
    """Regress the outcome on method dummies (reference omitted) plus controls.

    ``observations`` are :class:`Observation` objects or bench ``RunRecord``s
    (converted with ``spec.outcome``).  Controls that are constant over the
    observations, or collinear with earlier columns, are dropped and listed in
    ``dropped_controls``.
    """
    obs = list(observations)
    if obs and not isinstance(obs[0], Observation):
        obs = observations_from_records(obs, spec.outcome)
    methods = sorted({o.method for o in obs})
    if spec.reference_method not in methods:
        raise MissingReference(f"reference method {spec.reference_method!r} not in the records")
    others = [m for m in methods if m != spec.reference_method]

    def scen(name):
        if scenario_specs and name in scenario_specs:
            return scenario_specs[name]
        return get_scenario(name)

    cols = [np.ones(len(obs))]
    names = ["(Intercept)"]
    method_idx = {m: i for i, m in enumerate(others)}
    M = np.zeros((len(obs), len(others)))
    for i, o in enumerate(obs):
        j = method_idx.get(o.method)
        if j is not None:
            M[i, j] = 1.0
    cols.extend(M.T)
    names.extend(f"method:{m}" for m in others)

    dropped = []
    rank = np.linalg.matrix_rank(np.column_stack(cols))
    for c in spec.controls:
        if c == "classifier":
            levels = sorted({o.classifier for o in obs} - {BASE_CLASSIFIER})
            block = [np.array([1.0 if o.classifier == lev else 0.0 for o in obs]) for lev in levels]
            block_names = [f"classifier:{lev}" for lev in levels]
        else:
            block = [np.array([control_value(c, scen(o.scenario), o.classifier) for o in obs])]
            block_names = [f"control:{c}"]
        # constant or collinear controls (e.g. redundancy vs imbalance) add no rank
        if not block:
            dropped.append(c)
            continue
        new_rank = np.linalg.matrix_rank(np.column_stack(cols + block))
        if new_rank < rank + len(block):
            dropped.append(c)
            continue
        rank = new_rank
        cols.extend(block)
        names.extend(block_names)
    y = np.array([o.value for o in obs])
    model = ols_robust(np.column_stack(cols), y, spec.se_kind, names)
    return AnalysisModel(model.names, model.coefficients, model.robust_se, model.residuals,
                         model.r2, model.adj_r2, model.n, model.f_statistic, model.se_kind,
                         tuple(dropped))


def stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def coefficient_rows(model: AnalysisModel) -> list[dict]:
    p = model.p_values
    return [
        {"term": name, "estimate": float(b), "robust_se": float(se), "p_value": float(pv),
         "stars": stars(float(pv))}
        for name, b, se, pv in zip(model.names, model.coefficients, model.robust_se, p)
    ]


def coefficients_markdown(model: AnalysisModel, title: str = "") -> str:
    lines = []
    if title:
        lines += [f"### {title}", ""]
    lines += ["| term | estimate (robust SE) |", "|---|---|"]
    for row in coefficient_rows(model):
        lines.append(f"| {row['term']} | {row['estimate']:.2f} ({row['robust_se']:.2f}){row['stars']} |")
    lines.append(f"| R^2 | {model.r2:.2f} |")
    lines.append(f"| Adj. R^2 | {model.adj_r2:.2f} |")
    lines.append(f"| Num. obs. | {model.n} |")
    lines.append(f"| F statistic | {model.f_statistic:.2f} |")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Tests and correlation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p_one_sided: float  # P(T >= t): small when group A exceeds group B
    cohens_d: float


def welch_t(group_a, group_b) -> WelchResult:
    """Welch's unequal-variance t-test of mean(A) > mean(B).

    Cohen's d uses the pooled standard deviation.
    """
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise DegenerateGroup("each group needs at least two values")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va <= 0 or vb <= 0:
        raise DegenerateGroup("each group needs positive variance")
    na, nb = a.size, b.size
    sa, sb = va / na, vb / nb
    diff = a.mean() - b.mean()
    t = diff / np.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa ** 2 / (na - 1) + sb ** 2 / (nb - 1))
    p = stats.t.sf(t, df)
    pooled = np.sqrt(((na - 1) * va + (nb - 1) * vb) / (na + nb - 2))
    return WelchResult(float(t), float(df), float(p), float(diff / pooled))


@dataclass(frozen=True)
class PearsonResult:
    r: float
    df: int
    p_two_sided: float


def pearson_r(x, y) -> PearsonResult:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInput("x and y must be 1-D and of equal length")
    n = x.size
    if n < 3:
        raise DegenerateInput("need at least three points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = dx @ dx, dy @ dy
    if sxx <= 0 or syy <= 0:
        raise DegenerateInput("both variables need nonzero variance")
    r = float(np.clip((dx @ dy) / np.sqrt(sxx * syy), -1.0, 1.0))
    df = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * np.sqrt(df / (1.0 - r * r))
        p = float(2.0 * stats.t.sf(abs(t), df))
    return PearsonResult(r, df, p)


# --------------------------------------------------------------------------
# Grades and ranks
# --------------------------------------------------------------------------

GRADES = ("++", "+", "0", "-", "--")


def quantile_grade(values: dict[str, float], higher_is_better: bool = True) -> dict[str, str]:
    """Grade each entry against the 10/25/75/90 % quantiles of all entries.

    Above the 90 % quantile is ``++``, above 75 % ``+``, below 10 % ``--``,
    below 25 % ``-``, otherwise ``0`` (directions flip when lower is better).
    Non-finite values get an empty grade.
    """
    if len(values) < 2:
        raise ValueError("grading needs at least two methods")
    finite = {k: float(v) for k, v in values.items() if np.isfinite(v)}
    out = {k: "" for k in values}
    if len(finite) < 2:
        return out
    sign = 1.0 if higher_is_better else -1.0
    arr = np.array([sign * v for v in finite.values()])
    q10, q25, q75, q90 = np.quantile(arr, [0.10, 0.25, 0.75, 0.90], method="linear")
    for k, v in finite.items():
        s = sign * v
        if s > q90:
            out[k] = "++"
        elif s > q75:
            out[k] = "+"
        elif s < q10:
            out[k] = "--"
        elif s < q25:
            out[k] = "-"
        else:
            out[k] = "0"
    return out


def runtime_grade(seconds: float) -> str:
    if seconds < 0.1:
        return "++"
    if seconds < 1.0:
        return "+"
    if seconds < 10.0:
        return "0"
    if seconds < 60.0:
        return "-"
    return "--"


def coefficient_grade(model: AnalysisModel, top: int = 5, alpha: float = 0.05) -> dict[str, str]:
    """Grade method coefficients against the reference.

    Significantly positive is ``+`` (``++`` if also among the ``top`` largest
    coefficients), significantly negative ``-`` (``--`` among the ``top``
    smallest), otherwise ``0``.
    """
    p = model.p_values
    terms = [(n[len("method:"):], float(b), float(pv))
             for n, b, pv in zip(model.names, model.coefficients, p) if n.startswith("method:")]
    order = sorted(terms, key=lambda t: (-t[1], t[0]))
    best = {t[0] for t in order[:top]}
    worst = {t[0] for t in order[::-1][:top]}
    out = {}
    for name, b, pv in terms:
        if pv < alpha and b > 0:
            out[name] = "++" if name in best else "+"
        elif pv < alpha and b < 0:
            out[name] = "--" if name in worst else "-"
        else:
            out[name] = "0"
    return out


def average_ranks(values: dict[tuple[str, str], float], higher_is_better: bool = True) -> dict[str, float]:
    """Rank methods within each scenario (1 = best, ties averaged) and average the ranks.

    ``values`` maps (scenario, method) to a criterion value.
    """
    by_scen: dict[str, dict[str, float]] = {}
    for (scen, method), v in values.items():
        by_scen.setdefault(scen, {})[method] = v
    acc: dict[str, list[float]] = {}
    for scen, vals in sorted(by_scen.items()):
        names = sorted(k for k, v in vals.items() if np.isfinite(v))
        if not names:
            continue
        arr = np.array([vals[k] for k in names])
        ranks = stats.rankdata(-arr if higher_is_better else arr, method="average")
        for k, r in zip(names, ranks):
            acc.setdefault(k, []).append(float(r))
    return {k: float(np.mean(v)) for k, v in sorted(acc.items())}
