"""Name registry mapping every benchmarked filter to a selection routine.

Each entry carries a canonical snake_case name, its package-prefixed alias
(``C:``, ``F:``, ``m:``, ``p:``) and the documented method characteristics
(noise robustness, cost sensitivity, multivariate).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..core import LabeledDataset, make_rng
from ..errors import UnknownMethod
from ..infotheory import DEFAULT_DISC, DiscretizationSpec
from ..learners import ImportanceKind
from .base import CostMatrix, FeatureSet, FeatureWeights, select_top_k
from .multivariate import MiCriterion, cfs_select, consistency_select, greedy_mi_select, rf_importance
from .relief import ReliefParams, ReliefVariant, relief_score
from .univariate import (
    CostSensitiveMethod,
    SplitScoreMethod,
    StatScoreMethod,
    score_cost_sensitive,
    score_split,
    score_stat,
)

REGISTRY_VERSION = "1"
REFERENCE_METHOD = "none"


@dataclass(frozen=True)
class SelectionContext:
    k: int
    seed: int = 0
    disc: DiscretizationSpec = DEFAULT_DISC
    cost_factor: float = 20.0
    trees: int | None = None  # overrides the per-method forest size


@dataclass(frozen=True)
class MethodInfo:
    name: str
    alias: str
    kind: str  # "ranker", "greedy", "subset" or "reference"
    compute: Callable = field(repr=False, compare=False)
    class_noise: bool = False
    attribute_noise: bool = False
    cost_sensitive: bool = False
    multivariate: bool = False

    def weights(self, ds: LabeledDataset, ctx: SelectionContext) -> FeatureWeights:
        if self.kind != "ranker":
            raise TypeError(f"{self.name} does not produce feature weights")
        return self.compute(ds, ctx)

    def select(self, ds: LabeledDataset, ctx: SelectionContext) -> FeatureSet:
        k = max(1, min(ctx.k, ds.p))
        if self.kind == "ranker":
            fs = select_top_k(self.compute(ds, ctx), k)
            return FeatureSet(fs.indices, fs.scores, self.name)
        if self.kind == "greedy":
            return self.compute(ds, ctx, k)
        out = self.compute(ds, ctx)
        return FeatureSet(out.indices, out.scores, self.name)


def _split(method):
    return lambda ds, ctx: score_split(ds, method, ctx.disc)


def _stat(method):
    return lambda ds, ctx: score_stat(ds, method, ctx.disc)


def _cost(method):
    def run(ds, ctx):
        cost = CostMatrix.minority_weighted(ds.labels, ctx.cost_factor)
        return score_cost_sensitive(ds, method, cost, ctx.disc, make_rng(ctx.seed))
    return run


def _relief(variant, sample_size=None, k=10):
    def run(ds, ctx):
        cost = None
        if variant in (ReliefVariant.AVG_C, ReliefVariant.EXP_C, ReliefVariant.PA,
                       ReliefVariant.PE, ReliefVariant.SMP, ReliefVariant.KUKAR):
            cost = CostMatrix.minority_weighted(ds.labels, ctx.cost_factor)
        params = ReliefParams(variant, k_neighbors=k, sample_size=sample_size, cost=cost)
        return relief_score(ds, params, make_rng(ctx.seed))
    return run


def _greedy_run(criterion):
    def run(ds, ctx, k):
        fs = greedy_mi_select(ds, criterion, k, ctx.disc)
        return FeatureSet(fs.indices, fs.scores, criterion.value)
    return run


def _forest(kind, default_trees):
    def run(ds, ctx):
        return rf_importance(ds, kind, ctx.trees or default_trees, ctx.seed)
    return run


def _none(ds, ctx):
    return FeatureSet(tuple(range(ds.p)), (), REFERENCE_METHOD)


# flag shorthands: c = class noise, a = attribute noise, $ = cost sensitive, m = multivariate
def _m(name, alias, kind, compute, flags=""):
    return MethodInfo(name, alias, kind, compute, "c" in flags, "a" in flags, "$" in flags, "m" in flags)


S, T = SplitScoreMethod, StatScoreMethod
V = ReliefVariant

_METHODS = [
    _m("none", "none", "reference", _none),
    _m("accuracy", "C:Accuracy", "ranker", _split(S.ACCURACY)),
    _m("dist_angle", "C:DistAngle", "ranker", _split(S.DIST_ANGLE)),
    _m("dist_auc", "C:DistAUC", "ranker", _split(S.DIST_AUC)),
    _m("dist_euclid", "C:DistEuclid", "ranker", _split(S.DIST_EUCLID)),
    _m("dist_hellinger", "C:DistHellinger", "ranker", _split(S.DIST_HELLINGER)),
    _m("dkm", "C:DKM", "ranker", _split(S.DKM)),
    _m("dkm_cost", "C:DKMcost", "ranker", _cost(CostSensitiveMethod.DKM_COST), "$"),
    _m("equal_dkm", "C:EqualDKM", "ranker", _split(S.EQUAL_DKM)),
    _m("equal_gini", "C:EqualGini", "ranker", _split(S.EQUAL_GINI)),
    _m("equal_hellinger", "C:EqualHellinger", "ranker", _split(S.EQUAL_HELLINGER)),
    _m("equal_inf", "C:EqualInf", "ranker", _split(S.EQUAL_INF)),
    _m("gain_ratio", "C:GainRatio", "ranker", _split(S.GAIN_RATIO)),
    _m("gain_ratio_cost", "C:GainRatioCost", "ranker", _cost(CostSensitiveMethod.GAIN_RATIO_COST), "$"),
    _m("gini", "C:Gini", "ranker", _split(S.GINI)),
    _m("impurity_euclid", "C:ImpurityEuclid", "ranker", _split(S.IMPURITY_EUCLID)),
    _m("impurity_hellinger", "C:ImpurityHellinger", "ranker", _split(S.IMPURITY_HELLINGER)),
    _m("inf_gain", "C:InfGain", "ranker", _split(S.INF_GAIN)),
    _m("mdl", "C:MDL", "ranker", _split(S.MDL)),
    _m("mdl_smp", "C:MDLsmp", "ranker", _cost(CostSensitiveMethod.MDL_SMP), "$"),
    _m("myopic_relieff", "C:MyopicReliefF", "ranker", _split(S.MYOPIC_RELIEFF), "ca"),
    _m("relief", "C:Relief", "ranker", _relief(V.RELIEF), "cam"),
    _m("relieff_avg_c", "C:ReliefFavgC", "ranker", _relief(V.AVG_C), "ca$m"),
    _m("relieff_best_k", "C:ReliefFbestK", "ranker", _relief(V.BEST_K), "cam"),
    _m("relieff_distance", "C:ReliefFdistance", "ranker", _relief(V.DISTANCE), "cam"),
    _m("relieff_equal_k", "C:ReliefFequalK", "ranker", _relief(V.EQUAL_K), "cam"),
    _m("relieff_exp_c", "C:ReliefFexpC", "ranker", _relief(V.EXP_C), "ca$m"),
    _m("relieff_exp_rank", "C:ReliefFexpRank", "ranker", _relief(V.EXP_RANK), "m"),
    _m("relieff_merit", "C:ReliefFmerit", "ranker", _relief(V.MERIT), "cam"),
    _m("relieff_pa", "C:ReliefFpa", "ranker", _relief(V.PA), "ca$m"),
    _m("relieff_pe", "C:ReliefFpe", "ranker", _relief(V.PE), "ca$m"),
    _m("relieff_smp", "C:ReliefFsmp", "ranker", _relief(V.SMP), "ca$m"),
    _m("relieff_sqr_distance", "C:ReliefFsqrDistance", "ranker", _relief(V.SQR_DISTANCE), "cam"),
    _m("relief_kukar", "C:ReliefKukar", "ranker", _relief(V.KUKAR), "ca$m"),
    _m("uniform_accuracy", "C:UniformAccuracy", "ranker", _split(S.UNIFORM_ACCURACY)),
    _m("uniform_dkm", "C:UniformDKM", "ranker", _split(S.UNIFORM_DKM)),
    _m("uniform_gini", "C:UniformGini", "ranker", _split(S.UNIFORM_GINI)),
    _m("uniform_inf", "C:UniformInf", "ranker", _split(S.UNIFORM_INF)),
    _m("cfs", "F:cfs", "subset", lambda ds, ctx: cfs_select(ds, ctx.disc), "cam"),
    _m("chi_squared", "F:chi.squared", "ranker", _stat(T.CHI_SQUARED)),
    _m("consistency", "F:consistency", "subset", lambda ds, ctx: consistency_select(ds, ctx.disc), "cm"),
    _m("gain_ratio_alt", "F:gain.ratio", "ranker", _stat(T.GAIN_RATIO_ALT)),
    _m("one_r", "F:oneR", "ranker", _stat(T.ONE_R)),
    _m("random_forest_importance", "F:random.forest.importance", "ranker",
       _forest(ImportanceKind.PERMUTATION, 500), "m"),
    # FSelector's relief samples 10 instances by default
    _m("relief_sampled", "F:relief", "ranker", _relief(V.RELIEF, sample_size=10), "cam"),
    _m("symmetrical_uncertainty", "F:symmetrical.uncertainty", "ranker", _stat(T.SYMMETRICAL_UNCERTAINTY)),
    _m("anova", "m:anova", "ranker", _stat(T.ANOVA_F)),
    _m("auc", "m:auc", "ranker", _stat(T.PER_FEATURE_AUC)),
    _m("kruskal_test", "m:kruskal.test", "ranker", _stat(T.KRUSKAL_WALLIS)),
    _m("ranger_impurity", "m:ranger_impurity", "ranker", _forest(ImportanceKind.IMPURITY, 500), "m"),
    _m("ranger_permutation", "m:ranger_permutation", "ranker", _forest(ImportanceKind.PERMUTATION, 500), "m"),
    _m("cmim", "p:CMIM", "greedy", _greedy_run(MiCriterion.CMIM), "m"),
    _m("disr", "p:DISR", "greedy", _greedy_run(MiCriterion.DISR), "m"),
    _m("jim", "p:JIM", "greedy", _greedy_run(MiCriterion.JIM), "m"),
    _m("jmi", "p:JMI", "greedy", _greedy_run(MiCriterion.JMI), "m"),
    _m("jmim", "p:JMIM", "greedy", _greedy_run(MiCriterion.JMIM), "m"),
    _m("mim", "p:MIM", "greedy", _greedy_run(MiCriterion.MIM), "m"),
    _m("mrmr", "p:MRMR", "greedy", _greedy_run(MiCriterion.MRMR), "m"),
    _m("njmim", "p:NJMIM", "greedy", _greedy_run(MiCriterion.NJMIM), "m"),
]

METHODS: dict[str, MethodInfo] = {m.name: m for m in _METHODS}
_ALIASES: dict[str, str] = {m.alias: m.name for m in _METHODS}


def method_names(include_reference: bool = True) -> list[str]:
    return [m.name for m in _METHODS if include_reference or m.kind != "reference"]


def get_method(name: str) -> MethodInfo:
    """Look up by canonical name or package-prefixed alias (e.g. ``C:InfGain``)."""
    if name in METHODS:
        return METHODS[name]
    if name in _ALIASES:
        return METHODS[_ALIASES[name]]
    raise UnknownMethod(name)


def resolve_methods(names) -> list[str]:
    """Canonicalise a list of names; ``"all"`` expands to every registered method."""
    out: list[str] = []
    for name in names:
        if name == "all":
            expanded = method_names()
        else:
            expanded = [get_method(name).name]
        for e in expanded:
            if e not in out:
                out.append(e)
    return out


def select_features(name: str, ds: LabeledDataset, ctx: SelectionContext) -> FeatureSet:
    return get_method(name).select(ds, ctx)
