"""Exception hierarchy shared by all filterbench modules."""


class FilterBenchError(Exception):
    """Base class for every error raised by this package."""


class InvalidDataset(FilterBenchError, ValueError):
    pass


class ClassTooSmall(FilterBenchError, ValueError):
    pass


class SingleClass(FilterBenchError, ValueError):
    pass


class InvalidSpec(FilterBenchError, ValueError):
    pass


class RateOutOfRange(FilterBenchError, ValueError):
    pass


class KOutOfRange(FilterBenchError, ValueError):
    pass


class DegenerateRange(FilterBenchError, ValueError):
    pass


class DegenerateSelection(FilterBenchError, ValueError):
    """Stability is undefined when every set is empty or every set is full."""


class UnknownMethod(FilterBenchError, KeyError):
    pass


class UnknownScenario(FilterBenchError, KeyError):
    pass


class RankDeficient(FilterBenchError, ValueError):
    pass


class MissingReference(FilterBenchError, ValueError):
    pass


class DegenerateGroup(FilterBenchError, ValueError):
    pass


class DegenerateInput(FilterBenchError, ValueError):
    pass


class SchemaMismatch(FilterBenchError, ValueError):
    pass


class CellFailure(FilterBenchError, RuntimeError):
    """A benchmark grid cell raised; carries the cell coordinates."""

    def __init__(self, scenario, method, repeat, fold, cause):
        self.scenario = scenario
        self.method = method
        self.repeat = repeat
        self.fold = fold
        self.cause = cause
        super().__init__(
            f"cell failed: scenario={scenario} method={method} "
            f"repeat={repeat} fold={fold}: {cause!r}"
        )

    def __reduce__(self):
        # keep the cell coordinates when crossing process boundaries
        return (CellFailure, (self.scenario, self.method, self.repeat, self.fold, self.cause))
