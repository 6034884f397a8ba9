"""Experiment configuration: TOML in, validated dataclasses out.

Validation errors carry the dotted path of the offending field.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .functions import FUNCTION_KINDS, Evaluable, lift
from .model import NuisancePair
from .nuisance_oracle import ErrorBudget

CASE_NAMES = ("Case1", "Case2", "Case3", "Case4", "ATT")
ESTIMATOR_NAMES = ("plug_in_wate", "dr_wate", "plug_in_att", "dr_att")


@dataclass(frozen=True)
class FunctionSpec:
    kind: str
    params: dict

    def build(self, K: int) -> Evaluable:
        if self.kind == "constant":
            return lift(float(self.params["value"]), K)
        return FUNCTION_KINDS[self.kind](K=K, **self.params)


@dataclass(frozen=True)
class BudgetTerm:
    """``coef * n**exponent``; a constant when ``exponent == 0``."""

    coef: float
    exponent: float = 0.0

    def at(self, n: int | None) -> float:
        if self.exponent == 0:
            return self.coef
        if n is None:
            raise ConfigError("budgets", "budget depends on n but no n given")
        return self.coef * float(n) ** self.exponent


@dataclass(frozen=True)
class BudgetConfig:
    e: BudgetTerm = BudgetTerm(1e-3)
    e_prime: BudgetTerm = BudgetTerm(1e-3)
    f: BudgetTerm = BudgetTerm(1e-3)

    def at(self, n: int | None = None) -> ErrorBudget:
        return ErrorBudget(self.e.at(n), self.e_prime.at(n), self.f.at(n))


@dataclass(frozen=True)
class ScenarioConfig:
    K: int = 1
    c: float = 0.1
    m: FunctionSpec = FunctionSpec("constant", {"value": 0.5})
    g1: FunctionSpec = FunctionSpec("constant", {"value": 0.5})
    g0: FunctionSpec = FunctionSpec("constant", {"value": 0.5})
    w: FunctionSpec = FunctionSpec("constant", {"value": 1.0})

    def center(self) -> NuisancePair:
        return NuisancePair.of(self.m.build(self.K), self.g1.build(self.K), self.g0.build(self.K),
                               K=self.K, c=self.c)

    def weight(self) -> Evaluable:
        return self.w.build(self.K)


@dataclass(frozen=True)
class ConstructionConfig:
    cases: tuple[str, ...] = CASE_NAMES
    levels: int = 6
    lambdas: int = 100
    strict: bool = False
    # per-case budget overrides, e.g. Cases 2 and 4 need f > e
    case_budgets: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RatesConfig:
    n: tuple[int, ...] = tuple(2**k for k in range(10, 17))
    reps: int = 200
    gamma: tuple[float, ...] = (0.9,)
    estimator: str = "dr_wate"
    scenario: str = "rate"  # rate | bias
    center: float = 0.5
    bias: float = 0.1


@dataclass(frozen=True)
class DistinguishConfig:
    n: int = 256
    levels: tuple[int, ...] = (14, 10, 8)
    trials: int = 1000
    delta: float = 1.0
    case: str = "Case1"


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    out: str = "out"
    scenario: ScenarioConfig = ScenarioConfig()
    budgets: BudgetConfig = BudgetConfig()
    construction: ConstructionConfig = ConstructionConfig()
    rates: RatesConfig = RatesConfig()
    distinguish: DistinguishConfig = DistinguishConfig()
    report_inputs: tuple[str, ...] = ()
    sha256: str = ""


def _get(d: dict, key: str, path: str, typ, default, check=None):
    if key not in d:
        return default
    v = d[key]
    if typ is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if typ is not None and not isinstance(v, typ) or isinstance(v, bool) and typ is not bool:
        raise ConfigError(f"{path}.{key}".lstrip("."), f"expected {typ.__name__}, got {type(v).__name__}")
    if check is not None:
        msg = check(v)
        if msg:
            raise ConfigError(f"{path}.{key}".lstrip("."), msg)
    return v


def _function(v: Any, path: str) -> FunctionSpec:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return FunctionSpec("constant", {"value": float(v)})
    if not isinstance(v, dict) or "kind" not in v:
        raise ConfigError(path, "expected a number or a table with a 'kind' key")
    kind = v["kind"]
    if kind not in FUNCTION_KINDS:
        raise ConfigError(f"{path}.kind", f"unknown function {kind!r}; known: {sorted(FUNCTION_KINDS)}")
    params = {k: val for k, val in v.items() if k != "kind"}
    spec = FunctionSpec(kind, params)
    try:
        spec.build(1)
    except TypeError as exc:
        raise ConfigError(path, f"bad parameters for {kind!r}: {exc}") from None
    return spec


def _budget(v: Any, path: str) -> BudgetTerm:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        if v < 0:
            raise ConfigError(path, "budget must be >= 0")
        return BudgetTerm(float(v))
    if isinstance(v, dict):
        coef = _get(v, "coef", path, float, 1.0, lambda x: "must be >= 0" if x < 0 else None)
        exponent = _get(v, "exponent", path, float, 0.0)
        return BudgetTerm(coef, exponent)
    raise ConfigError(path, "expected a number or a table {coef, exponent}")


def _table(d: dict, key: str) -> dict:
    v = d.get(key, {})
    if not isinstance(v, dict):
        raise ConfigError(key, "expected a table")
    return v


def _positive(x):
    return None if x > 0 else "must be positive"


def parse_config(raw: dict, sha256: str = "") -> ExperimentConfig:
    seed = _get(raw, "seed", "", int, 0, lambda x: None if 0 <= x < 2**64 else "must be a u64")
    out = _get(raw, "out", "", str, "out")

    s = _table(raw, "scenario")
    K = _get(s, "K", "scenario", int, 1, lambda x: None if 1 <= x <= 3 else "must be 1, 2 or 3")
    c = _get(s, "c", "scenario", float, 0.1, lambda x: None if 0 < x < 0.5 else "must lie in (0, 1/2)")
    fns = {name: _function(s[name], f"scenario.{name}") for name in ("m", "g1", "g0", "w") if name in s}
    scenario = ScenarioConfig(K, c, **fns)

    b = _table(raw, "budgets")
    budgets = BudgetConfig(**{k: _budget(b[k], f"budgets.{k}") for k in ("e", "e_prime", "f") if k in b})

    cst = _table(raw, "construction")
    cases = _get(cst, "cases", "construction", list, list(CASE_NAMES))
    for i, cname in enumerate(cases):
        if cname not in CASE_NAMES:
            raise ConfigError(f"construction.cases[{i}]", f"unknown case {cname!r}")
    case_budgets = {}
    for cname, tbl in _table(cst, "budgets").items():
        if cname not in CASE_NAMES:
            raise ConfigError(f"construction.budgets.{cname}", "unknown case")
        case_budgets[cname] = BudgetConfig(**{k: _budget(tbl[k], f"construction.budgets.{cname}.{k}")
                                              for k in ("e", "e_prime", "f") if k in tbl})
    construction = ConstructionConfig(
        tuple(cases),
        _get(cst, "levels", "construction", int, 6, lambda x: None if 1 <= x <= 20 else "must be in 1..20"),
        _get(cst, "lambdas", "construction", int, 100, _positive),
        _get(cst, "strict", "construction", bool, False),
        case_budgets,
    )

    r = _table(raw, "rates")
    ns = _get(r, "n", "rates", list, list(RatesConfig.n))
    if not all(isinstance(n, int) and n >= 1 for n in ns):
        raise ConfigError("rates.n", "entries must be positive integers")
    if len(ns) < 4:
        raise ConfigError("rates.n", "a slope fit needs at least 4 n values")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("rates.n", "n grid must be strictly increasing")
    gamma = r.get("gamma", list(RatesConfig.gamma))
    gamma = [gamma] if isinstance(gamma, (int, float)) and not isinstance(gamma, bool) else gamma
    if not isinstance(gamma, list) or not gamma:
        raise ConfigError("rates.gamma", "expected a number or a list of numbers")
    for gval in gamma:
        if isinstance(gval, bool) or not isinstance(gval, (int, float)) or not 0 < gval < 1:
            raise ConfigError("rates.gamma", f"gamma must lie in (0,1), got {gval!r}")
    rates = RatesConfig(
        tuple(ns),
        _get(r, "reps", "rates", int, 200, lambda x: None if x >= 20 else "must be >= 20"),
        tuple(float(g) for g in gamma),
        _get(r, "estimator", "rates", str, "dr_wate",
             lambda x: None if x in ESTIMATOR_NAMES else f"unknown estimator; known: {ESTIMATOR_NAMES}"),
        _get(r, "scenario", "rates", str, "rate",
             lambda x: None if x in ("rate", "bias") else "must be 'rate' or 'bias'"),
        _get(r, "center", "rates", float, 0.5, lambda x: None if 0 < x < 1 else "must lie in (0,1)"),
        _get(r, "bias", "rates", float, 0.1),
    )

    dcfg = _table(raw, "distinguish")
    levels = _get(dcfg, "levels", "distinguish", list, list(DistinguishConfig.levels))
    if not all(isinstance(x, int) and 1 <= x <= 20 for x in levels):
        raise ConfigError("distinguish.levels", "entries must be integers in 1..20")
    distinguish = DistinguishConfig(
        _get(dcfg, "n", "distinguish", int, 256, _positive),
        tuple(levels),
        _get(dcfg, "trials", "distinguish", int, 1000, _positive),
        _get(dcfg, "delta", "distinguish", float, 1.0, lambda x: None if 0 <= x <= 2 else "must lie in [0,2]"),
        _get(dcfg, "case", "distinguish", str, "Case1",
             lambda x: None if x in CASE_NAMES[:4] else "must be one of Case1..Case4"),
    )

    rep = _table(raw, "report")
    inputs = _get(rep, "inputs", "report", list, [])
    return ExperimentConfig(seed, out, scenario, budgets, construction, rates, distinguish,
                            tuple(inputs), sha256)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError("<file>", f"invalid TOML: {exc}") from None
    return parse_config(raw, hashlib.sha256(data).hexdigest())
