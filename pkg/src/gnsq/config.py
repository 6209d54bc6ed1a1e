"""Run configuration files: parsing, validation and the solver tagged union.

A configuration is a JSON object::

    {
      "schema": 1,
      "problem": {"kind": "trig_system", "n": 5} | "path/to/problem.json",
      "x0": [0.3, ...] | 0.3,
      "solver": {"kind": "deterministic", "scheme": 1, ...DetSolverConfig fields}
              | {"kind": "stochastic", "scheme": "batch_prox", ...StochSolverConfig fields},
      "seeds": [0, 1, 2],
      "output": "runs/example",
      "report_every": 0
    }

``x0`` defaults to the origin. Deterministic runs use the seed for the
Lipschitz estimate only, so their traces repeat across seeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Union

import numpy as np
from numpy.typing import NDArray

from .deterministic import DetSolverConfig, scheme1_run, scheme2_run
from .diagnostics import ProblemConstants
from .errors import ConfigError, GnsqError, StallLimit, UnknownSpec
from .instances import generate_problem, load_problem
from .problem import ResidualProblem
from .stochastic import SCHEME_RUNNERS, Scheme, StochSolverConfig
from .trace import RunState

SCHEMA_VERSION = 1
TOP_LEVEL_KEYS = {"schema", "problem", "x0", "solver", "seeds", "output", "report_every"}
DETERMINISTIC = "deterministic"
STOCHASTIC = "stochastic"

DET_SCHEMES: dict[int, Callable[..., RunState]] = {1: scheme1_run, 2: scheme2_run}
STOCH_SCHEME_NUMBERS = {
    3: Scheme.BATCH_PROX,
    4: Scheme.TWO_BATCH,
    5: Scheme.VARIABLE_INTERVAL,
    6: Scheme.ADAPTIVE_TAU,
}

SolverConfig = Union[DetSolverConfig, StochSolverConfig]


@dataclass(frozen=True)
class RunConfig:
    problem_spec: Union[Mapping[str, Any], str]
    solver: SolverConfig
    scheme: Union[int, Scheme]
    seeds: tuple[int, ...]
    output: Path
    x0: Optional[tuple[float, ...]] = None
    x0_fill: Optional[float] = None
    report_every: int = 0
    base_dir: Path = Path(".")

    @property
    def kind(self) -> str:
        return DETERMINISTIC if isinstance(self.solver, DetSolverConfig) else STOCHASTIC

    @property
    def runner(self) -> Callable[..., RunState]:
        if isinstance(self.solver, DetSolverConfig):
            return DET_SCHEMES[self.scheme]
        return SCHEME_RUNNERS[self.solver.scheme]

    def build_problem(self) -> ResidualProblem:
        if isinstance(self.problem_spec, str):
            path = Path(self.problem_spec)
            return load_problem(path if path.is_absolute() else self.base_dir / path)
        return generate_problem(self.problem_spec)

    def start_point(self, p: ResidualProblem) -> NDArray:
        if self.x0 is not None:
            if len(self.x0) != p.n:
                raise ConfigError(f"x0: expected {p.n} entries, got {len(self.x0)}")
            return np.array(self.x0, dtype=float)
        return np.full(p.n, 0.0 if self.x0_fill is None else self.x0_fill)

    def solver_for_seed(self, seed: int) -> SolverConfig:
        if isinstance(self.solver, DetSolverConfig):
            return replace(self.solver, lipschitz_seed=seed)
        return replace(self.solver, seed=seed)

    def execute(self, seed: int, p: Optional[ResidualProblem] = None) -> RunState:
        """One run for ``seed``; a stall limit ends the run instead of raising."""
        p = self.build_problem() if p is None else p
        try:
            return self.runner(p, self.solver_for_seed(seed), self.start_point(p))
        except StallLimit as exc:
            return exc.state


def _dataclass_kwargs(cls: type, raw: Mapping[str, Any], where: str, skip: set[str]) -> dict[str, Any]:
    allowed = {f.name for f in fields(cls)} - skip
    unknown = sorted(set(raw) - allowed - {"kind", "scheme"})
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}: unknown key")
    return {key: raw[key] for key in raw if key in allowed}


def _build_solver(raw: Any) -> tuple[SolverConfig, Union[int, Scheme]]:
    if not isinstance(raw, Mapping):
        raise ConfigError("solver: expected an object")
    kind = raw.get("kind")
    if kind not in (DETERMINISTIC, STOCHASTIC):
        raise ConfigError(f"solver.kind: expected {DETERMINISTIC!r} or {STOCHASTIC!r}, got {kind!r}")
    if kind == DETERMINISTIC:
        scheme = raw.get("scheme", 1)
        if scheme not in DET_SCHEMES:
            raise ConfigError(f"solver.scheme: deterministic schemes are 1 and 2, got {scheme!r}")
        kwargs = _dataclass_kwargs(DetSolverConfig, raw, "solver", {"lipschitz_seed"})
        if "eta" in kwargs and not isinstance(kwargs["eta"], (int, float)):
            raise ConfigError("solver.eta: expected a number")
        try:
            return DetSolverConfig(**kwargs), scheme
        except (GnsqError, ValueError, TypeError) as exc:
            raise ConfigError(f"solver: {exc}") from exc
    scheme_raw = raw.get("scheme", Scheme.BATCH_PROX.value)
    try:
        scheme = STOCH_SCHEME_NUMBERS[scheme_raw] if isinstance(scheme_raw, int) else Scheme(scheme_raw)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"solver.scheme: unknown stochastic scheme {scheme_raw!r}") from exc
    kwargs = _dataclass_kwargs(StochSolverConfig, raw, "solver", {"seed", "scheme"})
    if "constants" in kwargs:
        try:
            kwargs["constants"] = ProblemConstants.from_dict(kwargs["constants"])
        except (GnsqError, TypeError, ValueError) as exc:
            raise ConfigError(f"solver.constants: {exc}") from exc
    try:
        return StochSolverConfig(scheme=scheme, **kwargs), scheme
    except (GnsqError, ValueError, TypeError) as exc:
        raise ConfigError(f"solver: {exc}") from exc


def parse_config(data: Any, base_dir: Path = Path(".")) -> RunConfig:
    """Validate a decoded configuration; errors name the offending key."""
    if not isinstance(data, Mapping):
        raise ConfigError("config: expected a JSON object")
    unknown = sorted(set(data) - TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    if data.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"schema: expected {SCHEMA_VERSION}, got {data.get('schema')!r}")
    for key in ("problem", "solver", "seeds"):
        if key not in data:
            raise ConfigError(f"{key}: missing")

    problem = data["problem"]
    if not isinstance(problem, (str, Mapping)):
        raise ConfigError("problem: expected a builtin spec object or a path")
    if isinstance(problem, Mapping):
        if "kind" not in problem:
            raise ConfigError("problem.kind: missing")
        try:
            generate_problem(problem)
        except UnknownSpec as exc:
            raise ConfigError(f"problem: {exc}") from exc

    seeds = data["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        raise ConfigError("seeds: expected a non-empty list of integers")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds: duplicate seed")

    x0 = data.get("x0")
    x0_values = x0_fill = None
    if isinstance(x0, list):
        if not all(isinstance(v, (int, float)) for v in x0):
            raise ConfigError("x0: expected numbers")
        x0_values = tuple(float(v) for v in x0)
    elif isinstance(x0, (int, float)) and not isinstance(x0, bool):
        x0_fill = float(x0)
    elif x0 is not None:
        raise ConfigError("x0: expected a list of numbers or a number")

    report_every = data.get("report_every", 0)
    if not isinstance(report_every, int) or report_every < 0:
        raise ConfigError("report_every: expected a nonnegative integer")
    output = data.get("output", "runs")
    if not isinstance(output, str) or not output:
        raise ConfigError("output: expected a path string")

    solver, scheme = _build_solver(data["solver"])
    output_path = Path(output)
    return RunConfig(
        problem_spec=problem,
        solver=solver,
        scheme=scheme,
        seeds=tuple(seeds),
        output=output_path if output_path.is_absolute() else base_dir / output_path,
        x0=x0_values,
        x0_fill=x0_fill,
        report_every=report_every,
        base_dir=base_dir,
    )


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(data, path.parent)
