"""Run configuration: a small sectioned key-value format.

The format is deliberately plain so fixture files can live in the repo and
be written by hand::

    [system]
    branch_slopes = [0.5, 0.5]
    branch_offsets = [0.0, 0.5]
    probabilities = [0.5, 0.5]
    sigma = "inferred"            # or: sigma_slope = 2

    [weight]
    kind = "trig"                 # constant | trig | table
    constant_term = 1.0
    cos = [1.0]

    [grid]
    cells = 1024

Unknown sections or keys are errors; parse errors carry the line number and
semantic errors the field name.  ``RunConfig.emit()`` produces a canonical
text whose re-parse equals the original config.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError
from .grid import GridFunction, Measure
from .system import IfsSystem, WeightExpr, make_system

_SCHEMA: dict[str, dict[str, type]] = {
    "system": {"branch_slopes": list, "branch_offsets": list,
               "probabilities": list, "sigma": str, "sigma_slope": float},
    "weight": {"kind": str, "value": float, "constant_term": float,
               "cos": list, "sin": list, "table_values": list},
    "grid": {"cells": float},
    "solver": {"tol": float, "max_iter": float, "seed": float},
    "sampler": {"seed": float, "paths": float, "depth": float},
    "measure": {"kind": str, "positions": list, "masses": list},
}


@dataclass
class RunConfig:
    branch_slopes: list[float]
    branch_offsets: list[float]
    probabilities: list[float]
    sigma: str = "inferred"
    sigma_slope: int | None = None
    weight_kind: str = "constant"
    weight_value: float = 1.0
    weight_const: float = 1.0
    weight_cos: list[float] = field(default_factory=list)
    weight_sin: list[float] = field(default_factory=list)
    weight_table: list[float] = field(default_factory=list)
    cells: int = 1024
    solver_tol: float = 1e-12
    solver_max_iter: int = 2000
    solver_seed: int = 0
    sampler_seed: int = 7
    sampler_paths: int = 100_000
    sampler_depth: int = 3
    measure_kind: str = "lebesgue"
    measure_positions: list[float] = field(default_factory=list)
    measure_masses: list[float] = field(default_factory=list)

    # -- construction of model objects -----------------------------------

    def build_weight(self) -> WeightExpr:
        if self.weight_kind == "constant":
            return WeightExpr.constant(self.weight_value)
        if self.weight_kind == "trig":
            return WeightExpr.trig(self.weight_const, self.weight_cos,
                                   self.weight_sin)
        if self.weight_kind == "table":
            if not self.weight_table:
                raise ConfigError("table weight needs table_values",
                                  field="weight.table_values")
            return WeightExpr.from_table(GridFunction(self.weight_table))
        raise ConfigError(f"unknown weight kind '{self.weight_kind}'",
                          field="weight.kind")

    def build_system(self) -> IfsSystem:
        sigma = None
        if self.sigma_slope is not None:
            sigma = int(self.sigma_slope)
        elif self.sigma != "inferred":
            raise ConfigError(f"unknown sigma mode '{self.sigma}'",
                              field="system.sigma")
        from .errors import DomainError
        try:
            return make_system(self.branch_slopes, self.branch_offsets,
                               self.probabilities, self.build_weight(),
                               sigma=sigma, n_grid=self.cells)
        except DomainError as exc:
            raise ConfigError(str(exc), field="system") from exc

    def build_measure(self) -> Measure:
        if self.measure_kind == "lebesgue":
            return Measure.lebesgue(self.cells)
        if self.measure_kind == "atoms":
            if len(self.measure_positions) != len(self.measure_masses):
                raise ConfigError("positions and masses differ in length",
                                  field="measure.positions")
            return Measure([0.0] * self.cells,
                           list(zip(self.measure_positions,
                                    self.measure_masses)))
        raise ConfigError(f"unknown measure kind '{self.measure_kind}'",
                          field="measure.kind")

    # -- canonical serialization ------------------------------------------

    def emit(self) -> str:
        def fmt(v) -> str:
            if isinstance(v, str):
                return f'"{v}"'
            if isinstance(v, list):
                return "[" + ", ".join(repr(float(x)) for x in v) + "]"
            if isinstance(v, bool):
                return repr(v)
            if isinstance(v, int):
                return repr(v)
            return repr(float(v))

        lines = ["[system]",
                 f"branch_slopes = {fmt(self.branch_slopes)}",
                 f"branch_offsets = {fmt(self.branch_offsets)}",
                 f"probabilities = {fmt(self.probabilities)}"]
        if self.sigma_slope is not None:
            lines.append(f"sigma_slope = {self.sigma_slope}")
        else:
            lines.append('sigma = "inferred"')
        lines += ["", "[weight]", f'kind = "{self.weight_kind}"']
        if self.weight_kind == "constant":
            lines.append(f"value = {fmt(self.weight_value)}")
        elif self.weight_kind == "trig":
            lines.append(f"constant_term = {fmt(self.weight_const)}")
            if self.weight_cos:
                lines.append(f"cos = {fmt(self.weight_cos)}")
            if self.weight_sin:
                lines.append(f"sin = {fmt(self.weight_sin)}")
        else:
            lines.append(f"table_values = {fmt(self.weight_table)}")
        lines += ["", "[grid]", f"cells = {self.cells}"]
        lines += ["", "[solver]", f"tol = {fmt(self.solver_tol)}",
                  f"max_iter = {self.solver_max_iter}",
                  f"seed = {self.solver_seed}"]
        lines += ["", "[sampler]", f"seed = {self.sampler_seed}",
                  f"paths = {self.sampler_paths}",
                  f"depth = {self.sampler_depth}"]
        lines += ["", "[measure]", f'kind = "{self.measure_kind}"']
        if self.measure_kind == "atoms":
            lines.append(f"positions = {fmt(self.measure_positions)}")
            lines.append(f"masses = {fmt(self.measure_masses)}")
        return "\n".join(lines) + "\n"


def _parse_value(raw: str, lineno: int):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw.startswith("["):
        if not raw.endswith("]"):
            raise ConfigError("unterminated list", line=lineno)
        inner = raw[1:-1].strip()
        if not inner:
            return []
        out = []
        for piece in inner.split(","):
            try:
                out.append(float(piece))
            except ValueError:
                raise ConfigError(f"bad number '{piece.strip()}' in list",
                                  line=lineno) from None
        return out
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse value '{raw}'", line=lineno) from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text into a :class:`RunConfig`."""
    data: dict[str, dict[str, object]] = {}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("unterminated section header", line=lineno)
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section '[{section}]'", line=lineno)
            data.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        if section is None:
            raise ConfigError("key outside of any section", line=lineno)
        key, _, raw_val = line.partition("=")
        key = key.strip()
        if key not in _SCHEMA[section]:
            raise ConfigError(f"unknown key '{key}' in section '[{section}]'",
                              line=lineno)
        value = _parse_value(raw_val, lineno)
        expected = _SCHEMA[section][key]
        if expected is list and not isinstance(value, list):
            raise ConfigError(f"'{key}' expects a list", line=lineno)
        if expected is str and not isinstance(value, str):
            raise ConfigError(f"'{key}' expects a quoted string", line=lineno)
        if expected is float and not isinstance(value, float):
            raise ConfigError(f"'{key}' expects a number", line=lineno)
        data[section][key] = value

    sys_sec = data.get("system", {})
    for required in ("branch_slopes", "branch_offsets", "probabilities"):
        if required not in sys_sec:
            raise ConfigError(f"missing required key '{required}'",
                              field=f"system.{required}")
    weight_sec = data.get("weight", {})
    grid_sec = data.get("grid", {})
    solver_sec = data.get("solver", {})
    sampler_sec = data.get("sampler", {})
    measure_sec = data.get("measure", {})

    def positive(sec: dict, key: str, default: float, field_name: str) -> float:
        val = float(sec.get(key, default))
        if val <= 0:
            raise ConfigError("value must be positive", field=field_name)
        return val

    cfg = RunConfig(
        branch_slopes=list(sys_sec["branch_slopes"]),
        branch_offsets=list(sys_sec["branch_offsets"]),
        probabilities=list(sys_sec["probabilities"]),
        sigma=sys_sec.get("sigma", "inferred"),
        sigma_slope=(int(sys_sec["sigma_slope"])
                     if "sigma_slope" in sys_sec else None),
        weight_kind=weight_sec.get("kind", "constant"),
        weight_value=float(weight_sec.get("value", 1.0)),
        weight_const=float(weight_sec.get("constant_term", 1.0)),
        weight_cos=list(weight_sec.get("cos", [])),
        weight_sin=list(weight_sec.get("sin", [])),
        weight_table=list(weight_sec.get("table_values", [])),
        cells=int(positive(grid_sec, "cells", 1024, "grid.cells")),
        solver_tol=positive(solver_sec, "tol", 1e-12, "solver.tol"),
        solver_max_iter=int(positive(solver_sec, "max_iter", 2000,
                                     "solver.max_iter")),
        solver_seed=int(solver_sec.get("seed", 0)),
        sampler_seed=int(sampler_sec.get("seed", 7)),
        sampler_paths=int(positive(sampler_sec, "paths", 100_000,
                                   "sampler.paths")),
        sampler_depth=int(positive(sampler_sec, "depth", 3, "sampler.depth")),
        measure_kind=measure_sec.get("kind", "lebesgue"),
        measure_positions=list(measure_sec.get("positions", [])),
        measure_masses=list(measure_sec.get("masses", [])),
    )
    if cfg.cells < 2:
        raise ConfigError("grid needs at least 2 cells", field="grid.cells")
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
