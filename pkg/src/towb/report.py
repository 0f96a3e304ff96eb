"""Machine-readable run reports.

A report collects named scalar results and PASS/FAIL/SKIPPED checks for one
command invocation.  Serialization is deterministic (sorted keys, no wall
clock), so identical configurations and seeds produce byte-identical output;
timing is tracked separately for the human-readable summary only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class Report:
    command: str
    config_echo: str
    options: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    elapsed_s: float | None = None

    def add_result(self, name: str, value) -> None:
        if isinstance(value, float):
            value = float(value)
        self.results[name] = value

    def add_check(self, name: str, status: str, residual: float | None = None,
                  tol: float | None = None, note: str = "") -> None:
        if status == "FAIL" and (residual is None or tol is None):
            raise ValueError("a FAIL check must carry residual and tolerance")
        entry = {"name": name, "status": status}
        if residual is not None:
            entry["residual"] = None if residual != residual else float(residual)
        if tol is not None:
            entry["tol"] = float(tol)
        if note:
            entry["note"] = note
        self.checks.append(entry)

    @property
    def n_failures(self) -> int:
        return sum(1 for c in self.checks if c["status"] == "FAIL")

    @property
    def exit_code(self) -> int:
        return 0 if self.n_failures == 0 else 1

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "config": self.config_echo,
            "options": self.options,
            "results": self.results,
            "checks": self.checks,
            "notes": self.notes,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def summary_lines(self) -> list[str]:
        lines = [f"command: {self.command}"]
        for name in sorted(self.results):
            lines.append(f"  {name} = {self.results[name]}")
        for c in self.checks:
            extra = ""
            if "residual" in c and c["residual"] is not None:
                extra = f"  (residual {c['residual']:.3e}, tol {c.get('tol', 0):.1e})"
            note = f"  [{c['note']}]" if c.get("note") else ""
            lines.append(f"  {c['status']:7s} {c['name']}{extra}{note}")
        for n in self.notes:
            lines.append(f"  note: {n}")
        if self.elapsed_s is not None:
            lines.append(f"  elapsed: {self.elapsed_s:.2f}s")
        return lines
