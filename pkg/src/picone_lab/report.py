"""Machine-readable run reports with a deterministic payload."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class CheckRecord:
    """One verified statement: the numbers it was judged on, and the verdict."""

    name: str
    passed: bool
    lhs: float | None = None
    rhs: float | None = None
    residual: float | None = None
    values: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": bool(self.passed)}
        for key in ("lhs", "rhs", "residual"):
            v = getattr(self, key)
            if v is not None:
                out[key] = float(v)
        if self.values:
            out["values"] = {k: (float(v) if isinstance(v, (int, float)) else v)
                             for k, v in self.values.items()}
        return out


@dataclass
class Report:
    config: dict
    checks: list[CheckRecord]
    version: str
    wall_time_s: float = 0.0
    outputs: dict = field(default_factory=dict)

    @property
    def summary(self) -> dict:
        passed = sum(1 for c in self.checks if c.passed)
        return {"passed": passed, "failed": len(self.checks) - passed,
                "total": len(self.checks)}

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def payload(self) -> dict:
        """Everything that must be bit-identical across reruns of the same
        config and seed; wall time and delivery paths stay outside."""
        config = {k: v for k, v in self.config.items()
                  if k not in ("out", "figures")}
        return {
            "config": config,
            "checks": [c.to_dict() for c in self.checks],
            "summary": self.summary,
            "version": self.version,
        }

    def payload_bytes(self) -> bytes:
        return json.dumps(self.payload(), sort_keys=True,
                          separators=(",", ":")).encode()

    def to_json(self) -> str:
        doc = dict(self.payload())
        doc["wall_time_s"] = self.wall_time_s
        if self.outputs:
            doc["outputs"] = self.outputs
        return json.dumps(doc, indent=2, sort_keys=True)

    def table(self) -> str:
        rows = [("check", "lhs", "rhs", "residual", "status")]
        for c in self.checks:
            rows.append((
                c.name,
                "" if c.lhs is None else f"{c.lhs:.6g}",
                "" if c.rhs is None else f"{c.rhs:.6g}",
                "" if c.residual is None else f"{c.residual:.3g}",
                "pass" if c.passed else "FAIL",
            ))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                 for row in rows]
        s = self.summary
        lines.append(f"{s['passed']}/{s['total']} checks passed"
                     + (f", {s['failed']} FAILED" if s["failed"] else ""))
        return "\n".join(lines)
