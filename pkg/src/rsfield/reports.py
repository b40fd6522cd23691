"""Residual reports: named (identity, residual, tolerance) records."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class ReportEntry:
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    context: str = ""


@dataclass
class ResidualReport:
    """Collection of identity-check results; passed <=> residual <= tolerance."""

    suite: str = ""
    entries: list[ReportEntry] = field(default_factory=list)

    def add(self, name: str, residual: float, tolerance: float, context: str = ""):
        residual = float(abs(residual))
        self.entries.append(
            ReportEntry(name, residual, float(tolerance), residual <= tolerance, context)
        )

    def extend(self, other: "ResidualReport"):
        self.entries.extend(other.entries)

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def worst(self) -> ReportEntry | None:
        bad = [e for e in self.entries if not e.passed]
        pool = bad or self.entries
        return max(pool, key=lambda e: e.max_residual / e.tolerance) if pool else None

    def lines(self):
        for ent in self.entries:
            status = "PASS" if ent.passed else "FAIL"
            ctx = f"  [{ent.context}]" if ent.context else ""
            yield (
                f"{status}  {ent.name}: max residual {ent.max_residual:.3e} "
                f"(tol {ent.tolerance:.1e}){ctx}"
            )

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "all_passed": self.all_passed,
            "entries": [
                {
                    "name": e.name,
                    "max_residual": e.max_residual,
                    "tolerance": e.tolerance,
                    "passed": e.passed,
                    "context": e.context,
                }
                for e in self.entries
            ],
        }
