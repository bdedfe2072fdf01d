"""Structured verification reports.

Every check in this package returns a :class:`Report`: an ordered list of
named identity records, each carrying a pass/fail verdict and, on failure,
the first witness index tuple together with the residual expression at that
witness.  Rendering is deterministic -- the verdict body contains no
timestamps, so two runs over the same input produce identical bytes.  Timing
lives in a separate attribute that is never part of the body.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

__all__ = ["CheckRecord", "Report"]


@dataclass(frozen=True)
class CheckRecord:
    """Verdict for a single named identity.

    ``law`` is the display form of the identity being tested.  On failure,
    ``witness`` holds the first violating index tuple (in the fixed iteration
    order of the check) and ``residual`` the nonzero residual expression at
    that witness, so the failure can be reproduced by re-evaluating that one
    identity instance.
    """

    name: str
    law: str
    passed: bool
    witness: tuple | None = None
    residual: str | None = None

    def to_dict(self) -> dict:
        body = {"name": self.name, "law": self.law, "passed": self.passed}
        if not self.passed:
            body["witness"] = list(self.witness) if self.witness is not None else None
            body["residual"] = self.residual
        return body


@dataclass
class Report:
    """Ordered collection of check records with an overall verdict."""

    title: str
    records: list[CheckRecord] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    elapsed: float | None = None  # seconds; intentionally outside the body

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def record(self, name: str) -> CheckRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def add(
        self,
        name: str,
        law: str,
        passed: bool,
        witness: tuple | None = None,
        residual=None,
    ) -> None:
        if passed:
            witness, residual = None, None
        self.records.append(
            CheckRecord(
                name=name,
                law=law,
                passed=passed,
                witness=witness,
                residual=None if residual is None else str(residual),
            )
        )

    def note(self, text: str) -> None:
        self.notes.append(text)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "records": [r.to_dict() for r in self.records],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def render(self) -> str:
        lines = [self.title]
        width = max((len(r.name) for r in self.records), default=0)
        for r in self.records:
            verdict = "pass" if r.passed else "FAIL"
            line = f"  {r.name.ljust(width)}  {verdict}  {r.law}"
            lines.append(line)
            if not r.passed:
                if r.witness is not None:
                    lines.append(f"    witness: {tuple(r.witness)}")
                if r.residual is not None:
                    lines.append(f"    residual: {r.residual}")
        for note in self.notes:
            lines.append(f"  note: {note}")
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)
