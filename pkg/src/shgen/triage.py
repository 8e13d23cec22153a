"""Grouping alerts into unique alerts and picking representatives."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .generators import GeneratorKind
from .oracle import Category, FailureClass, Outcome, Verdict

LOG_FIELDS = ("script_id", "kind", "failure_class", "exit_code", "normalized_message", "loc", "script_path")


@dataclass(frozen=True)
class Alert:
    script_id: str
    kind: GeneratorKind
    verdict: Verdict
    exit_code: int | str
    normalized_message: str
    loc: int
    script_path: str = ""

    def __post_init__(self):
        if self.verdict.outcome is not Outcome.ALERT:
            raise ValueError(f"alert {self.script_id} carries a passing verdict")

    @property
    def failure_class(self) -> FailureClass:
        return self.verdict.failure_class

    def to_record(self, **extra) -> dict:
        record = {
            "script_id": self.script_id,
            "kind": self.kind.value,
            "failure_class": self.failure_class.value,
            "exit_code": self.exit_code,
            "normalized_message": self.normalized_message,
            "loc": self.loc,
            "script_path": self.script_path,
            "category": self.verdict.category.value,
            "detail": self.verdict.detail,
        }
        record.update(extra)
        return record

    @classmethod
    def from_record(cls, record: dict) -> "Alert":
        failure = FailureClass(record["failure_class"])
        category = record.get("category") or (
            Category.MEMORY.value
            if failure in (FailureClass.SANITIZER_ADDRESS, FailureClass.SANITIZER_LEAK)
            else Category.LOGIC.value
        )
        verdict = Verdict(
            Outcome.ALERT,
            Category(category),
            record.get("detail", ""),
            failure,
            record["normalized_message"],
        )
        return cls(
            script_id=record["script_id"],
            kind=GeneratorKind(record["kind"]),
            verdict=verdict,
            exit_code=record["exit_code"],
            normalized_message=record["normalized_message"],
            loc=int(record["loc"]),
            script_path=record.get("script_path", ""),
        )


@dataclass(frozen=True)
class Fingerprint:
    kind: GeneratorKind
    failure_class: FailureClass
    exit_code: int | str
    normalized_message: str

    def sort_key(self) -> tuple:
        return (self.kind.value, self.failure_class.value, str(self.exit_code), self.normalized_message)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "failure_class": self.failure_class.value,
            "exit_code": self.exit_code,
            "normalized_message": self.normalized_message,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class AlertGroup:
    fingerprint: Fingerprint
    members: list[str]
    representative: str
    representative_loc: int
    reduced: str | None = None
    reduced_path: str | None = None
    representative_path: str = ""
    extra: dict = field(default_factory=dict)


def fingerprint(alert: Alert) -> Fingerprint:
    return Fingerprint(alert.kind, alert.failure_class, alert.exit_code, alert.normalized_message)


def group(alerts: Iterable[Alert]) -> list[AlertGroup]:
    """Partition alerts by fingerprint; smallest script (then smallest id) represents."""
    buckets: dict[Fingerprint, list[Alert]] = {}
    for alert in alerts:
        buckets.setdefault(fingerprint(alert), []).append(alert)
    groups = []
    for fp in sorted(buckets, key=Fingerprint.sort_key):
        members = buckets[fp]
        best = min(members, key=lambda a: (a.loc, a.script_id))
        groups.append(AlertGroup(
            fingerprint=fp,
            members=sorted(a.script_id for a in members),
            representative=best.script_id,
            representative_loc=best.loc,
            representative_path=best.script_path,
        ))
    return groups


def append_alert(path: Path, alert: Alert, **extra) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(alert.to_record(**extra), sort_keys=True) + "\n")


def read_alert_log(path: Path | str) -> list[Alert]:
    """Read a JSON-lines alert log; a truncated last line is ignored."""
    alerts = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            alerts.append(Alert.from_record(json.loads(line)))
        except json.JSONDecodeError:
            if lineno < len(lines):
                raise ValueError(f"{path}:{lineno}: malformed alert record") from None
    return alerts
