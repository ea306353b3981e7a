"""Warning-conditioned behaviour switching model.

Rows are keyed by (source behaviour kind, warning) and hold a distribution over
target kinds. Timers are handled by :func:`query`: staying in a kind (or moving
between the two delay kinds) keeps the timer, entering any other kind starts
it at zero, and a take-over always restarts the brake timer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

from .core import WarningLevel
from .policies import DELAY_KINDS, PolicyKind, PolicyState

ROW_TOL = 1e-12

Row = Tuple[Tuple[PolicyKind, float], ...]

BRAKE_FAMILY = (PolicyKind.BRAKE, PolicyKind.DELAY_BRAKE)
_SAFE_TRACK = (PolicyKind.SAFE, PolicyKind.DELAY_SAFE)


class TransitionConfigError(ValueError):
    """A transition table row is missing or violates a hard constraint."""


def _blind_rows(leave: Mapping[WarningLevel, float],
                to_brake: Mapping[WarningLevel, float]) -> Dict[WarningLevel, Dict[PolicyKind, float]]:
    rows = {}
    for w in (WarningLevel.TEXT, WarningLevel.VOICE, WarningLevel.ALARM):
        p_leave = leave[w]
        p_brake = p_leave * to_brake[w]
        rows[w] = {
            PolicyKind.BLIND: 1.0 - p_leave,
            PolicyKind.DELAY_SAFE: p_leave - p_brake,
            PolicyKind.DELAY_BRAKE: p_brake,
        }
    return rows


def default_table() -> Dict[Tuple[PolicyKind, WarningLevel], Dict[PolicyKind, float]]:
    """Synthetic default table (no published values exist).

    Leave-Blind mass: Text 0.35, Voice 0.70, Alarm 0.90. The share of leavers
    who brake is 3/14 for Text and Voice and 1/2 for Alarm.
    """
    leave = {WarningLevel.TEXT: 0.35, WarningLevel.VOICE: 0.70, WarningLevel.ALARM: 0.90}
    to_brake = {WarningLevel.TEXT: 3 / 14, WarningLevel.VOICE: 3 / 14, WarningLevel.ALARM: 0.5}
    blind = _blind_rows(leave, to_brake)

    table = {}
    for kind in PolicyKind:
        table[(kind, WarningLevel.NO_WARNING)] = {kind: 1.0}
        table[(kind, WarningLevel.TAKE_OVER)] = {PolicyKind.BRAKE: 1.0}
    for w, row in blind.items():
        table[(PolicyKind.BLIND, w)] = dict(row)
        # an unreacted delay state sees the warning like Blind does: "stay"
        # keeps the pending reaction, a brake outcome upgrades it
        p_brake = row[PolicyKind.DELAY_BRAKE]
        table[(PolicyKind.DELAY_SAFE, w)] = {PolicyKind.DELAY_SAFE: 1.0 - p_brake,
                                             PolicyKind.DELAY_BRAKE: p_brake}
        table[(PolicyKind.DELAY_BRAKE, w)] = {PolicyKind.DELAY_BRAKE: 1.0}
        table[(PolicyKind.BRAKE, w)] = {PolicyKind.BRAKE: 1.0}
    table[(PolicyKind.SAFE, WarningLevel.TEXT)] = {PolicyKind.SAFE: 1.0}
    table[(PolicyKind.SAFE, WarningLevel.VOICE)] = {PolicyKind.SAFE: 1.0}
    table[(PolicyKind.SAFE, WarningLevel.ALARM)] = {PolicyKind.SAFE: 0.95, PolicyKind.BRAKE: 0.05}
    return table


def leave_blind_probability(model: "TransitionModel", w: WarningLevel) -> float:
    return sum(p for k, p in model.row(PolicyKind.BLIND, w) if k != PolicyKind.BLIND)


@dataclass(frozen=True)
class TransitionModel:
    """Validated, immutable switching table."""

    table: Mapping[Tuple[PolicyKind, WarningLevel], Row]
    _memo: Dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @classmethod
    def from_table(cls, table: Mapping[Tuple[PolicyKind, WarningLevel], Mapping[PolicyKind, float]]
                   ) -> "TransitionModel":
        # canonical order (keys and targets sorted) so sampling does not depend
        # on how the table was written down
        frozen = {}
        for (kind, w), row in sorted(table.items()):
            frozen[(PolicyKind(kind), WarningLevel(w))] = tuple(
                sorted((PolicyKind(k), float(p)) for k, p in row.items() if p != 0.0))
        model = cls(frozen)
        model.validate()
        return model

    @classmethod
    def default(cls) -> "TransitionModel":
        return cls.from_table(default_table())

    @property
    def kinds(self) -> Tuple[PolicyKind, ...]:
        return tuple(sorted({k for k, _ in self.table}))

    def row(self, kind: PolicyKind, w: WarningLevel) -> Row:
        return self.table[(kind, w)]

    def validate(self) -> None:
        kinds = self.kinds
        for kind in kinds:
            for w in WarningLevel:
                where = f"row ({kind.label}, {w.label})"
                if (kind, w) not in self.table:
                    raise TransitionConfigError(f"{where} missing")
                row = self.table[(kind, w)]
                total = 0.0
                for target, p in row:
                    if not 0.0 <= p <= 1.0:
                        raise TransitionConfigError(f"{where}: probability {p} outside [0, 1]")
                    if target not in kinds:
                        raise TransitionConfigError(f"{where}: target {target.label} has no rows")
                    total += p
                if abs(total - 1.0) > ROW_TOL:
                    raise TransitionConfigError(f"{where}: probabilities sum to {total!r}")
                targets = dict(row)
                if w == WarningLevel.TAKE_OVER and targets != {PolicyKind.BRAKE: 1.0}:
                    raise TransitionConfigError(f"{where}: take-over must map onto Brake")
                if w == WarningLevel.NO_WARNING and targets != {kind: 1.0}:
                    raise TransitionConfigError(f"{where}: no-warning row must be the identity")
                if kind in BRAKE_FAMILY and any(t in _SAFE_TRACK for t in targets):
                    raise TransitionConfigError(f"{where}: brake behaviour cannot switch to Safe")
        if PolicyKind.BLIND in kinds:
            levels = [leave_blind_probability(self, w) for w in
                      (WarningLevel.NO_WARNING, WarningLevel.TEXT, WarningLevel.VOICE, WarningLevel.ALARM)]
            if any(a > b + ROW_TOL for a, b in zip(levels, levels[1:])):
                raise TransitionConfigError(
                    f"leave-Blind probability must not decrease with severity: {levels}")

    def query(self, pi: PolicyState, w: WarningLevel) -> Tuple[Tuple[PolicyState, float], ...]:
        key = (pi, w)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        out = []
        for target, p in self.table[(pi.kind, w)]:
            if w == WarningLevel.TAKE_OVER:
                nxt = PolicyState(PolicyKind.BRAKE, 0)
            elif target == pi.kind or (target in DELAY_KINDS and pi.kind in DELAY_KINDS):
                nxt = PolicyState(target, pi.timer)
            else:
                nxt = PolicyState(target, 0)
            out.append((nxt, p))
        result = tuple(out)
        self._memo[key] = result
        return result

    def to_json(self) -> Dict[str, Dict[str, Dict[str, float]]]:
        out: Dict[str, Dict[str, Dict[str, float]]] = {}
        for (kind, w), row in sorted(self.table.items()):
            out.setdefault(kind.label, {})[w.label] = {t.label: p for t, p in row}
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Mapping[str, Mapping[str, float]]]) -> "TransitionModel":
        table = {}
        for src, rows in data.items():
            for w, row in rows.items():
                try:
                    key = (PolicyKind.from_label(src), WarningLevel.from_label(w))
                    table[key] = {PolicyKind.from_label(t): p for t, p in row.items()}
                except ValueError as exc:
                    raise TransitionConfigError(f"row ({src}, {w}): {exc}") from None
        return cls.from_table(table)


def query(model: TransitionModel, pi: PolicyState, w: WarningLevel):
    """Distribution over post-warning behaviours, as ``((state, prob), ...)``."""
    return model.query(pi, w)
