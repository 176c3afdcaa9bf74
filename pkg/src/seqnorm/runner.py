"""Stage-by-stage execution over real data batches, with persistence.

A session embeds a full copy of its plan, the samples seen so far, and a
history of (stage, statistic, decision) rows, so a saved file is
self-contained and auditable.  Loading recomputes every history statistic
and decision from the stored samples and rejects the file on any mismatch;
a terminal decision can therefore never be altered by editing the file.

Serialized reals carry 17 significant digits, which round-trip doubles
exactly, so the recompute check can demand bit equality.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import IO, Sequence

from .errors import (
    DomainError,
    IntegrityError,
    PlanCertificationError,
    SeqnormError,
    SessionFormatError,
    StateError,
)
from .plan_known import Decision, KnownVarPlan, Stage, decide_stage, statistic_known
from .plan_unknown import UnknownVarPlan, statistic_unknown

SESSION_SCHEMA_VERSION = 1

_DECISION_NAMES = {
    Decision.CONTINUE: "continue",
    Decision.ACCEPT: "accept",
    Decision.REJECT: "reject",
}
_DECISIONS_BY_NAME = {name: dec for dec, name in _DECISION_NAMES.items()}


# ---------------------------------------------------------------------------
# JSON with fixed-width reals
# ---------------------------------------------------------------------------


def format_real(x: float) -> str:
    """Decimal form with 17 significant digits; parses back to the same double."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"cannot serialize non-finite real {x!r}")
    s = format(x, ".17g")
    if "e" not in s and "E" not in s and "." not in s:
        s += ".0"
    return s


def dump_json(obj, indent: int = 0) -> str:
    """Deterministic JSON emitter; floats go through format_real."""
    pieces: list[str] = []
    _emit(obj, pieces, indent, 0)
    return "".join(pieces)


def _emit(obj, out: list[str], indent: int, depth: int) -> None:
    pad = " " * (indent * (depth + 1)) if indent else ""
    end_pad = " " * (indent * depth) if indent else ""
    sep = ",\n" if indent else ", "
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_real(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n" if indent else "[")
        for i, item in enumerate(obj):
            if i:
                out.append(sep)
            out.append(pad)
            _emit(item, out, indent, depth + 1)
        out.append(("\n" + end_pad + "]") if indent else "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n" if indent else "{")
        for i, (key, val) in enumerate(obj.items()):
            if i:
                out.append(sep)
            out.append(pad)
            out.append(json.dumps(str(key)))
            out.append(": ")
            _emit(val, out, indent, depth + 1)
        out.append(("\n" + end_pad + "}") if indent else "}")
    else:
        raise DomainError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Plan schema (shared by both plan kinds)
# ---------------------------------------------------------------------------


def plan_to_dict(plan) -> dict:
    out = {
        "kind": plan.kind,
        "alpha": plan.alpha,
        "beta": plan.beta,
        "epsilon": plan.epsilon,
        "gamma": plan.gamma,
    }
    if plan.kind == "known":
        out["sigma"] = plan.sigma
    out.update(
        {
            "zeta": plan.zeta,
            "rho": plan.rho,
            "tau": plan.tau,
            "theta_star": plan.theta_star,
            "stages": [{"n": s.n, "a": s.a, "b": s.b} for s in plan.stages],
            "certified": plan.certified,
        }
    )
    return out


def plan_from_dict(data: dict):
    if not isinstance(data, dict):
        raise SessionFormatError("plan must be a JSON object")
    kind = data.get("kind")
    if kind not in ("known", "unknown"):
        raise SessionFormatError(f"unknown plan kind {kind!r}")
    required = {"kind", "alpha", "beta", "epsilon", "gamma", "zeta", "rho", "tau",
                "theta_star", "stages", "certified"}
    if kind == "known":
        required.add("sigma")
    missing = required - set(data)
    if missing:
        raise SessionFormatError(f"plan is missing fields: {sorted(missing)}")
    try:
        stages = tuple(
            Stage(n=int(s["n"]), a=float(s["a"]), b=float(s["b"]))
            for s in data["stages"]
        )
    except (KeyError, TypeError, ValueError, DomainError) as exc:
        raise SessionFormatError(f"malformed stage list: {exc}") from exc
    if not stages:
        raise SessionFormatError("plan has no stages")
    if any(b.n <= a.n for a, b in zip(stages, stages[1:])):
        raise SessionFormatError("stage sizes must increase strictly")
    common = dict(
        alpha=float(data["alpha"]),
        beta=float(data["beta"]),
        epsilon=float(data["epsilon"]),
        gamma=float(data["gamma"]),
        zeta=float(data["zeta"]),
        rho=float(data["rho"]),
        tau=int(data["tau"]),
        theta_star=float(data["theta_star"]),
        stages=stages,
        certified=bool(data["certified"]),
    )
    if kind == "known":
        return KnownVarPlan(sigma=float(data["sigma"]), **common)
    return UnknownVarPlan(n_star=stages[-1].n, **common)


def save_plan(plan, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        fp.write(dump_json(plan_to_dict(plan), indent=2))
        fp.write("\n")


def load_plan(path: str | os.PathLike):
    try:
        with open(path, "r", encoding="utf-8") as fp:
            data = json.load(fp)
    except json.JSONDecodeError as exc:
        raise SessionFormatError(f"plan file is not valid JSON: {exc}") from exc
    return plan_from_dict(data)


# ---------------------------------------------------------------------------
# Session state machine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HistoryEntry:
    stage: int  # 1-based
    statistic: float
    decision: Decision


@dataclass(frozen=True)
class SessionStatus:
    state: str  # "need_more" | "accepted" | "rejected"
    next_n: int | None = None
    stage: int | None = None
    statistic: float | None = None


class TestSession:
    """Single-writer execution state for one plan over incoming batches."""

    def __init__(self, plan):
        self.plan = plan
        self.samples: list[float] = []
        self.history: list[HistoryEntry] = []
        self._stage_index = 0  # next stage to evaluate, 0-based
        self._decision: Decision | None = None

    @property
    def status(self) -> SessionStatus:
        if self._decision is not None:
            last = self.history[-1]
            state = "accepted" if self._decision == Decision.ACCEPT else "rejected"
            return SessionStatus(state=state, stage=last.stage, statistic=last.statistic)
        need = self.plan.stages[self._stage_index].n - len(self.samples)
        return SessionStatus(state="need_more", next_n=need)

    @property
    def is_terminal(self) -> bool:
        return self._decision is not None

    def _statistic(self, n: int) -> float:
        if self.plan.kind == "known":
            return statistic_known(self.samples, n, self.plan.gamma, self.plan.sigma)
        return statistic_unknown(self.samples, n, self.plan.gamma)

    def _advance(self) -> None:
        while self._decision is None:
            stage = self.plan.stages[self._stage_index]
            if len(self.samples) < stage.n:
                return
            value = self._statistic(stage.n)
            decision = decide_stage(value, stage)
            self.history.append(
                HistoryEntry(stage=self._stage_index + 1, statistic=value, decision=decision)
            )
            if decision == Decision.CONTINUE:
                if self._stage_index + 1 >= len(self.plan.stages):
                    raise SeqnormError(
                        "final stage returned continue; plan thresholds are inconsistent"
                    )
                self._stage_index += 1
            else:
                self._decision = decision


def new_session(plan, allow_uncertified: bool = False) -> TestSession:
    """Fresh session; refuses uncertified plans unless explicitly allowed."""
    if not plan.stages:
        raise DomainError("plan has no stages")
    if not plan.certified and not allow_uncertified:
        raise PlanCertificationError(
            "plan is not certified; pass allow_uncertified=True to run it anyway"
        )
    return TestSession(plan)


def feed(session: TestSession, batch: Sequence[float]) -> TestSession:
    """Append a batch and evaluate every stage it completes.

    Samples arriving in the same batch beyond a terminal decision are kept
    for the record but never consulted; feeding a session that is already
    terminal is a state error.
    """
    if session.is_terminal:
        raise StateError("session already reached a terminal decision")
    values = [float(x) for x in batch]
    if any(not math.isfinite(v) for v in values):
        raise DomainError("samples must be finite reals")
    session.samples.extend(values)
    session._advance()
    return session


# ---------------------------------------------------------------------------
# Session persistence
# ---------------------------------------------------------------------------


def _status_to_dict(status: SessionStatus) -> dict:
    out = {"state": status.state}
    if status.next_n is not None:
        out["next_n"] = status.next_n
    if status.stage is not None:
        out["stage"] = status.stage
    if status.statistic is not None:
        out["statistic"] = status.statistic
    return out


def session_to_dict(session: TestSession) -> dict:
    return {
        "version": SESSION_SCHEMA_VERSION,
        "plan": plan_to_dict(session.plan),
        "samples": list(session.samples),
        "status": _status_to_dict(session.status),
        "history": [
            {
                "stage": h.stage,
                "statistic": h.statistic,
                "decision": _DECISION_NAMES[h.decision],
            }
            for h in session.history
        ],
    }


def save_session(session: TestSession, target: str | os.PathLike | IO[str]) -> None:
    text = dump_json(session_to_dict(session), indent=2) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8", newline="\n") as fp:
            fp.write(text)


def session_from_dict(data: dict) -> TestSession:
    if not isinstance(data, dict):
        raise SessionFormatError("session must be a JSON object")
    if data.get("version") != SESSION_SCHEMA_VERSION:
        raise SessionFormatError(
            f"unsupported session schema version {data.get('version')!r}"
        )
    for key in ("plan", "samples", "status", "history"):
        if key not in data:
            raise SessionFormatError(f"session is missing field {key!r}")
    plan = plan_from_dict(data["plan"])
    try:
        samples = [float(x) for x in data["samples"]]
        stored_history = [
            (int(h["stage"]), float(h["statistic"]), str(h["decision"]))
            for h in data["history"]
        ]
        stored_status = dict(data["status"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SessionFormatError(f"malformed session payload: {exc}") from exc

    # replay the samples through a fresh session, then demand that every
    # stored history row matches the recomputation bit for bit
    session = TestSession(plan)
    session.samples = samples
    session._advance()

    replayed = [
        (h.stage, h.statistic, _DECISION_NAMES[h.decision]) for h in session.history
    ]
    if replayed != stored_history:
        raise IntegrityError(
            "stored history does not match recomputation from samples"
        )
    derived_status = _status_to_dict(session.status)
    if derived_status != stored_status:
        raise IntegrityError("stored status does not match recomputation from samples")
    return session


def load_session(source: str | os.PathLike | IO[str]) -> TestSession:
    try:
        if hasattr(source, "read"):
            data = json.load(source)
        else:
            with open(source, "r", encoding="utf-8") as fp:
                data = json.load(fp)
    except json.JSONDecodeError as exc:
        raise SessionFormatError(f"session file is not valid JSON: {exc}") from exc
    return session_from_dict(data)
