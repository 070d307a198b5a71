"""Session orchestration over the event-sourced engine.

The manager owns the data directory: ingested pools under ``pools/``
and one JSON-lines event log per session under ``sessions/``. All state
changes go through ``_append`` (write-ahead, then fold), so every
acknowledged response survives a crash and any log replays to the live
state. Screening and model training run synchronously inside the
per-session lock the moment their inputs are complete; other sessions
are untouched, and a client can never observe a half-trained packet.
"""

import json
import os
import secrets
import threading

import numpy as np

from . import session as sess
from .dataset import ProfilePool, load_task, pool_from_dict, pool_hash, shipped_task
from .dataset import build_encoding
from .errors import FairguideError, ValidationError
from .fairness import DecisionSet, FairTrainConfig
from .linmodel import TrainConfig
from .store import EventLog, read_events
from .teaching import (
    DEFAULT_ETA,
    build_packet,
    estimate_student,
    estimate_teacher,
)

DEFAULT_SETTINGS = {
    "learning_rate": 0.5,
    "epochs": 2000,
    "l2": 1e-2,
    "penalty_weight": 2.0,
    "eta": DEFAULT_ETA,
    "k": 5,
}


class UnknownSession(FairguideError):
    pass


def avatar_id(profile):
    """Placeholder-avatar key from the profile's demographic categories."""
    gender = str(profile.attributes.get("gender", "any")).lower()
    race = str(profile.attributes.get("race", "any")).lower()
    return f"avatar-{gender}-{race}".replace(" ", "-")


class _Session:
    def __init__(self, log, state):
        self.log = log
        self.state = state
        self.lock = threading.Lock()
        self.request_ids = set()
        self.response_cache = {}


class SessionManager:
    """Desk-scale session service over one data directory."""

    def __init__(self, data_dir, seed=0, settings=None):
        self.data_dir = data_dir
        self.sessions_dir = os.path.join(data_dir, "sessions")
        os.makedirs(self.sessions_dir, exist_ok=True)
        self.settings = dict(DEFAULT_SETTINGS)
        if settings:
            self.settings.update(settings)
        self._rng = np.random.default_rng(seed)
        self._pools = {}
        self._sessions = {}
        self._registry_lock = threading.Lock()

    # --- pools ---------------------------------------------------------

    def pool(self, task_id) -> ProfilePool:
        if task_id not in self._pools:
            path = os.path.join(self.data_dir, "pools", f"{task_id}.json")
            if not os.path.exists(path):
                raise ValidationError(
                    f"no ingested pool for task {task_id!r} "
                    f"(expected {path}; run `fairguide ingest` first)"
                )
            task = self._task(task_id)
            with open(path, encoding="utf-8") as fh:
                self._pools[task_id] = pool_from_dict(json.load(fh), task)
        return self._pools[task_id]

    def _task(self, task_id):
        sidecar = os.path.join(self.data_dir, "tasks", f"{task_id}.yaml")
        if os.path.exists(sidecar):
            return load_task(sidecar)
        return shipped_task(task_id)

    # --- session registry ------------------------------------------------

    def _log_path(self, session_id):
        return os.path.join(self.sessions_dir, f"{session_id}.jsonl")

    def _get(self, session_id) -> _Session:
        with self._registry_lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
            path = self._log_path(session_id)
            events = read_events(path)
            if not events:
                raise UnknownSession(session_id)
            state = sess.replay(events)
            record = _Session(EventLog(path), state)
            record.request_ids = {
                e.request_id for e in events if e.request_id is not None
            }
            self._sessions[session_id] = record
        with record.lock:
            self._pipeline(record)  # resume any computation lost in a crash
        return record

    def _append(self, record, kind, data, request_id=None):
        next_state = sess.advance(
            record.state,
            _Pending(kind, data),
        )
        record.log.append(kind, data, request_id=request_id)
        record.state = next_state
        if request_id is not None:
            record.request_ids.add(request_id)

    # --- idempotency -----------------------------------------------------

    def _idempotent(self, record, request_id):
        """Cached response for a replayed request id; falls back to the
        current snapshot when the cache did not survive a restart."""
        if request_id is None or request_id not in record.request_ids:
            return None
        return record.response_cache.get(
            request_id, self._snapshot(record.state)
        )

    def _remember(self, record, request_id, response):
        if request_id is not None:
            record.request_ids.add(request_id)
            record.response_cache[request_id] = response
        return response

    # --- public operations ------------------------------------------------

    def create_session(self, task_id, condition=None, request_id=None):
        pool = self.pool(task_id)
        if condition is None:
            condition = sess.CONDITIONS[int(self._rng.integers(2))]
        elif condition not in sess.CONDITIONS:
            raise ValidationError(f"unknown condition {condition!r}")
        session_id = secrets.token_urlsafe(16)
        task = pool.task
        cfg = {
            "quota": task.positive_quota,
            "favorable_label": task.favorable_label,
            "privileged_value": task.privileged_value,
            "sensitive_attribute": task.sensitive_attribute,
            "select_label": task.select_label,
            "reject_label": task.reject_label,
            "attribute_names": list(task.attribute_names),
            **self.settings,
        }
        data = {
            "session_id": session_id,
            "task_id": task_id,
            "condition": condition,
            "seed": int(self._rng.integers(2**31)),
            "cfg": cfg,
            "partition": {
                "pretest": list(pool.partition.pretest),
                "minitests": [list(b) for b in pool.partition.minitests],
                "posttest": list(pool.partition.posttest),
            },
            "pool_hash": pool_hash(pool),
        }
        log = EventLog(self._log_path(session_id))
        event = log.append("Created", data, request_id=request_id)
        record = _Session(log, sess.initial_state(event))
        with self._registry_lock:
            self._sessions[session_id] = record
        return self.snapshot(session_id)

    def snapshot(self, session_id):
        record = self._get(session_id)
        with record.lock:
            return self._snapshot(record.state)

    def _snapshot(self, state):
        key = sess._phase_key_for_collection(state.phase)
        progress = None
        if key is not None:
            progress = {
                "done": len(state.block_responses(key)),
                "total": len(state.partition[key]),
            }
        return {
            "session_id": state.session_id,
            "task_id": state.task_id,
            "condition": state.condition,
            "phase": state.phase,
            "progress": progress,
        }

    def next_payload(self, session_id):
        record = self._get(session_id)
        with record.lock:
            state = record.state
            pool = self.pool(state.task_id)
            return self._next_payload(state, pool)

    def _next_payload(self, state, pool):
        phase = state.phase
        key = sess._phase_key_for_collection(phase)
        if key is not None:
            answered = {pid for pid, _, _, _ in state.block_responses(key)}
            remaining = [
                pid for pid in state.partition[key] if pid not in answered
            ]
            task = pool.task
            return {
                "kind": "assessment",
                "phase": phase,
                "task": {
                    "task_id": task.task_id,
                    "select_label": task.select_label,
                    "reject_label": task.reject_label,
                    "instructions": task.instructions,
                    "quota": task.positive_quota,
                },
                "progress": {
                    "done": len(answered),
                    "total": len(state.partition[key]),
                },
                "profiles": [
                    {
                        "profile_id": pid,
                        "attributes": pool.profile(pid).attributes,
                        "avatar": avatar_id(pool.profile(pid)),
                    }
                    for pid in remaining
                ],
            }
        if phase.startswith("treatment_"):
            cycle = int(phase.split("_")[1])
            view = sess.treatment_view(state)
            if view["kind"] == "guidance":
                view["sample_profiles"] = {
                    s["profile_id"]: {
                        "attributes": pool.profile(s["profile_id"]).attributes,
                        "avatar": avatar_id(pool.profile(s["profile_id"])),
                    }
                    for s in view["packet"]["samples"]
                }
            block = state.partition[f"minitest{cycle}"]
            task = pool.task
            return {
                "kind": "treatment",
                "view": view,
                "next_block": {
                    "phase": f"minitest_{cycle}",
                    "task": {
                        "task_id": task.task_id,
                        "select_label": task.select_label,
                        "reject_label": task.reject_label,
                        "instructions": task.instructions,
                        "quota": task.positive_quota,
                    },
                    "progress": {"done": 0, "total": len(block)},
                    "profiles": [
                        {
                            "profile_id": pid,
                            "attributes": pool.profile(pid).attributes,
                            "avatar": avatar_id(pool.profile(pid)),
                        }
                        for pid in block
                    ],
                },
            }
        if phase == "checktest":
            return {"kind": "checktest", "questions": sess.check_test_questions()}
        if phase in ("questionnaire_pre", "questionnaire_post"):
            tag = phase.split("_")[1]
            return {
                "kind": "questionnaire",
                "phase_tag": tag,
                "form": sess.questionnaire_form(tag, state.condition),
                "attribute_picker": {
                    "options": state.cfg["attribute_names"],
                    "max": 5,
                    "submitted": tag in state.attribute_selections,
                },
                "questionnaire_submitted": tag in state.questionnaires,
            }
        if phase == "done":
            return {"kind": "report", "report": self._report(state)}
        if phase == "excluded":
            return {"kind": "excluded", "reason": state.excluded_reason}
        return {"kind": "processing", "phase": phase}

    def submit_responses(self, session_id, responses, request_id=None):
        record = self._get(session_id)
        with record.lock:
            cached = self._idempotent(record, request_id)
            if cached is not None:
                return cached
            if not responses:
                raise ValidationError("empty response batch")
            pool = self.pool(record.state.task_id)
            state = record.state
            if state.phase.startswith("treatment_"):
                cycle = int(state.phase.split("_")[1])
                self._append(record, "TreatmentShown", {"cycle": cycle})
            key = sess._phase_key_for_collection(record.state.phase)
            if key is None:
                raise sess.IllegalTransition(
                    f"responses not accepted in phase {record.state.phase!r}"
                )
            for i, item in enumerate(responses):
                try:
                    profile = pool.profile(item["profile_id"])
                except KeyError:
                    raise ValidationError(
                        f"unknown profile {item['profile_id']!r}"
                    ) from None
                self._append(
                    record,
                    "ResponseSubmitted",
                    {
                        "phase_key": key,
                        "profile_id": item["profile_id"],
                        "decision": item["decision"],
                        "z": profile.z,
                        "y": profile.y,
                    },
                    # tag the first event so the id survives a restart
                    request_id=request_id if i == 0 else None,
                )
            self._pipeline(record)
            return self._remember(
                record, request_id, self._snapshot(record.state)
            )

    def submit_checktest(self, session_id, answers, request_id=None):
        record = self._get(session_id)
        with record.lock:
            cached = self._idempotent(record, request_id)
            if cached is not None:
                return cached
            passed = sess.grade_check_test(answers)
            self._append(
                record,
                "CheckTestResult",
                {"answers": answers, "passed": passed},
                request_id=request_id,
            )
            self._pipeline(record)
            result = dict(self._snapshot(record.state), passed=passed)
            return self._remember(record, request_id, result)

    def submit_attributes(self, session_id, phase, attributes, request_id=None):
        record = self._get(session_id)
        with record.lock:
            cached = self._idempotent(record, request_id)
            if cached is not None:
                return cached
            self._append(
                record,
                "AttributeSelectionSubmitted",
                {"phase": phase, "attributes": list(attributes)},
                request_id=request_id,
            )
            self._pipeline(record)
            return self._remember(
                record, request_id, self._snapshot(record.state)
            )

    def submit_questionnaire(self, session_id, phase, answers, request_id=None):
        record = self._get(session_id)
        with record.lock:
            cached = self._idempotent(record, request_id)
            if cached is not None:
                return cached
            self._append(
                record,
                "QuestionnaireSubmitted",
                {"phase": phase, "answers": answers},
                request_id=request_id,
            )
            self._pipeline(record)
            return self._remember(
                record, request_id, self._snapshot(record.state)
            )

    def report(self, session_id):
        record = self._get(session_id)
        with record.lock:
            return self._report(record.state)

    def _report(self, state):
        return state.report if state.report is not None else sess.finalize(state)

    def session_ids(self):
        ids = []
        for name in sorted(os.listdir(self.sessions_dir)):
            if name.endswith(".jsonl"):
                ids.append(name[: -len(".jsonl")])
        return ids

    # --- computation pipeline ---------------------------------------------

    def _pipeline(self, record):
        """Run screening / training the instant their inputs are ready."""
        while True:
            state = record.state
            if sess.needs_screening(state):
                self._append(
                    record, "ScreeningResult", self._compute_screening(state)
                )
                continue
            cycle = sess.needs_models(state)
            if cycle is not None:
                self._append(
                    record, "ModelsTrained", self._train_cycle(state, cycle)
                )
                continue
            if state.phase in ("done", "excluded") and state.report is None:
                self._append(
                    record, "Finalized", {"report": sess.finalize(state)}
                )
                continue
            return

    def _paired_responses(self, state, pool, rows):
        return [(pool.encoded(pid), dec) for pid, dec, _, _ in rows]

    def _train_configs(self, state):
        cfg = state.cfg
        base = TrainConfig(
            learning_rate=cfg["learning_rate"],
            epochs=cfg["epochs"],
            l2=cfg["l2"],
            seed=state.seed,
        )
        return base, FairTrainConfig(base=base, penalty_weight=cfg["penalty_weight"])

    def _compute_screening(self, state):
        pool = self.pool(state.task_id)
        rows = state.block_responses("pretest")
        base, fair = self._train_configs(state)
        responses = self._paired_responses(state, pool, rows)
        decisions = DecisionSet(
            items=tuple((pid, z, dec) for pid, dec, z, _ in rows),
            task=pool.task,
        )
        try:
            teacher = estimate_teacher(responses, pool, fair)
        except FairguideError:
            teacher = None
        decision = sess.screen(decisions, teacher)
        return {
            "passed": decision.passed,
            "reason": decision.reason,
            "pre_unfairness": decision.pre_unfairness,
            "teacher_unfairness": decision.teacher_unfairness,
        }

    def _train_cycle(self, state, cycle):
        pool = self.pool(state.task_id)
        rows = state.assessment_responses()
        base, fair = self._train_configs(state)
        responses = self._paired_responses(state, pool, rows)
        student = estimate_student(responses, base)
        teacher = estimate_teacher(responses, pool, fair)
        packet = build_packet(
            student,
            teacher,
            responses,
            state.cfg["k"],
            encoding=build_encoding(pool.task),
            eta=state.cfg["eta"],
        )
        return {
            "cycle": cycle,
            "student": {
                "weights": [float(v) for v in student.model.weights],
                "bias": float(student.model.bias),
                "degenerate": student.degenerate,
                "n_responses": student.n_responses,
            },
            "teacher": {
                "weights": [float(v) for v in teacher.model.weights],
                "bias": float(teacher.model.bias),
                "teacher_unfairness": float(teacher.teacher_unfairness),
                "insufficient": teacher.insufficient,
            },
            "packet": packet.to_dict(),
        }


class _Pending:
    """Event-shaped view used to validate before writing to the log."""

    __slots__ = ("kind", "data")

    def __init__(self, kind, data):
        self.kind = kind
        self.data = data
