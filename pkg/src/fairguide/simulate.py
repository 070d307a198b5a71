"""Simulated participants driven through the full session protocol.

A simulated student is a linear model: it answers each block with
quota-consistent decisions from its own probabilities, and (under
guidance, with some compliance) absorbs each teaching sample as one
gradient step. The driver talks to the SessionManager exactly like the
HTTP client would, so simulation runs exercise the event log, the
screening gate, training, packets, and reporting end to end.
"""

from dataclasses import dataclass, field

import numpy as np

from . import session as sess
from .dataset import build_encoding
from .errors import ValidationError
from .fairness import FairTrainConfig
from .linmodel import LabeledExample, LinearModel, TrainConfig, fit
from .teaching import (
    SimulatedStudent,
    TeachingSample,
    absorb_guidance,
    estimate_teacher,
    select_samples,
    simulate_block,
    StudentEstimate,
)


@dataclass
class SimulationSpec:
    task_id: str
    condition: str
    n_students: int = 50
    compliance: float = 1.0
    bias_strength: float = 2.0
    weight_noise: float = 0.25
    eta: float = 0.1
    seed: int = 0
    seeds: tuple = field(default=None)

    def __post_init__(self):
        if self.n_students < 1:
            raise ValidationError("n_students must be >= 1")
        if not 0.0 <= self.compliance <= 1.0:
            raise ValidationError("compliance must be in [0, 1]")
        if self.condition not in sess.CONDITIONS:
            raise ValidationError(f"unknown condition {self.condition!r}")

    def student_seeds(self):
        if self.seeds is not None:
            if len(self.seeds) != self.n_students:
                raise ValidationError("seeds must list one seed per student")
            return list(self.seeds)
        return [self.seed + 1000 * i for i in range(self.n_students)]


def ground_truth_model(pool, config: TrainConfig = TrainConfig()) -> LinearModel:
    """Reference model fit on the pool's ground-truth labels."""
    examples = [
        LabeledExample(features=ep.features, label=ep.y, z=ep.z)
        for ep in pool.encoded_all()
    ]
    return fit(examples, config).model


def biased_student(pool, bias_strength, weight_noise, eta, compliance, seed,
                   base_model=None) -> SimulatedStudent:
    """Simulated participant: competent but with the sensitive column
    bumped toward the privileged group, plus idiosyncratic weight noise."""
    enc = build_encoding(pool.task)
    base = base_model if base_model is not None else ground_truth_model(pool)
    rng = np.random.default_rng(seed)
    weights = base.weights + rng.normal(0.0, weight_noise, size=base.width)
    col = enc.columns.index(
        f"{pool.task.sensitive_attribute}={pool.task.privileged_value}"
    )
    favorable_sign = 1.0 if pool.task.favorable_label == 1 else -1.0
    weights = weights.copy()
    weights[col] += favorable_sign * bias_strength
    model = LinearModel(weights=weights, bias=base.bias)
    return SimulatedStudent(model=model, eta=eta, compliance=compliance, rng=rng)


def _answer_block(manager, session_id, student, quota):
    payload = manager.next_payload(session_id)
    if payload["kind"] == "treatment":
        profiles = payload["next_block"]["profiles"]
    else:
        assert payload["kind"] == "assessment", payload["kind"]
        profiles = payload["profiles"]
    pool = manager.pool(manager.snapshot(session_id)["task_id"])
    block = [pool.encoded(p["profile_id"]) for p in profiles]
    decisions = simulate_block(student, block, quota)
    manager.submit_responses(
        session_id,
        [{"profile_id": ep.profile_id, "decision": decisions[ep.profile_id]}
         for ep in block],
    )


def _top_attributes(student, enc, n=5):
    best = {}
    for col, w in zip(enc.columns, student.model.weights):
        attr = col.split("=")[0]
        best[attr] = max(best.get(attr, 0.0), abs(float(w)))
    ranked = sorted(best, key=lambda a: (-best[a], a))
    return ranked[:n]


def _fill_questionnaire(manager, session_id, tag, student, enc):
    state_cond = manager.snapshot(session_id)["condition"]
    manager.submit_attributes(session_id, tag, _top_attributes(student, enc))
    answers = {}
    for item in sess.questionnaire_form(tag, state_cond):
        if item["kind"] == sess.LIKERT:
            answers[item["id"]] = 3
        elif item["kind"] == sess.LIKERT_DK:
            answers[item["id"]] = "dont_know"
        elif item["kind"] == sess.CHOICE:
            answers[item["id"]] = "Prefer not to say"
        else:
            answers[item["id"]] = ""
    manager.submit_questionnaire(session_id, tag, answers)


def _absorb_treatment(manager, session_id, student, pool):
    payload = manager.next_payload(session_id)
    assert payload["kind"] == "treatment", payload["kind"]
    view = payload["view"]
    if view["kind"] != "guidance":
        return student
    samples = [
        TeachingSample(
            profile_id=s["profile_id"],
            student_decision=s["student_decision"],
            teacher_decision=s["teacher_decision"],
            objective_score=s["objective_score"],
        )
        for s in view["packet"]["samples"]
    ]
    profiles = {s.profile_id: pool.encoded(s.profile_id) for s in samples}
    return absorb_guidance(student, samples, profiles)


def run_student(manager, spec: SimulationSpec, seed, base_model=None):
    """One full simulated session; returns the session report."""
    pool = manager.pool(spec.task_id)
    enc = build_encoding(pool.task)
    quota = pool.task.positive_quota
    student = biased_student(
        pool, spec.bias_strength, spec.weight_noise, spec.eta,
        spec.compliance, seed, base_model=base_model,
    )
    created = manager.create_session(spec.task_id, condition=spec.condition)
    sid = created["session_id"]

    _answer_block(manager, sid, student, quota)  # pre-test
    snap = manager.snapshot(sid)
    if snap["phase"] == "excluded":
        return manager.report(sid)
    _fill_questionnaire(manager, sid, "pre", student, enc)

    if spec.condition == sess.FAIR_MACHINE_GUIDANCE:
        answers = {q["id"]: q["answer"] for q in sess.CHECK_TEST}
        manager.submit_checktest(sid, answers)

    for _ in range(sess.CYCLES):
        student = _absorb_treatment(manager, sid, student, pool)
        _answer_block(manager, sid, student, quota)  # mini-test

    _answer_block(manager, sid, student, quota)  # post-test
    _fill_questionnaire(manager, sid, "post", student, enc)
    return manager.report(sid)


def run_simulation(manager, spec: SimulationSpec):
    """Drive n_students full sessions; deterministic per seed list."""
    pool = manager.pool(spec.task_id)
    base = ground_truth_model(pool)  # shared across students
    return [
        run_student(manager, spec, seed, base_model=base)
        for seed in spec.student_seeds()
    ]


# --- teaching-efficacy harness ----------------------------------------------


def _param_distance(a: LinearModel, b: LinearModel) -> float:
    dw = a.weights - b.weights
    return float(np.sqrt(dw @ dw + (a.bias - b.bias) ** 2))


def teaching_efficacy(pool, n_seeds=30, cycles=5, k=5, eta=0.1,
                      bias_strength=0.75, weight_noise=0.05, seed0=0):
    """Machine-selected vs uniformly random teaching samples.

    Each seed: one biased student answers the pre-test; the teacher is
    the parity-penalized refit of those answers. Five cycles of five
    samples are then absorbed at compliance 1, once with greedy
    selection and once with uniformly random picks from the same
    answered pool (teacher labels in both arms). Returns the per-seed
    final parameter distances (machine, random).
    """
    quota = pool.task.positive_quota
    enc = build_encoding(pool.task)
    col = enc.columns.index(
        f"{pool.task.sensitive_attribute}={pool.task.privileged_value}"
    )
    favorable_sign = 1.0 if pool.task.favorable_label == 1 else -1.0
    pretest = [pool.encoded(pid) for pid in pool.partition.pretest]
    base = ground_truth_model(pool)
    machine_d, random_d = [], []
    for i in range(n_seeds):
        seed_student = biased_student(
            pool, bias_strength, weight_noise, eta, 1.0, seed0 + 7000 + i,
            base_model=base,
        )
        decisions = simulate_block(seed_student, pretest, quota)
        responses = [(ep, decisions[ep.profile_id]) for ep in pretest]
        teacher = estimate_teacher(
            responses, pool, FairTrainConfig()
        )
        # anchor the experiment's student at the teacher plus the planted
        # sensitive-column bias (and idiosyncratic noise): the distance to
        # close is then exactly the bias the guidance is meant to teach away
        rng = np.random.default_rng(seed0 + 7000 + i)
        weights = teacher.model.weights.copy()
        weights += rng.normal(0.0, weight_noise, size=len(weights))
        weights[col] += favorable_sign * bias_strength
        student = SimulatedStudent(
            model=LinearModel(weights=weights, bias=teacher.model.bias),
            eta=eta, compliance=1.0, rng=rng,
        )
        decisions = simulate_block(student, pretest, quota)
        by_id = {ep.profile_id: ep for ep in pretest}

        arms = {}
        for arm in ("machine", "random"):
            sim = SimulatedStudent(
                model=student.model, eta=eta, compliance=1.0,
                rng=np.random.default_rng(seed0 + 9000 + i),
            )
            for _ in range(cycles):
                if arm == "machine":
                    samples = select_samples(
                        StudentEstimate(model=sim.model, n_responses=len(pretest),
                                        degenerate=False),
                        teacher, pretest, eta=eta, k=k, quota=quota,
                    )
                else:
                    picks = sim.rng.choice(len(pretest), size=k, replace=False)
                    tdec = simulate_block(
                        SimulatedStudent(model=teacher.model, eta=eta,
                                         compliance=1.0, rng=sim.rng),
                        pretest, quota,
                    )
                    samples = [
                        TeachingSample(
                            profile_id=pretest[j].profile_id,
                            student_decision=decisions[pretest[j].profile_id],
                            teacher_decision=tdec[pretest[j].profile_id],
                            objective_score=0.0,
                        )
                        for j in sorted(picks)
                    ]
                sim = absorb_guidance(sim, samples, by_id)
            arms[arm] = _param_distance(sim.model, teacher.model)
        machine_d.append(arms["machine"])
        random_d.append(arms["random"])
    return machine_d, random_d
