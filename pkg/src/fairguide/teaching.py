"""Student/teacher estimation and teaching-sample selection.

The student model is fit to the participant's own decisions (never to
ground truth); the teacher is the parity-penalized refit of the same
responses. Teaching samples are picked greedily: each pick minimizes
the squared parameter distance between the student after one simulated
gradient step and the teacher, then the step is applied virtually and
the search repeats without replacement. Profiles where the two models'
quota decisions disagree are exhausted before agreement profiles are
considered.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fairness import FairTrainConfig, fit_fair, quota_decide, unfairness_score
from .linmodel import LabeledExample, LinearModel, TrainConfig, fit, sgd_step
from .linmodel import loss_gradient

DEFAULT_ETA = 0.1


@dataclass(frozen=True)
class StudentEstimate:
    model: LinearModel
    n_responses: int
    degenerate: bool


@dataclass(frozen=True)
class TeacherEstimate:
    model: LinearModel
    teacher_unfairness: float
    insufficient: bool
    degenerate: bool = False


@dataclass(frozen=True)
class TeachingSample:
    profile_id: str
    student_decision: int
    teacher_decision: int
    objective_score: float


@dataclass(frozen=True)
class GuidancePacket:
    unfairness: object  # UnfairnessReport
    samples: tuple  # of TeachingSample
    student_top5: tuple  # of (column, weight)
    teacher_top5: tuple

    def to_dict(self):
        return {
            "unfairness": self.unfairness.to_dict(),
            "samples": [
                {
                    "profile_id": s.profile_id,
                    "student_decision": s.student_decision,
                    "teacher_decision": s.teacher_decision,
                    "objective_score": s.objective_score,
                }
                for s in self.samples
            ],
            "student_top5": [[c, w] for c, w in self.student_top5],
            "teacher_top5": [[c, w] for c, w in self.teacher_top5],
        }


@dataclass
class SimulatedStudent:
    model: LinearModel
    eta: float
    compliance: float
    rng: np.random.Generator

    def __post_init__(self):
        if self.eta <= 0:
            raise ValidationError("eta must be > 0")
        if not 0.0 <= self.compliance <= 1.0:
            raise ValidationError("compliance must be in [0, 1]")


def _examples_from_responses(responses):
    return [
        LabeledExample(features=ep.features, label=decision, z=ep.z)
        for ep, decision in responses
    ]


def estimate_student(responses, config: TrainConfig = TrainConfig()) -> StudentEstimate:
    """Fit the participant's revealed criteria from their decisions."""
    if not responses:
        raise ValidationError("estimate_student needs at least one response")
    result = fit(_examples_from_responses(responses), config)
    return StudentEstimate(
        model=result.model, n_responses=len(responses), degenerate=result.degenerate
    )


def estimate_teacher(
    responses, pool, config: FairTrainConfig = FairTrainConfig()
) -> TeacherEstimate:
    """Parity-penalized refit of the same responses.

    teacher_unfairness is the |score| of the teacher's quota decisions
    over the full pool; the insufficient flag is set when that does not
    beat the participant's own current |unfairness| over the responses.
    """
    task = pool.task
    result = fit_fair(_examples_from_responses(responses), config)
    decisions = quota_decide(
        result.model, pool.encoded_all(), task.positive_quota, task=task
    )
    teacher_unfairness = abs(unfairness_score(decisions).score)
    own = abs(
        unfairness_score(
            _decision_set_from_responses(responses, task)
        ).score
    )
    return TeacherEstimate(
        model=result.model,
        teacher_unfairness=teacher_unfairness,
        insufficient=teacher_unfairness >= own,
        degenerate=result.degenerate,
    )


def _decision_set_from_responses(responses, task):
    from .fairness import DecisionSet

    return DecisionSet(
        items=tuple((ep.profile_id, ep.z, dec) for ep, dec in responses),
        task=task,
    )


def teaching_objective(
    student: LinearModel, teacher: LinearModel, candidate: LabeledExample, eta: float
) -> float:
    """Squared distance to the teacher after one gradient step on the
    candidate, with the bias treated as an extra coordinate."""
    _, grad_w, grad_b = loss_gradient(student, candidate)
    if teacher.width != student.width:
        raise ValidationError("student and teacher widths differ")
    dw = student.weights - eta * grad_w - teacher.weights
    db = student.bias - eta * grad_b - teacher.bias
    return float(dw @ dw + db * db)


def select_samples(
    student: StudentEstimate,
    teacher: TeacherEstimate,
    answered,
    eta: float = DEFAULT_ETA,
    k: int = 5,
    quota: float = 0.5,
) -> tuple:
    """Greedy teaching-sample pick over already-answered profiles.

    Candidate labels are the teacher's quota decisions over the answered
    set; the reported student decisions are the student model's quota
    decisions over the same set. Ties break by ascending profile_id.
    Returns all available candidates when fewer than k exist.
    """
    if not answered:
        raise ValidationError("select_samples needs answered profiles")
    answered = sorted(answered, key=lambda ep: ep.profile_id)
    teacher_dec = quota_decide(teacher.model, answered, quota).decisions()
    student_dec = quota_decide(student.model, answered, quota).decisions()

    disagree = [
        ep for ep in answered
        if teacher_dec[ep.profile_id] != student_dec[ep.profile_id]
    ]
    agree = [
        ep for ep in answered
        if teacher_dec[ep.profile_id] == student_dec[ep.profile_id]
    ]

    current = student.model
    chosen = []
    taken = set()
    for _ in range(min(k, len(answered))):
        pool = [ep for ep in disagree if ep.profile_id not in taken]
        if not pool:
            pool = [ep for ep in agree if ep.profile_id not in taken]
        best = None
        for ep in pool:  # pool is profile_id-sorted: first win = tie-break
            cand = LabeledExample(
                features=ep.features, label=teacher_dec[ep.profile_id], z=ep.z
            )
            score = teaching_objective(current, teacher.model, cand, eta)
            if best is None or score < best[0]:
                best = (score, ep, cand)
        score, ep, cand = best
        chosen.append(
            TeachingSample(
                profile_id=ep.profile_id,
                student_decision=student_dec[ep.profile_id],
                teacher_decision=teacher_dec[ep.profile_id],
                objective_score=score,
            )
        )
        taken.add(ep.profile_id)
        current = sgd_step(current, cand, eta)
    return tuple(chosen)


def top_weights(model: LinearModel, encoding, n: int = 5) -> tuple:
    """Columns ranked by |weight| descending; ties by column order."""
    order = sorted(
        range(model.width), key=lambda j: (-abs(float(model.weights[j])), j)
    )
    return tuple(
        (encoding.columns[j], float(model.weights[j])) for j in order[:n]
    )


def build_packet(
    student: StudentEstimate,
    teacher: TeacherEstimate,
    responses,
    k: int = 5,
    *,
    encoding,
    eta: float = DEFAULT_ETA,
) -> GuidancePacket:
    """Assemble one treatment screen: unfairness over all responses so
    far, k teaching samples, and both models' top-5 weights with
    human-readable column names."""
    task = encoding.task
    report = unfairness_score(_decision_set_from_responses(responses, task))
    samples = select_samples(
        student,
        teacher,
        [ep for ep, _ in responses],
        eta=eta,
        k=k,
        quota=task.positive_quota,
    )
    return GuidancePacket(
        unfairness=report,
        samples=samples,
        student_top5=top_weights(student.model, encoding),
        teacher_top5=top_weights(teacher.model, encoding),
    )


def simulate_block(student: SimulatedStudent, block, quota: float):
    """Quota-consistent decisions over one presented block."""
    decisions = quota_decide(student.model, block, quota)
    return decisions.decisions()


def simulate_answer(student: SimulatedStudent, profile, quota_context) -> int:
    """Decision for one profile given the (block, quota) context."""
    block, quota = quota_context
    return simulate_block(student, block, quota)[profile.profile_id]


def absorb_guidance(
    student: SimulatedStudent, samples, profiles_by_id
) -> SimulatedStudent:
    """Apply each teaching sample with probability = compliance, in
    packet order, labeling with the teacher's decision."""
    model = student.model
    for sample in samples:
        ep = profiles_by_id[sample.profile_id]
        if student.rng.random() < student.compliance:
            model = sgd_step(
                model,
                LabeledExample(
                    features=ep.features, label=sample.teacher_decision, z=ep.z
                ),
                student.eta,
            )
    return SimulatedStudent(
        model=model, eta=student.eta, compliance=student.compliance, rng=student.rng
    )
