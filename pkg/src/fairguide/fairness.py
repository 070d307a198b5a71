"""Demographic-parity accounting and penalty-constrained training.

The unfairness score is the gap in favorable-decision rates between the
privileged (z=1) and unprivileged (z=0) groups, computed on hard
decisions. Which decision value counts as favorable comes from the
task: for credit-style tasks the selected label ("high risk") is the
unfavorable one.

The training penalty is the squared gap of mean predicted
probabilities, a smooth surrogate for the decision-rate gap.
"""

import math
from dataclasses import dataclass

from . import kernels
from .errors import EmptyGroupError, ValidationError
from .linmodel import (
    FitResult,
    LinearModel,
    TrainConfig,
    predict_probs,
    stack,
)


@dataclass(frozen=True)
class UnfairnessReport:
    rate_privileged: float
    rate_unprivileged: float
    score: float
    n_privileged: int
    n_unprivileged: int
    decision_semantics: str

    def to_dict(self):
        return {
            "rate_privileged": self.rate_privileged,
            "rate_unprivileged": self.rate_unprivileged,
            "score": self.score,
            "n_privileged": self.n_privileged,
            "n_unprivileged": self.n_unprivileged,
            "decision_semantics": self.decision_semantics,
        }


@dataclass(frozen=True)
class FairTrainConfig:
    base: TrainConfig = TrainConfig()
    penalty_weight: float = 2.0
    penalty_form: str = "squared-gap"

    def __post_init__(self):
        if self.penalty_weight < 0:
            raise ValidationError("penalty_weight must be >= 0")
        if self.penalty_form != "squared-gap":
            raise ValidationError(
                f"unsupported penalty_form {self.penalty_form!r}"
            )


@dataclass(frozen=True)
class DecisionSet:
    items: tuple  # of (profile_id, z, decision)
    task: object = None  # TaskSpec; None means decision 1 is favorable
    favorable: int = None  # explicit override when no TaskSpec is at hand

    def __post_init__(self):
        ids = [pid for pid, _, _ in self.items]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate profile_ids in decision set")

    @property
    def favorable_label(self):
        if self.favorable is not None:
            return self.favorable
        return 1 if self.task is None else self.task.favorable_label

    def decisions(self):
        return {pid: dec for pid, _, dec in self.items}


def unfairness_score(decisions: DecisionSet) -> UnfairnessReport:
    """Favorable-rate gap between groups; positive favors the privileged."""
    fav = decisions.favorable_label
    n = {0: 0, 1: 0}
    k = {0: 0, 1: 0}
    for _, z, dec in decisions.items:
        if z not in (0, 1) or dec not in (0, 1):
            raise ValidationError("z and decision must be 0 or 1")
        n[z] += 1
        if dec == fav:
            k[z] += 1
    if n[1] == 0 or n[0] == 0:
        raise EmptyGroupError(
            f"both groups required (privileged={n[1]}, unprivileged={n[0]})"
        )
    rate1 = k[1] / n[1]
    rate0 = k[0] / n[0]
    semantics = (
        "decision 1 (selected) is favorable"
        if fav == 1
        else "decision 0 is favorable; selection marks the unfavorable outcome"
    )
    return UnfairnessReport(
        rate_privileged=rate1,
        rate_unprivileged=rate0,
        score=rate1 - rate0,
        n_privileged=n[1],
        n_unprivileged=n[0],
        decision_semantics=semantics,
    )


def parity_penalty(model: LinearModel, examples):
    """Squared gap of group-mean predicted probabilities, with its exact
    gradient over (weights, bias)."""
    X, _, z = stack(examples)
    z1 = z.astype(bool)
    n1 = int(z1.sum())
    n0 = len(examples) - n1
    if n1 == 0 or n0 == 0:
        raise EmptyGroupError(
            f"both groups required (privileged={n1}, unprivileged={n0})"
        )
    p = predict_probs(model, X)
    gap = p[z1].mean() - p[~z1].mean()
    s = p * (1.0 - p)
    grad_gap_w = X[z1].T @ s[z1] / n1 - X[~z1].T @ s[~z1] / n0
    grad_gap_b = s[z1].mean() - s[~z1].mean()
    return gap * gap, 2.0 * gap * grad_gap_w, 2.0 * gap * grad_gap_b


def fit_fair(examples, config: FairTrainConfig = FairTrainConfig()) -> FitResult:
    """Full-batch descent on BCE + l2 + penalty_weight * parity penalty.

    With penalty_weight 0 this runs the exact same arithmetic as
    ``linmodel.fit``. Single-class input degrades to the base-rate
    constant model, as there.
    """
    if not examples:
        raise ValidationError("fit_fair needs at least one example")
    X, y, z = stack(examples)
    if config.penalty_weight > 0 and len({e.z for e in examples}) < 2:
        raise EmptyGroupError("fit_fair needs both groups in the batch")
    if len({e.label for e in examples}) < 2:
        from .linmodel import _degenerate_fit

        return _degenerate_fit(y, X.shape[1])
    base = config.base
    w, b, trace = kernels.train_gd(
        X, y, z, base.learning_rate, base.epochs, base.l2, config.penalty_weight
    )
    return FitResult(model=LinearModel(weights=w, bias=b), objective_trace=trace)


def quota_decide(model: LinearModel, pool, quota: float, task=None) -> DecisionSet:
    """Select the ceil(quota * n) most probable profiles.

    Ties break by ascending profile_id; deterministic.
    """
    if not pool:
        raise ValidationError("quota_decide needs a non-empty pool")
    if not 0.0 < quota <= 1.0:
        raise ValidationError("quota must be in (0, 1]")
    k = math.ceil(quota * len(pool))
    scored = sorted(
        ((-(model.weights @ ep.features + model.bias), ep.profile_id, ep)
         for ep in pool),
    )
    selected = {pid for _, pid, _ in scored[:k]}
    items = tuple(
        (ep.profile_id, ep.z, 1 if ep.profile_id in selected else 0)
        for ep in sorted(pool, key=lambda ep: ep.profile_id)
    )
    return DecisionSet(items=items, task=task)
