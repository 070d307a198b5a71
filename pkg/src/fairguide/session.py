"""Per-participant experiment state machine.

A session is an append-only stream of events; ``advance`` folds one
event into an immutable state snapshot and replaying a recorded stream
reproduces the state bit for bit. The engine never trains models
itself: screening and model estimates arrive as recorded events
(``ScreeningResult``, ``ModelsTrained``) that the service computes and
appends, so replay needs no data files and no numerics.

Phase graph (conditions: bias_feedback | fair_machine_guidance):

    pretest (100) -> screening -> questionnaire_pre
      -> [checktest, guidance only] -> treatment_1 -> minitest_1 (20)
      -> ... -> treatment_5 -> minitest_5 -> posttest (100)
      -> questionnaire_post -> done
    screening may instead end in: excluded(reason)
"""

from dataclasses import dataclass, field, replace

from .errors import (
    DuplicateResponse,
    IllegalTransition,
    ValidationError,
)
from .fairness import DecisionSet, unfairness_score
from .errors import EmptyGroupError

BIAS_FEEDBACK = "bias_feedback"
FAIR_MACHINE_GUIDANCE = "fair_machine_guidance"
CONDITIONS = (BIAS_FEEDBACK, FAIR_MACHINE_GUIDANCE)

SCREEN_THRESHOLD = 0.03
CYCLES = 5

EVENT_KINDS = (
    "Created",
    "ResponseSubmitted",
    "ScreeningResult",
    "ModelsTrained",
    "TreatmentShown",
    "CheckTestResult",
    "AttributeSelectionSubmitted",
    "QuestionnaireSubmitted",
    "PhaseAdvanced",
    "Finalized",
)

# --- questionnaires ---------------------------------------------------------

LIKERT = "likert5"
LIKERT_DK = "likert5_dk"  # likert plus an "I don't know" escape
TEXT = "text"
CHOICE = "choice"

_RACE_CHOICES = ("Asian", "White", "Black or African American",
                 "Prefer not to say")
_GENDER_CHOICES = ("Female", "Male", "Non-binary", "Prefer not to say")
_AGE_CHOICES = ("-19", "20-29", "30-39", "40-49", "50-59", "60+",
                "Prefer not to say")


def _item(item_id, kind, prompt, visibility="both", options=()):
    return {
        "id": item_id,
        "kind": kind,
        "prompt": prompt,
        "visibility": visibility,
        "options": list(options),
    }


PRE_QUESTIONNAIRE = (
    _item("Q1", LIKERT, "Should the share of people receiving the favorable "
                        "outcome be the same across demographic groups?"),
    _item("Q1_reason", TEXT, "What makes you say that?"),
    _item("Q2", LIKERT, "Were your answers so far fair?"),
    _item("Q2_reason", TEXT, "What makes you say that?"),
)

# Q3 (pre) and Q11 (post) are the key-attribute selections and are
# captured through the attribute-selection flow, not as form items.
POST_QUESTIONNAIRE = (
    _item("Q4", LIKERT, "Were your answers in the final block fair?"),
    _item("Q4_reason", TEXT, "What makes you say that?"),
    _item("Q5", LIKERT, "Between test blocks we showed advice about your "
                        "selections. Did you choose to follow it?"),
    _item("Q5_reason", TEXT, "What makes you say that?"),
    _item("Q6", LIKERT, "Did you understand why the fair model judged "
                        "profiles the way it did?", visibility="guidance"),
    _item("Q6_reason", TEXT, "What makes you say that?",
          visibility="guidance"),
    _item("Q7", LIKERT_DK, "Was the fair model itself fair?",
          visibility="guidance"),
    _item("Q7_reason", TEXT, "What makes you say that?",
          visibility="guidance"),
    _item("Q8", LIKERT, "Did the criteria shown as yours match how you "
                        "actually decided?", visibility="guidance"),
    _item("Q8_reason", TEXT, "What makes you say that?",
          visibility="guidance"),
    _item("Q9", TEXT, "Which parts of the advice did you doubt, and which "
                      "did you find convincing?"),
    _item("Q10", LIKERT, "Did these tasks make you rethink what counts as a "
                         "fair decision, for you or for society?"),
    _item("Q10_reason", TEXT, "If you answered 4 or 5, what changed in how "
                              "you think about fairness?"),
    _item("Q11_reason", TEXT, "Why did you pick the attributes you just "
                              "selected as important?"),
    _item("Q12", TEXT, "Did your decision criteria change after the advice? "
                       "How?"),
    _item("Q13", TEXT, "Would machine help be useful to you for making fair "
                       "judgments? In what situations?"),
    _item("Q14", TEXT, "Any concerns if this kind of fairness guidance were "
                       "deployed in practice?"),
    _item("demo_race", CHOICE, "Your race:", options=_RACE_CHOICES),
    _item("demo_gender", CHOICE, "Your gender:", options=_GENDER_CHOICES),
    _item("demo_age", CHOICE, "Your age bracket:", options=_AGE_CHOICES),
)


def questionnaire_form(phase_tag, condition):
    """Items visible to this condition, in order."""
    items = PRE_QUESTIONNAIRE if phase_tag == "pre" else POST_QUESTIONNAIRE
    return [
        i for i in items
        if i["visibility"] == "both"
        or condition == FAIR_MACHINE_GUIDANCE
    ]


def validate_questionnaire(phase_tag, condition, answers):
    form = questionnaire_form(phase_tag, condition)
    visible = {i["id"]: i for i in form}
    unknown = set(answers) - set(visible)
    if unknown:
        raise ValidationError(f"unknown or hidden items: {sorted(unknown)}")
    missing = set(visible) - set(answers)
    if missing:
        raise ValidationError(f"missing answers: {sorted(missing)}")
    for item_id, value in answers.items():
        item = visible[item_id]
        if item["kind"] == LIKERT:
            if not (isinstance(value, int) and 1 <= value <= 5):
                raise ValidationError(f"{item_id}: expected 1..5")
        elif item["kind"] == LIKERT_DK:
            if value != "dont_know" and not (
                isinstance(value, int) and 1 <= value <= 5
            ):
                raise ValidationError(f"{item_id}: expected 1..5 or dont_know")
        elif item["kind"] == TEXT:
            if not isinstance(value, str):
                raise ValidationError(f"{item_id}: expected text")
        elif item["kind"] == CHOICE:
            if value not in item["options"]:
                raise ValidationError(f"{item_id}: not one of the options")


# --- check test -------------------------------------------------------------

CHECK_TEST = (
    {
        "id": "ct1",
        "prompt": "In the criteria charts, which attributes are highlighted?",
        "options": (
            "The first five attributes of the profile",
            "The five with the largest absolute weights",
            "Five attributes picked at random",
        ),
        "answer": 1,
    },
    {
        "id": "ct2",
        "prompt": "A long bar pointing toward the select side means:",
        "options": (
            "The model leans toward selecting people with this attribute",
            "The attribute is ignored by the model",
            "The attribute describes a privileged group",
        ),
        "answer": 0,
    },
    {
        "id": "ct3",
        "prompt": "The two charts shown side by side compare:",
        "options": (
            "This block's answers with the previous block's",
            "Two other participants' criteria",
            "Your estimated criteria with the fair model's criteria",
        ),
        "answer": 2,
    },
)


def check_test_questions():
    """Check-test items without the answer keys (safe to serve)."""
    return [
        {"id": q["id"], "prompt": q["prompt"], "options": list(q["options"])}
        for q in CHECK_TEST
    ]


def grade_check_test(answers):
    """answers: item id -> option index. Pass requires all correct."""
    for q in CHECK_TEST:
        value = answers.get(q["id"])
        if not isinstance(value, int) or not 0 <= value < len(q["options"]):
            raise ValidationError(f"{q['id']}: expected an option index")
    extra = set(answers) - {q["id"] for q in CHECK_TEST}
    if extra:
        raise ValidationError(f"unknown check-test items: {sorted(extra)}")
    return all(answers[q["id"]] == q["answer"] for q in CHECK_TEST)


# --- state ------------------------------------------------------------------


@dataclass(frozen=True)
class SessionState:
    session_id: str
    task_id: str
    condition: str
    seed: int
    cfg: dict  # quota, favorable_label, labels, eta, k, train settings
    partition: dict  # phase_key -> tuple of profile ids
    pool_hash: str
    phase: str = "pretest"
    responses: dict = field(default_factory=dict)  # phase_key -> [(pid, dec, z, y)]
    attribute_selections: dict = field(default_factory=dict)  # pre/post -> [names]
    questionnaires: dict = field(default_factory=dict)  # pre/post -> answers
    screening: dict = None
    estimates: dict = field(default_factory=dict)  # cycle -> event payload
    checktest_attempts: tuple = ()
    excluded_reason: str = None
    report: dict = None

    def block_ids(self, phase_key):
        return self.partition[phase_key]

    def block_responses(self, phase_key):
        return self.responses.get(phase_key, [])

    def block_complete(self, phase_key):
        return len(self.block_responses(phase_key)) == len(
            self.partition[phase_key]
        )

    def assessment_responses(self):
        """All pre + mini-test responses recorded so far, in order."""
        out = list(self.responses.get("pretest", []))
        for c in range(1, CYCLES + 1):
            out.extend(self.responses.get(f"minitest{c}", []))
        return out

    def total_responses(self):
        return sum(len(v) for v in self.responses.values())


def _phase_key_for_collection(phase):
    if phase == "pretest":
        return "pretest"
    if phase == "posttest":
        return "posttest"
    if phase.startswith("minitest_"):
        return "minitest" + phase.split("_")[1]
    return None


def initial_state(created_event) -> SessionState:
    data = created_event.data
    if created_event.kind != "Created":
        raise IllegalTransition("first event must be Created")
    if data["condition"] not in CONDITIONS:
        raise ValidationError(f"unknown condition {data['condition']!r}")
    partition = {"pretest": tuple(data["partition"]["pretest"]),
                 "posttest": tuple(data["partition"]["posttest"])}
    for i, block in enumerate(data["partition"]["minitests"], start=1):
        partition[f"minitest{i}"] = tuple(block)
    return SessionState(
        session_id=data["session_id"],
        task_id=data["task_id"],
        condition=data["condition"],
        seed=data["seed"],
        cfg=dict(data["cfg"]),
        partition=partition,
        pool_hash=data["pool_hash"],
    )


def advance(state: SessionState, event) -> SessionState:
    """Pure transition; raises IllegalTransition / DuplicateResponse /
    ValidationError on anything not legal in the current phase."""
    handler = _HANDLERS.get(event.kind)
    if handler is None:
        raise ValidationError(f"unknown event kind {event.kind!r}")
    if state.phase == "excluded" and event.kind != "Finalized":
        raise IllegalTransition(
            f"session is excluded ({state.excluded_reason}); "
            f"{event.kind} not accepted"
        )
    return handler(state, event.data)


def _response(state, data):
    phase_key = data["phase_key"]
    expected = _phase_key_for_collection(state.phase)
    if expected is None or phase_key != expected:
        raise IllegalTransition(
            f"response for {phase_key!r} not legal in phase {state.phase!r}"
        )
    if data["decision"] not in (0, 1):
        raise ValidationError("decision must be 0 or 1")
    if data["profile_id"] not in state.partition[phase_key]:
        raise ValidationError(
            f"profile {data['profile_id']!r} is not in the {phase_key} block"
        )
    block = state.block_responses(phase_key)
    if len(block) >= len(state.partition[phase_key]):
        raise IllegalTransition(f"{phase_key} block already complete")
    if any(pid == data["profile_id"] for pid, _, _, _ in block):
        raise DuplicateResponse(
            f"profile {data['profile_id']!r} already answered in {phase_key}"
        )
    responses = dict(state.responses)
    responses[phase_key] = block + [
        (data["profile_id"], data["decision"], data["z"], data["y"])
    ]
    state = replace(state, responses=responses)

    if not state.block_complete(phase_key):
        return state
    # block finished: move the phase machine
    if phase_key == "pretest":
        return replace(state, phase="screening")
    if phase_key == "posttest":
        return replace(state, phase="questionnaire_post")
    cycle = int(phase_key[len("minitest"):])
    if cycle == CYCLES:
        return replace(state, phase="posttest")
    if state.condition == BIAS_FEEDBACK:
        return replace(state, phase=f"treatment_{cycle + 1}")
    return state  # guidance: wait for ModelsTrained(cycle+1)


def _screening_result(state, data):
    if state.phase != "screening":
        raise IllegalTransition(f"ScreeningResult not legal in {state.phase!r}")
    new = replace(state, screening=dict(data))
    if data["passed"]:
        return replace(new, phase="questionnaire_pre")
    return replace(new, phase="excluded", excluded_reason=data["reason"])


def _models_trained(state, data):
    if state.condition != FAIR_MACHINE_GUIDANCE:
        raise IllegalTransition("ModelsTrained only occurs under guidance")
    cycle = data["cycle"]
    if cycle in state.estimates:
        raise IllegalTransition(f"cycle {cycle} models already recorded")
    estimates = dict(state.estimates)
    estimates[cycle] = dict(data)
    if cycle == 1 and state.phase in ("questionnaire_pre", "checktest"):
        return replace(state, estimates=estimates)
    if (
        state.phase.startswith("minitest_")
        and state.block_complete(_phase_key_for_collection(state.phase))
        and cycle == int(state.phase.split("_")[1]) + 1
        and cycle <= CYCLES
    ):
        return replace(state, estimates=estimates, phase=f"treatment_{cycle}")
    raise IllegalTransition(
        f"ModelsTrained(cycle={cycle}) not legal in phase {state.phase!r}"
    )


def _treatment_shown(state, data):
    if not state.phase.startswith("treatment_"):
        raise IllegalTransition(f"TreatmentShown not legal in {state.phase!r}")
    cycle = int(state.phase.split("_")[1])
    if data["cycle"] != cycle:
        raise IllegalTransition(
            f"TreatmentShown cycle {data['cycle']} != current cycle {cycle}"
        )
    return replace(state, phase=f"minitest_{cycle}")


def _check_test_result(state, data):
    if state.phase != "checktest":
        raise IllegalTransition(f"CheckTestResult not legal in {state.phase!r}")
    passed = grade_check_test(data["answers"])
    if passed != data["passed"]:
        raise ValidationError("recorded check-test result does not re-grade")
    attempts = state.checktest_attempts + (dict(data),)
    state = replace(state, checktest_attempts=attempts)
    if not passed:
        return state  # unlimited retries
    if 1 not in state.estimates:
        raise IllegalTransition("cycle 1 models not trained yet")
    return replace(state, phase="treatment_1")


def _attributes(state, data):
    tag = data["phase"]
    if tag not in ("pre", "post"):
        raise ValidationError("attribute selection phase must be pre or post")
    if state.phase != f"questionnaire_{tag}":
        raise IllegalTransition(
            f"attribute selection ({tag}) not legal in {state.phase!r}"
        )
    if tag in state.attribute_selections:
        raise IllegalTransition(f"{tag} attribute selection already recorded")
    names = data["attributes"]
    if not isinstance(names, (list, tuple)) or len(names) > 5:
        raise ValidationError("select at most five attributes")
    if len(set(names)) != len(names):
        raise ValidationError("duplicate attribute names")
    unknown = set(names) - set(state.cfg["attribute_names"])
    if unknown:
        raise ValidationError(f"unknown attributes: {sorted(unknown)}")
    selections = dict(state.attribute_selections)
    selections[tag] = list(names)
    return _finish_questionnaire_phase(
        replace(state, attribute_selections=selections), tag
    )


def _questionnaire(state, data):
    tag = data["phase"]
    if tag not in ("pre", "post"):
        raise ValidationError("questionnaire phase must be pre or post")
    if state.phase != f"questionnaire_{tag}":
        raise IllegalTransition(
            f"questionnaire ({tag}) not legal in {state.phase!r}"
        )
    if tag in state.questionnaires:
        raise IllegalTransition(f"{tag} questionnaire already recorded")
    validate_questionnaire(tag, state.condition, data["answers"])
    forms = dict(state.questionnaires)
    forms[tag] = dict(data["answers"])
    return _finish_questionnaire_phase(
        replace(state, questionnaires=forms), tag
    )


def _finish_questionnaire_phase(state, tag):
    if tag not in state.attribute_selections or tag not in state.questionnaires:
        return state  # waiting for the other submission
    if tag == "pre":
        if state.condition == FAIR_MACHINE_GUIDANCE:
            return replace(state, phase="checktest")
        return replace(state, phase="treatment_1")
    return replace(state, phase="done")


def _phase_advanced(state, data):
    # Assertion marker: no transition of its own.
    if data.get("phase") != state.phase:
        raise IllegalTransition(
            f"PhaseAdvanced claims {data.get('phase')!r}, "
            f"state is {state.phase!r}"
        )
    return state


def _finalized(state, data):
    if state.phase not in ("done", "excluded"):
        raise IllegalTransition(f"Finalized not legal in {state.phase!r}")
    return replace(state, report=dict(data["report"]))


_HANDLERS = {
    "ResponseSubmitted": _response,
    "ScreeningResult": _screening_result,
    "ModelsTrained": _models_trained,
    "TreatmentShown": _treatment_shown,
    "CheckTestResult": _check_test_result,
    "AttributeSelectionSubmitted": _attributes,
    "QuestionnaireSubmitted": _questionnaire,
    "PhaseAdvanced": _phase_advanced,
    "Finalized": _finalized,
}


def replay(events) -> SessionState:
    """Fold a recorded event stream back into its final state."""
    if not events:
        raise ValidationError("empty event stream")
    state = initial_state(events[0])
    for event in events[1:]:
        state = advance(state, event)
    return state


# --- service-facing helpers -------------------------------------------------


def needs_screening(state: SessionState) -> bool:
    return state.phase == "screening" and state.screening is None


def needs_models(state: SessionState):
    """Cycle whose estimates the service must compute next, or None."""
    if state.condition != FAIR_MACHINE_GUIDANCE:
        return None
    if state.phase in ("questionnaire_pre", "checktest") and 1 not in state.estimates:
        return 1
    if state.phase.startswith("minitest_"):
        cycle = int(state.phase.split("_")[1])
        key = f"minitest{cycle}"
        if state.block_complete(key) and cycle < CYCLES and cycle + 1 not in state.estimates:
            return cycle + 1
    return None


@dataclass(frozen=True)
class ScreeningDecision:
    passed: bool
    reason: str
    pre_unfairness: float
    teacher_unfairness: float


def screen(pre_decisions: DecisionSet, teacher) -> ScreeningDecision:
    """Pre-test gate: |unfairness| >= 0.03 passes (inclusive), and the
    teacher must beat the participant's own unfairness. Applied to both
    conditions."""
    try:
        score = unfairness_score(pre_decisions).score
    except EmptyGroupError:
        return ScreeningDecision(
            passed=False, reason="empty-group",
            pre_unfairness=None, teacher_unfairness=None,
        )
    if abs(score) < SCREEN_THRESHOLD:
        return ScreeningDecision(
            passed=False, reason="unfairness-below-threshold",
            pre_unfairness=score,
            teacher_unfairness=teacher.teacher_unfairness if teacher else None,
        )
    if teacher is not None and teacher.insufficient:
        return ScreeningDecision(
            passed=False, reason="teacher-insufficient",
            pre_unfairness=score,
            teacher_unfairness=teacher.teacher_unfairness,
        )
    return ScreeningDecision(
        passed=True, reason=None, pre_unfairness=score,
        teacher_unfairness=teacher.teacher_unfairness if teacher else None,
    )


def _selection_rates(responses):
    n = {0: 0, 1: 0}
    k = {0: 0, 1: 0}
    for _, dec, z, _ in responses:
        n[z] += 1
        k[z] += dec
    rate = lambda g: (k[g] / n[g]) if n[g] else None
    return rate(1), rate(0)


def treatment_view(state: SessionState) -> dict:
    """Payload for the treatment screen of the current cycle."""
    if not state.phase.startswith("treatment_"):
        raise IllegalTransition(f"no treatment view in phase {state.phase!r}")
    cycle = int(state.phase.split("_")[1])
    responses = state.assessment_responses()
    rate_p, rate_u = _selection_rates(responses)
    priv = state.cfg["privileged_value"]
    message = (
        f"You marked {rate_p:.1%} of {priv} profiles and {rate_u:.1%} of "
        f"non-{priv} profiles as {state.cfg['select_label']}."
    )
    hint = "The closer these two rates are, the more even-handed your selections."
    view = {
        "cycle": cycle,
        "selection_rates": {"privileged": rate_p, "unprivileged": rate_u},
        "privileged_value": priv,
        "select_label": state.cfg["select_label"],
        "message": message,
        "hint": hint,
    }
    if state.condition == BIAS_FEEDBACK:
        view["kind"] = "bias_feedback"
        return view
    view["kind"] = "guidance"
    view["packet"] = state.estimates[cycle]["packet"]
    return view


def key_attribute_change_rate(pre, post) -> float:
    """1 - Jaccard similarity of the two key-attribute sets."""
    if pre is None or post is None:
        raise ValidationError("both attribute selections are required")
    pre, post = set(pre), set(post)
    union = pre | post
    if not union:
        return 0.0
    return 1.0 - len(pre & post) / len(union)


def _block_unfairness(state, phase_key):
    rows = state.block_responses(phase_key)
    if not rows:
        return None
    try:
        return unfairness_score(
            DecisionSet(
                items=tuple((pid, z, dec) for pid, dec, z, _ in rows),
                favorable=state.cfg["favorable_label"],
            )
        ).score
    except EmptyGroupError:
        return None


def _block_accuracy(state, phase_key):
    rows = state.block_responses(phase_key)
    if not rows:
        return None
    return sum(1 for _, dec, _, y in rows if dec == y) / len(rows)


def finalize(state: SessionState) -> dict:
    """Session outcome report; partial (flagged) when the session did
    not reach a terminal phase."""
    partial = state.phase not in ("done", "excluded")
    pre = _block_unfairness(state, "pretest")
    post = _block_unfairness(state, "posttest")
    sel_pre = state.attribute_selections.get("pre")
    sel_post = state.attribute_selections.get("post")
    change = (
        key_attribute_change_rate(sel_pre, sel_post)
        if sel_pre is not None and sel_post is not None
        else None
    )
    return {
        "session_id": state.session_id,
        "task_id": state.task_id,
        "condition": state.condition,
        "excluded": state.phase == "excluded",
        "excluded_reason": state.excluded_reason,
        "partial": partial,
        "phase": state.phase,
        "pre_unfairness": pre,
        "post_unfairness": post,
        "accuracy_pre": _block_accuracy(state, "pretest"),
        "accuracy_post": _block_accuracy(state, "posttest"),
        "key_attribute_change_rate": change,
        "n_responses": state.total_responses(),
    }
