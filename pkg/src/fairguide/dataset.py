"""Tasks, profiles, pools, and feature encoding.

A task declares its attribute schemas in a YAML config ("income" and
"credit" ship with the package). Source CSVs are validated row by row,
then ``sample_pool`` draws a 300-profile pool in which both sensitive
groups carry exactly the same ground-truth positive rate, and splits it
into the assessment blocks (pre-test 100, five mini-tests of 20, post-
test reusing the pre-test block).
"""

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
import yaml

from .errors import CsvError, StratumShortage, ValidationError

NUMERIC_EPS = 1e-9


@dataclass(frozen=True)
class AttributeSchema:
    name: str
    kind: str  # "categorical" | "numeric"
    categories: tuple = ()
    numeric_range: tuple = ()

    def __post_init__(self):
        if self.kind == "categorical":
            if len(self.categories) < 2:
                raise ValidationError(
                    f"attribute {self.name!r}: needs >= 2 categories"
                )
            if len(set(self.categories)) != len(self.categories):
                raise ValidationError(
                    f"attribute {self.name!r}: duplicate categories"
                )
        elif self.kind == "numeric":
            if len(self.numeric_range) != 2:
                raise ValidationError(
                    f"attribute {self.name!r}: numeric_range must be [min, max]"
                )
            lo, hi = self.numeric_range
            if not lo < hi:
                raise ValidationError(
                    f"attribute {self.name!r}: numeric_range min must be < max"
                )
        else:
            raise ValidationError(
                f"attribute {self.name!r}: unknown kind {self.kind!r}"
            )

    @property
    def width(self):
        return len(self.categories) if self.kind == "categorical" else 1


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    attributes: tuple  # of AttributeSchema
    sensitive_attribute: str
    privileged_value: str
    positive_quota: float
    favorable_label: int
    pool_size: int
    privileged_share: float
    select_label: str
    reject_label: str
    instructions: str = ""

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValidationError("attribute names must be unique")
        sens = self.schema(self.sensitive_attribute)
        if sens is None or sens.kind != "categorical":
            raise ValidationError(
                f"sensitive_attribute {self.sensitive_attribute!r} must name "
                "a categorical attribute"
            )
        if self.privileged_value not in sens.categories:
            raise ValidationError(
                f"privileged_value {self.privileged_value!r} not a category "
                f"of {self.sensitive_attribute!r}"
            )
        if not 0.0 < self.positive_quota < 1.0:
            raise ValidationError("positive_quota must be in (0, 1)")
        if self.favorable_label not in (0, 1):
            raise ValidationError("favorable_label must be 0 or 1")
        if not 0.0 < self.privileged_share < 1.0:
            raise ValidationError("privileged_share must be in (0, 1)")

    def schema(self, name):
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    @property
    def attribute_names(self):
        return [a.name for a in self.attributes]


@dataclass(frozen=True)
class Profile:
    profile_id: str
    attributes: dict
    z: int
    y: int


@dataclass(frozen=True)
class EncodedProfile:
    profile_id: str
    features: np.ndarray
    z: int
    y: int


@dataclass(frozen=True)
class Encoding:
    """Column layout of the feature vectors for one task."""

    task: TaskSpec
    columns: tuple
    schema_hash: str

    @property
    def width(self):
        return len(self.columns)


@lru_cache(maxsize=None)
def build_encoding(task: TaskSpec) -> Encoding:
    columns = []
    for a in task.attributes:
        if a.kind == "numeric":
            columns.append(a.name)
        else:
            columns.extend(f"{a.name}={c}" for c in a.categories)
    return Encoding(task=task, columns=tuple(columns), schema_hash=schema_hash(task))


def schema_hash(task: TaskSpec) -> str:
    payload = [
        [a.name, a.kind, list(a.categories), list(a.numeric_range)]
        for a in task.attributes
    ]
    digest = hashlib.sha256(json.dumps(payload).encode()).hexdigest()
    return digest[:16]


def _validate_value(schema: AttributeSchema, raw):
    if schema.kind == "categorical":
        value = str(raw).strip()
        if value not in schema.categories:
            raise ValidationError(
                f"attribute {schema.name!r}: unknown category {value!r}"
            )
        return value
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ValidationError(
            f"attribute {schema.name!r}: not numeric: {raw!r}"
        ) from None
    lo, hi = schema.numeric_range
    if not (lo <= value <= hi) or not math.isfinite(value):
        raise ValidationError(
            f"attribute {schema.name!r}: {value} outside [{lo}, {hi}]"
        )
    return value


def make_profile(profile_id, raw_attributes, y, task: TaskSpec) -> Profile:
    """Validate raw attribute values against the task schemas."""
    attrs = {}
    for schema in task.attributes:
        if schema.name not in raw_attributes:
            raise ValidationError(f"attribute {schema.name!r}: missing")
        attrs[schema.name] = _validate_value(schema, raw_attributes[schema.name])
    extra = set(raw_attributes) - set(task.attribute_names)
    if extra:
        raise ValidationError(f"unschematized attributes: {sorted(extra)}")
    if y not in (0, 1):
        raise ValidationError(f"label must be 0 or 1, got {y!r}")
    z = 1 if attrs[task.sensitive_attribute] == task.privileged_value else 0
    return Profile(profile_id=profile_id, attributes=attrs, z=z, y=int(y))


def load_csv(path, task: TaskSpec):
    """Read a UTF-8 source CSV into validated profiles.

    Required columns: every schema attribute plus ``label``; an optional
    ``profile_id`` column overrides the generated row ids. Any invalid
    row aborts the load with its row number.
    """
    profiles = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CsvError("empty file")
        fields = set(reader.fieldnames)
        required = set(task.attribute_names) | {"label"}
        missing = required - fields
        if missing:
            raise CsvError(f"missing columns: {sorted(missing)}")
        unknown = fields - required - {"profile_id"}
        if unknown:
            raise CsvError(f"unknown columns: {sorted(unknown)}")
        for idx, row in enumerate(reader, start=2):  # header is row 1
            if None in row or any(v is None for v in row.values()):
                raise CsvError("wrong number of fields", row=idx)
            label_raw = row["label"].strip()
            if label_raw not in ("0", "1"):
                raise CsvError(f"label must be 0 or 1, got {label_raw!r}", row=idx)
            pid = row.get("profile_id") or f"{task.task_id}-{idx - 1:05d}"
            raw_attrs = {name: row[name] for name in task.attribute_names}
            try:
                profiles.append(make_profile(pid, raw_attrs, int(label_raw), task))
            except ValidationError as exc:
                raise CsvError(str(exc), row=idx) from exc
    seen = set()
    for p in profiles:
        if p.profile_id in seen:
            raise CsvError(f"duplicate profile_id {p.profile_id!r}")
        seen.add(p.profile_id)
    return profiles


def encode(profile: Profile, task: TaskSpec) -> EncodedProfile:
    """Profile -> feature vector: one-hot categoricals, min-max numerics."""
    enc = build_encoding(task)
    features = np.zeros(enc.width)
    pos = 0
    for schema in task.attributes:
        value = profile.attributes[schema.name]
        if schema.kind == "numeric":
            lo, hi = schema.numeric_range
            features[pos] = (float(value) - lo) / (hi - lo)
            pos += 1
        else:
            features[pos + schema.categories.index(value)] = 1.0
            pos += len(schema.categories)
    features.flags.writeable = False
    return EncodedProfile(
        profile_id=profile.profile_id, features=features, z=profile.z, y=profile.y
    )


def decode(encoded: EncodedProfile, task: TaskSpec) -> Profile:
    """Inverse of ``encode``; numeric values round-trip within 1e-9."""
    attrs = {}
    pos = 0
    for schema in task.attributes:
        if schema.kind == "numeric":
            lo, hi = schema.numeric_range
            attrs[schema.name] = lo + float(encoded.features[pos]) * (hi - lo)
            pos += 1
        else:
            block = encoded.features[pos : pos + len(schema.categories)]
            if not np.isclose(block.sum(), 1.0):
                raise ValidationError(
                    f"attribute {schema.name!r}: one-hot block does not sum to 1"
                )
            attrs[schema.name] = schema.categories[int(np.argmax(block))]
            pos += len(schema.categories)
    return Profile(
        profile_id=encoded.profile_id, attributes=attrs, z=encoded.z, y=encoded.y
    )


@dataclass(frozen=True)
class Partition:
    pretest: tuple
    minitests: tuple  # 5 tuples of 20 ids
    posttest: tuple

    def block_ids(self, phase_key):
        if phase_key == "pretest":
            return self.pretest
        if phase_key == "posttest":
            return self.posttest
        if phase_key.startswith("minitest"):
            return self.minitests[int(phase_key[len("minitest") :]) - 1]
        raise KeyError(phase_key)


@dataclass(frozen=True)
class ProfilePool:
    task: TaskSpec
    profiles: tuple
    partition: Partition
    seed: int

    def __post_init__(self):
        ids = {p.profile_id for p in self.profiles}
        used = set(self.partition.pretest) | set(self.partition.posttest)
        for block in self.partition.minitests:
            used |= set(block)
        if not used <= ids:
            raise ValidationError("partition references unknown profile ids")

    def profile(self, profile_id) -> Profile:
        return self._by_id()[profile_id]

    def _by_id(self):
        cached = getattr(self, "_idx", None)
        if cached is None:
            cached = {p.profile_id: p for p in self.profiles}
            object.__setattr__(self, "_idx", cached)
        return cached

    def encoded(self, profile_id) -> EncodedProfile:
        cached = getattr(self, "_enc", None)
        if cached is None:
            cached = {}
            object.__setattr__(self, "_enc", cached)
        if profile_id not in cached:
            cached[profile_id] = encode(self.profile(profile_id), self.task)
        return cached[profile_id]

    def encoded_all(self):
        return [self.encoded(p.profile_id) for p in self.profiles]


def _group_counts(task: TaskSpec):
    """Choose the privileged-group size and the common positive rate.

    The privileged count starts at round(share * pool_size) and may move
    by at most one profile when the neighbor admits an exactly-equal
    per-group positive rate closer to the task quota: equal rates by
    count require a rate whose denominator divides gcd(n1, n0).
    """
    n = task.pool_size
    exact = task.privileged_share * n
    candidates = sorted(
        {c for c in (math.floor(exact), round(exact), math.ceil(exact))
         if 0 < c < n and abs(c - exact) <= 1.0}
    )
    best = None
    for n1 in candidates:
        n0 = n - n1
        g = math.gcd(n1, n0)
        for j in range(g + 1):
            rate = j / g
            key = (abs(rate - task.positive_quota), abs(n1 - exact), rate, n1)
            if best is None or key < best[0]:
                best = (key, n1, n0, j * (n1 // g), j * (n0 // g))
    _, n1, n0, k1, k0 = best
    return n1, n0, k1, k0


def _spread_order(ids_by_stratum, rng):
    """Interleave strata so any prefix stays close to stratum-proportional."""
    tagged = []
    for ids in ids_by_stratum:
        ids = list(ids)
        rng.shuffle(ids)
        for i, pid in enumerate(ids):
            tagged.append(((i + 0.5) / len(ids), pid))
    tagged.sort(key=lambda t: (t[0], t[1]))
    return [pid for _, pid in tagged]


def sample_pool(profiles, task: TaskSpec, seed: int) -> ProfilePool:
    """Draw the 300-profile pool with equal per-group positive rates.

    Deterministic for a fixed seed. The partition interleaves the four
    (z, y) strata so every block is close to pool-proportional.
    """
    n1, n0, k1, k0 = _group_counts(task)
    targets = {(1, 1): k1, (1, 0): n1 - k1, (0, 1): k0, (0, 0): n0 - k0}

    by_cell = {cell: [] for cell in targets}
    for p in sorted(profiles, key=lambda p: p.profile_id):
        by_cell[(p.z, p.y)].append(p)

    shortages = [
        f"(z={z}, y={y}): need {need}, have {len(by_cell[(z, y)])}"
        for (z, y), need in targets.items()
        if len(by_cell[(z, y)]) < need
    ]
    if shortages:
        raise StratumShortage("; ".join(shortages))

    rng = np.random.default_rng(seed)
    chosen_by_cell = {}
    for cell, need in targets.items():
        pool = by_cell[cell]
        idx = rng.permutation(len(pool))[:need]
        chosen_by_cell[cell] = [pool[i] for i in sorted(idx)]

    order = _spread_order(
        [[p.profile_id for p in chosen_by_cell[c]] for c in sorted(targets)], rng
    )
    third = task.pool_size // 3
    pretest = order[:third]
    mini_ids = order[third : 2 * third]
    minitests = tuple(tuple(mini_ids[i * 20 : (i + 1) * 20]) for i in range(5))

    pre_order = list(pretest)
    rng.shuffle(pre_order)

    chosen = [p for c in sorted(targets) for p in chosen_by_cell[c]]
    chosen.sort(key=lambda p: p.profile_id)
    return ProfilePool(
        task=task,
        profiles=tuple(chosen),
        partition=Partition(
            pretest=tuple(pre_order),
            minitests=minitests,
            posttest=tuple(pre_order),
        ),
        seed=seed,
    )


# --- task config I/O -------------------------------------------------------


def _task_from_dict(cfg) -> TaskSpec:
    attrs = []
    for item in cfg["attributes"]:
        attrs.append(
            AttributeSchema(
                name=item["name"],
                kind=item["kind"],
                categories=tuple(item.get("categories", ())),
                numeric_range=tuple(item.get("range", ())),
            )
        )
    return TaskSpec(
        task_id=cfg["task_id"],
        attributes=tuple(attrs),
        sensitive_attribute=cfg["sensitive_attribute"],
        privileged_value=cfg["privileged_value"],
        positive_quota=float(cfg["positive_quota"]),
        favorable_label=int(cfg["favorable_label"]),
        pool_size=int(cfg.get("pool_size", 300)),
        privileged_share=float(cfg["privileged_share"]),
        select_label=cfg["select_label"],
        reject_label=cfg["reject_label"],
        instructions=cfg.get("instructions", ""),
    )


def load_task(path) -> TaskSpec:
    with open(path, encoding="utf-8") as fh:
        return _task_from_dict(yaml.safe_load(fh))


@lru_cache(maxsize=None)
def shipped_task(task_id: str) -> TaskSpec:
    ref = resources.files("fairguide").joinpath(f"configs/{task_id}.yaml")
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"no shipped task named {task_id!r}") from None
    return _task_from_dict(yaml.safe_load(text))


# --- pool file I/O ---------------------------------------------------------


def pool_to_dict(pool: ProfilePool):
    return {
        "task_id": pool.task.task_id,
        "schema_hash": schema_hash(pool.task),
        "seed": pool.seed,
        "profiles": [
            {"profile_id": p.profile_id, "attributes": p.attributes, "z": p.z, "y": p.y}
            for p in pool.profiles
        ],
        "partition": {
            "pretest": list(pool.partition.pretest),
            "minitests": [list(b) for b in pool.partition.minitests],
            "posttest": list(pool.partition.posttest),
        },
    }


def pool_from_dict(data, task: TaskSpec) -> ProfilePool:
    if data["task_id"] != task.task_id:
        raise ValidationError(
            f"pool is for task {data['task_id']!r}, not {task.task_id!r}"
        )
    if data["schema_hash"] != schema_hash(task):
        raise ValidationError("pool schema_hash does not match the task config")
    profiles = tuple(
        make_profile(p["profile_id"], p["attributes"], p["y"], task)
        for p in data["profiles"]
    )
    part = data["partition"]
    return ProfilePool(
        task=task,
        profiles=profiles,
        partition=Partition(
            pretest=tuple(part["pretest"]),
            minitests=tuple(tuple(b) for b in part["minitests"]),
            posttest=tuple(part["posttest"]),
        ),
        seed=int(data["seed"]),
    )


def pool_hash(pool: ProfilePool) -> str:
    blob = json.dumps(pool_to_dict(pool), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
