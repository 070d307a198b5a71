import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairguide import dataset as ds
from fairguide.errors import CsvError, StratumShortage, ValidationError



def test_shipped_tasks_load(income_task, credit_task):
    assert income_task.positive_quota == 0.20
    assert income_task.favorable_label == 1
    assert credit_task.positive_quota == 0.30
    assert credit_task.favorable_label == 0
    assert income_task.pool_size == credit_task.pool_size == 300


def test_schema_validation_rules():
    with pytest.raises(ValidationError):
        ds.AttributeSchema(name="x", kind="categorical", categories=("one",))
    with pytest.raises(ValidationError):
        ds.AttributeSchema(name="x", kind="numeric", numeric_range=(5, 5))
    with pytest.raises(ValidationError):
        ds.AttributeSchema(name="x", kind="mystery")


def test_z_derivation_income(income_task):
    attrs = {
        "age": 40, "race": "White", "gender": "Male",
        "education": "Bachelor", "occupation": "Sales",
        "hours_per_week": 40, "country": "United States",
        "marital_status": "Married", "household_position": "Householder",
    }
    assert ds.make_profile("p1", attrs, 1, income_task).z == 1
    attrs["race"] = "Black"
    assert ds.make_profile("p2", attrs, 1, income_task).z == 0


def test_z_derivation_credit(credit_task):
    attrs = {
        "gender": "Female", "age": 30, "occupation": "Skilled",
        "housing": "Rent", "credit_amount": 2000, "duration_months": 24,
        "purpose": "Car",
    }
    assert ds.make_profile("c1", attrs, 0, credit_task).z == 0
    attrs["gender"] = "Male"
    assert ds.make_profile("c2", attrs, 0, credit_task).z == 1


def test_load_csv_rejects_unknown_category(tmp_path, credit_task):
    path = tmp_path / "bad.csv"
    path.write_text(
        "gender,age,occupation,housing,credit_amount,duration_months,purpose,label\n"
        "Male,30,Skilled,Rent,2000,24,Car,1\n"
        "Female,41,Wizard,Own,3000,12,Car,0\n"
    )
    with pytest.raises(CsvError) as err:
        ds.load_csv(path, credit_task)
    assert "row 3" in str(err.value)
    assert "occupation" in str(err.value)


def test_load_csv_rejects_out_of_range_numeric(tmp_path, credit_task):
    path = tmp_path / "bad.csv"
    path.write_text(
        "gender,age,occupation,housing,credit_amount,duration_months,purpose,label\n"
        "Male,17,Skilled,Rent,2000,24,Car,1\n"
    )
    with pytest.raises(CsvError) as err:
        ds.load_csv(path, credit_task)
    assert "row 2" in str(err.value)


def test_load_csv_rejects_missing_column(tmp_path, credit_task):
    path = tmp_path / "bad.csv"
    path.write_text("gender,age\nMale,30\n")
    with pytest.raises(CsvError):
        ds.load_csv(path, credit_task)


def test_load_csv_shipped_sources(income_profiles, credit_profiles):
    assert len(income_profiles) == 2400
    assert len(credit_profiles) == 2400
    assert all(p.z in (0, 1) and p.y in (0, 1) for p in income_profiles)


# --- encoding ---------------------------------------------------------------


def test_encode_numeric_endpoints(credit_task):
    attrs = {
        "gender": "Male", "age": 18, "occupation": "Skilled",
        "housing": "Rent", "credit_amount": 250, "duration_months": 72,
        "purpose": "Car",
    }
    profile = ds.make_profile("c1", attrs, 0, credit_task)
    enc = ds.encode(profile, credit_task)
    cols = ds.build_encoding(credit_task).columns
    assert enc.features[cols.index("age")] == 0.0
    assert enc.features[cols.index("credit_amount")] == 0.0
    assert enc.features[cols.index("duration_months")] == 1.0


def test_encode_one_hot_block(credit_task):
    attrs = {
        "gender": "Male", "age": 30, "occupation": "Skilled",
        "housing": "Own", "credit_amount": 2000, "duration_months": 24,
        "purpose": "Car",
    }
    enc = ds.encode(ds.make_profile("c1", attrs, 0, credit_task), credit_task)
    cols = ds.build_encoding(credit_task).columns
    start = cols.index("housing=Rent")
    # second of three categories selected
    assert list(enc.features[start:start + 3]) == [0.0, 1.0, 0.0]


def test_encoding_width_income(income_task):
    # hand count over the shipped schema: age 1, race 5, gender 2,
    # education 7, occupation 8, hours 1, country 6, marital 4, household 5
    assert ds.build_encoding(income_task).width == 39


def test_encoding_width_credit(credit_task):
    # gender 2, age 1, occupation 4, housing 3, amount 1, duration 1, purpose 7
    assert ds.build_encoding(credit_task).width == 19


def test_one_hot_blocks_sum_to_one(income_task, income_profiles):
    enc = ds.encode(income_profiles[0], income_task)
    pos = 0
    for schema in income_task.attributes:
        if schema.kind == "categorical":
            block = enc.features[pos:pos + len(schema.categories)]
            assert block.sum() == 1.0
        pos += schema.width


@st.composite
def credit_attrs(draw):
    return {
        "gender": draw(st.sampled_from(["Male", "Female"])),
        "age": draw(st.integers(18, 75)),
        "occupation": draw(st.sampled_from(
            ["Unemployed", "Unskilled", "Skilled", "Management"])),
        "housing": draw(st.sampled_from(["Rent", "Own", "Free"])),
        "credit_amount": draw(st.integers(250, 20000)),
        "duration_months": draw(st.integers(4, 72)),
        "purpose": draw(st.sampled_from(
            ["Car", "Furniture", "Radio/TV", "Education", "Business",
             "Repairs", "Vacation"])),
    }


@given(credit_attrs())
@settings(max_examples=60, deadline=None)
def test_decode_round_trips(credit_task, attrs):
    profile = ds.make_profile("p", attrs, 1, credit_task)
    back = ds.decode(ds.encode(profile, credit_task), credit_task)
    for schema in credit_task.attributes:
        if schema.kind == "categorical":
            assert back.attributes[schema.name] == attrs[schema.name]
        else:
            assert math.isclose(
                back.attributes[schema.name], attrs[schema.name],
                abs_tol=1e-9,
            )


@given(credit_attrs(), credit_attrs())
@settings(max_examples=60, deadline=None)
def test_encoding_injective(credit_task, attrs_a, attrs_b):
    pa = ds.make_profile("a", attrs_a, 1, credit_task)
    pb = ds.make_profile("b", attrs_b, 1, credit_task)
    ea = ds.encode(pa, credit_task).features
    eb = ds.encode(pb, credit_task).features
    if attrs_a != attrs_b:
        assert not np.array_equal(ea, eb)
    else:
        assert np.array_equal(ea, eb)


# --- pool sampling -----------------------------------------------------------


def test_income_pool_group_counts(income_pool):
    # 37.3% of 300 rounds to 112 privileged
    zs = [p.z for p in income_pool.profiles]
    assert sum(zs) == 112
    assert len(zs) == 300


def test_pool_positive_rates_exactly_equal(income_pool, credit_pool):
    for pool in (income_pool, credit_pool):
        pos = {1: [], 0: []}
        for p in pool.profiles:
            pos[p.z].append(p.y)
        n1, n0 = len(pos[1]), len(pos[0])
        k1, k0 = sum(pos[1]), sum(pos[0])
        assert k1 * n0 == k0 * n1  # equal rates by count, no float slack


def test_credit_pool_group_counts(credit_pool):
    # 47.3% of 300 is 141.9; 141 is the neighbor that admits an exactly
    # equal per-group positive rate near the 0.30 quota (thirds)
    zs = [p.z for p in credit_pool.profiles]
    assert sum(zs) == 141
    assert abs(sum(zs) - 0.473 * 300) <= 1.0


def test_pool_deterministic(income_task, income_profiles, income_pool):
    again = ds.sample_pool(income_profiles, income_task, seed=7)
    assert [p.profile_id for p in again.profiles] == [
        p.profile_id for p in income_pool.profiles
    ]
    assert again.partition == income_pool.partition


def test_pool_seed_changes_selection(income_task, income_profiles, income_pool):
    other = ds.sample_pool(income_profiles, income_task, seed=8)
    assert [p.profile_id for p in other.profiles] != [
        p.profile_id for p in income_pool.profiles
    ]


def test_pool_partition_shape(income_pool):
    part = income_pool.partition
    assert len(part.pretest) == 100
    assert len(part.minitests) == 5
    assert all(len(b) == 20 for b in part.minitests)
    assert part.posttest == part.pretest
    mini = {pid for b in part.minitests for pid in b}
    assert len(mini) == 100
    assert not mini & set(part.pretest)


def test_stratum_shortage(income_task, income_profiles):
    only_negative_priv = [p for p in income_profiles if not (p.z and p.y)]
    with pytest.raises(StratumShortage):
        ds.sample_pool(only_negative_priv, income_task, seed=1)


def test_pool_round_trip(income_task, income_pool):
    data = ds.pool_to_dict(income_pool)
    back = ds.pool_from_dict(data, income_task)
    assert back.partition == income_pool.partition
    assert ds.pool_hash(back) == ds.pool_hash(income_pool)


def test_pool_schema_guard(income_task, credit_task, income_pool):
    data = ds.pool_to_dict(income_pool)
    data["task_id"] = "credit"
    with pytest.raises(ValidationError):
        ds.pool_from_dict(data, credit_task)
