import json
import os
from pathlib import Path

import pytest

from fairguide import dataset as ds

REPO = Path(__file__).resolve().parent.parent
DATA = REPO / "data"


@pytest.fixture(scope="session")
def income_task():
    return ds.shipped_task("income")


@pytest.fixture(scope="session")
def credit_task():
    return ds.shipped_task("credit")


@pytest.fixture(scope="session")
def income_profiles(income_task):
    return ds.load_csv(DATA / "income.csv", income_task)


@pytest.fixture(scope="session")
def credit_profiles(credit_task):
    return ds.load_csv(DATA / "credit.csv", credit_task)


@pytest.fixture(scope="session")
def income_pool(income_task, income_profiles):
    return ds.sample_pool(income_profiles, income_task, seed=7)


@pytest.fixture(scope="session")
def credit_pool(credit_task, credit_profiles):
    return ds.sample_pool(credit_profiles, credit_task, seed=7)


@pytest.fixture(scope="session")
def synthbias_encoded(income_task):
    profiles = ds.load_csv(DATA / "synthbias.csv", income_task)
    return [ds.encode(p, income_task) for p in profiles]


@pytest.fixture(scope="session")
def _pool_file_content(income_pool):
    return json.dumps(ds.pool_to_dict(income_pool))


@pytest.fixture
def data_dir(tmp_path, _pool_file_content):
    """Fresh service data dir with the income pool pre-ingested."""
    os.makedirs(tmp_path / "pools")
    (tmp_path / "pools" / "income.json").write_text(_pool_file_content)
    return str(tmp_path)
