import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from example_data import (enrollment_table, example_demo, example_inputs,
                          ground_truth_query)  # noqa: E402

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def inputs():
    return example_inputs()


@pytest.fixture(scope="session")
def demo():
    return example_demo()


@pytest.fixture(scope="session")
def gt_query():
    return ground_truth_query()


@pytest.fixture(scope="session")
def table_t():
    return enrollment_table()


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def csv_path():
    return os.path.join(DATA_DIR, "enrollment.csv")


@pytest.fixture(scope="session")
def demo_path():
    return os.path.join(DATA_DIR, "demo.json")


@pytest.fixture(scope="session")
def gt_path():
    return os.path.join(DATA_DIR, "gt.json")


@pytest.fixture(scope="session")
def demo_json(demo_path):
    with open(demo_path) as f:
        return json.load(f)
