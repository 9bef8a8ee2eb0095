from __future__ import annotations

import sys
from pathlib import Path

import pytest
import yaml

sys.path.insert(0, str(Path(__file__).parent))

from skillet.session import SessionConfig, run_script
from skillet.world import load_domain_file

ROOT = Path(__file__).resolve().parent.parent
DOMAINS = ROOT / "fixtures" / "domains"
SCRIPTS = ROOT / "fixtures" / "scripts"


def load_fixture(name: str):
    return load_domain_file(str(DOMAINS / f"{name}.yaml"))


def read_script(name: str) -> str:
    return (SCRIPTS / f"{name}.jsonl").read_text()


def run_fixture_script(domain: str, script: str, config: SessionConfig = SessionConfig()):
    tree, world, doc = load_fixture(domain)
    return run_script(read_script(script), tree, world, doc, config)


@pytest.fixture()
def kitchen():
    return load_fixture("kitchen_min")


@pytest.fixture()
def curiosity_world():
    return load_fixture("curiosity")


@pytest.fixture()
def icetea_world():
    return load_fixture("icetea")


@pytest.fixture()
def assist_world():
    return load_fixture("assist")


@pytest.fixture(scope="session")
def toast_session():
    """Session after the scripted toast demonstration."""
    tree, world, doc = load_domain_file(str(DOMAINS / "kitchen_min.yaml"))
    transcript, session = run_script(
        (SCRIPTS / "teach_toast.jsonl").read_text(), tree, world, doc
    )
    return transcript, session


@pytest.fixture(scope="session")
def icetea_session():
    """Session after the scripted four-skill ice-tea teaching run."""
    tree, world, doc = load_domain_file(str(DOMAINS / "icetea.yaml"))
    transcript, session = run_script(
        (SCRIPTS / "icetea.jsonl").read_text(), tree, world, doc
    )
    return transcript, session


@pytest.fixture(scope="session")
def icetea_base_doc():
    with open(DOMAINS / "icetea.yaml", "r", encoding="utf-8") as fh:
        return yaml.safe_load(fh)
