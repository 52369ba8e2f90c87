import contextlib
import os
from importlib import resources

import pytest
from hypothesis import HealthCheck, settings

from rarprob import analysis
from rarprob.geometry import Polytope
from rarprob.model import enroll, load_model, parse_constraint

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], print_blob=True
)
settings.register_profile("quick", parent=settings.get_profile("default"), max_examples=25)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE: list = []  # (criterion id, title, passed, detail)


def fixture_path(name: str) -> str:
    return str(resources.files("rarprob.fixtures") / name)


def poly(names, *constraints) -> Polytope:
    """Polytope over ``names`` from constraint strings like ``'y <= 8/3 + 1/3*x'``."""
    rows = []
    for c in constraints:
        rows.extend(parse_constraint(c, list(names)))
    return Polytope.from_constraints(len(names), rows)


class Record:
    def __init__(self):
        self.detail = []

    def note(self, msg):
        self.detail.append(str(msg))


@contextlib.contextmanager
def acceptance(cid: str, title: str):
    rec = Record()
    try:
        yield rec
    except BaseException as exc:
        if not isinstance(exc, pytest.skip.Exception):
            rec.note(f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
            ACCEPTANCE.append((cid, title, False, "; ".join(rec.detail)))
        raise
    ACCEPTANCE.append((cid, title, True, "; ".join(rec.detail)))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, title, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        line = f"[{'PASS' if ok else 'FAIL'}] {cid} {title}"
        if detail:
            line += f" :: {detail}"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def running_model():
    return load_model(fixture_path("running_example.json"))


@pytest.fixture(scope="session")
def running_pipeline(running_model):
    em = enroll(running_model)
    tree = analysis.forward_flowpipe(em)
    traces = analysis.collect_goal_traces(tree, running_model.goal, em)
    refs = [analysis.refine_trace(tree, t, em) for t in traces]
    pieces = [analysis.extract_sample_domain(r, em) for r in refs]
    return dict(model=running_model, em=em, tree=tree, traces=traces, refs=refs, pieces=pieces)
