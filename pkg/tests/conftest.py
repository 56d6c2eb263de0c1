import datetime as dt

import pytest

from homedrift.model import CaregiverWindow, SubjectProfile
from homedrift.simulate import build_home, simulate

START = dt.date(2026, 1, 1)
CAREGIVER = (CaregiverWindow(1, 840, 960), CaregiverWindow(4, 840, 960))


def make_home(seed=7, home_id="home-001", scenarios=(), faults=None, **kw):
    subject = kw.pop("subject", None) or SubjectProfile("subj-001", "neurodegenerative")
    extra = {}
    if faults is not None:
        extra["faults"] = faults
    return build_home(
        home_id,
        subject,
        seed=seed,
        caregiver_windows=kw.pop("caregiver_windows", CAREGIVER),
        scenarios=scenarios,
        **extra,
        **kw,
    )


@pytest.fixture(scope="session")
def sim_month():
    """One home, 31 days, shared across tests that only read from it."""
    sim = make_home(seed=7)
    result = simulate([sim], START, 31, seed=7, keep_traces=True)
    return sim, result
