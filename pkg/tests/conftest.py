import numpy as np
import pytest

from phosvis import datasets, experiment

DATASET_SEED = 20250817


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    rows = {}
    for bucket, label in (("passed", "PASS"), ("failed", "FAIL"),
                          ("error", "FAIL"), ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(bucket, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                rows[nodeid.split("::")[-1]] = label
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name in sorted(rows):
            terminalreporter.write_line(f"{rows[name]}  {name}")


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("scenes")
    datasets.make_synth_dataset(root, seed=DATASET_SEED, images_per_stratum=10,
                                size=1024)
    return root


@pytest.fixture(scope="session")
def dataset(dataset_dir):
    return experiment.Dataset.from_dir(dataset_dir)


def make_record(outcome, session_id="s0", condition="GCSS", index=0,
                target_present=None, clutter="low", shape="rectangle",
                rt_ms=1500, gaze=None):
    """Minimal log record with a consistent outcome/presence pairing."""
    if target_present is None:
        target_present = outcome in ("TP", "FP_location", "FN")
    decision = {"type": "absent", "x": None, "y": None}
    if outcome in ("TP", "FP_location", "FP_claim"):
        decision = {"type": "click", "x": 10, "y": 10}
    return {
        "session_id": session_id,
        "condition": condition,
        "index": index,
        "image_id": "img0",
        "target_label": "box",
        "target_present": target_present,
        "clutter": clutter,
        "shape": shape,
        "onset_ms": 0,
        "decision": decision,
        "rt_ms": rt_ms,
        "outcome": outcome,
        "policy": "union",
        "gaze": gaze if gaze is not None else [],
    }


def records_from_counts(counts, **kwargs):
    """Expand an outcome->count mapping into records."""
    out = []
    i = 0
    for outcome, n in counts.items():
        for _ in range(n):
            out.append(make_record(outcome, index=i, **kwargs))
            i += 1
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(99)


def run_scripted_session(dataset, condition="GCSS", seed=5):
    """Drive a full plan, mixing all five outcomes deterministically."""
    plan = experiment.build_session(dataset, condition, seed=seed)
    state = experiment.SessionState(plan, archives=dataset.archive)
    t = 0
    for i, spec in enumerate(plan.trials):
        experiment.advance(state, {"type": "show_stimulus", "t": t})
        experiment.advance(state, {"type": "gaze", "t": t + 16,
                                   "x": 100 + i, "y": 200})
        experiment.advance(state, {"type": "gaze", "t": t + 33,
                                   "x": 101 + i, "y": 201})
        if spec.target_present:
            if i % 3 == 2:
                decision = experiment.Decision("absent")
            else:
                arc = dataset.archive(spec.image_id)
                mask = next(m for m in arc.masks
                            if m.label == spec.target_label)
                ys, xs = np.nonzero(mask.bitmap)
                if i % 3 == 0:
                    decision = experiment.Decision("click", int(xs[0]), int(ys[0]))
                else:
                    d2 = (xs - 0) ** 2 + (ys - 0) ** 2
                    assert d2.min() > 11 * 11, "corner too close to target"
                    decision = experiment.Decision("click", 0, 0)
        else:
            decision = (experiment.Decision("click", 5, 5) if i % 2
                        else experiment.Decision("absent"))
        t += 700 + 13 * i
        experiment.advance(state, {"type": "decide", "t": t,
                                   "decision": decision})
        if state.phase == "break":
            experiment.advance(state, {"type": "resume"})
        t += 300
    assert state.phase == "done"
    return plan, state
