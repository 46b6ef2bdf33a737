"""Run a complete object-search session through the state machine.

Creates a small synthetic dataset on disk, builds the 76-trial plan
(22 absent-target trials, clutter strata 24/26/26), then plays a
scripted participant: clicks the target when present on most trials,
claims absent otherwise.  The exported JSON Lines log replays through
the state machine byte for byte.

Run from the repository root:  python3 demos/04_experiment_session.py
"""

import pathlib
import tempfile
from collections import Counter

import numpy as np

from phosvis import datasets, experiment

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

data_dir = pathlib.Path(tempfile.mkdtemp(prefix="scenes_"))
datasets.make_synth_dataset(data_dir, seed=11, images_per_stratum=10, size=1024)
dataset = experiment.Dataset.from_dir(data_dir)
print(f"dataset: {len(dataset.images)} scenes, "
      f"{len(dataset.vocabulary)} distinct labels")

plan = experiment.build_session(dataset, condition="GCSS", seed=99)
strata = Counter(t.clutter for t in plan.trials)
n_false = sum(1 for t in plan.trials if not t.target_present)
print(f"plan: {len(plan.trials)} trials, {n_false} absent-target, "
      f"strata {dict(strata)}, break after {plan.break_after}")

state = experiment.SessionState(plan, archives=dataset.archive)
t = 0
for i, spec in enumerate(plan.trials):
    experiment.advance(state, {"type": "show_stimulus", "t": t})
    # A short synthetic gaze trace per trial.
    for k in range(3):
        experiment.advance(state, {"type": "gaze", "t": t + 16 * (k + 1),
                                   "x": 400 + 30 * k, "y": 500})
    if spec.target_present and i % 4 != 3:
        arc = dataset.archive(spec.image_id)
        mask = next(m for m in arc.masks if m.label == spec.target_label)
        ys, xs = np.nonzero(mask.bitmap)
        j = len(xs) // 2
        decision = experiment.Decision("click", int(xs[j]), int(ys[j]))
    else:
        decision = experiment.Decision("absent")
    t += 1100 + 17 * i
    experiment.advance(state, {"type": "decide", "t": t, "decision": decision})
    if state.phase == "break":
        print(f"  break reached after trial {state.index}")
        experiment.advance(state, {"type": "resume"})
    t += 400

outcomes = Counter(r.outcome for r in state.records)
print(f"outcomes: {dict(outcomes)}")

log_text = experiment.export_log(state, session_id="demo")
log_path = OUT / "session_demo.jsonl"
experiment.write_log(log_path, log_text)
print(f"log: {len(log_text.splitlines())} lines -> {log_path}")

replayed = experiment.replay_log(log_text, dataset.archive)
print("replay byte-identical:", replayed == log_text)
