"""Metrics, gaze dispersion and inference over trial logs.

Simulates two participants' worth of logs across two render conditions,
then produces everything the analysis layer offers: classification
reports under both false-positive mappings, per-stratum breakdowns,
trial-time summaries, gaze entropy with smoothed heatmaps, a paired
t-test and a two-way ANOVA.

Run from the repository root:  python3 demos/05_analysis.py
"""

import pathlib
import tempfile

import numpy as np

from phosvis import analysis, datasets, experiment

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

data_dir = pathlib.Path(tempfile.mkdtemp(prefix="scenes_"))
datasets.make_synth_dataset(data_dir, seed=4, images_per_stratum=10, size=1024)
dataset = experiment.Dataset.from_dir(data_dir)

rng = np.random.default_rng(0)


def scripted_session(condition, seed, skill):
    """Play one session; ``skill`` is the chance of finding a present target."""
    plan = experiment.build_session(dataset, condition, seed)
    state = experiment.SessionState(plan, archives=dataset.archive)
    t = 0
    for spec in plan.trials:
        experiment.advance(state, {"type": "show_stimulus", "t": t})
        for k in range(int(rng.integers(4, 12))):
            experiment.advance(state, {
                "type": "gaze", "t": t + 16 * (k + 1),
                "x": int(rng.integers(0, 1024)), "y": int(rng.integers(0, 1024)),
            })
        if spec.target_present and rng.random() < skill:
            arc = dataset.archive(spec.image_id)
            mask = next(m for m in arc.masks if m.label == spec.target_label)
            ys, xs = np.nonzero(mask.bitmap)
            decision = experiment.Decision("click", int(xs[0]), int(ys[0]))
        elif rng.random() < 0.25:
            decision = experiment.Decision("click", int(rng.integers(0, 1024)),
                                           int(rng.integers(0, 1024)))
        else:
            decision = experiment.Decision("absent")
        t += int(rng.integers(1500, 14000))
        experiment.advance(state, {"type": "decide", "t": t, "decision": decision})
        if state.phase == "break":
            experiment.advance(state, {"type": "resume"})
        t += 500
    return experiment.export_log(state, f"{condition}_{seed}")


records = []
for condition, skill in (("GCSS", 0.6), ("Edges", 0.45)):
    for seed in (1, 2):
        records.extend(experiment.parse_log(scripted_session(condition, seed, skill)))
print(f"{len(records)} trial records from 4 sessions")

for mapping in analysis.FP_MAPPINGS:
    rep = analysis.classification_report(records, mapping)
    t_row = rep["classes"]["true"]
    print(f"[{mapping}] accuracy {rep['accuracy']:.3f}, "
          f"true-class P/R/F1 = {t_row['precision']:.2f}/"
          f"{t_row['recall']:.2f}/{t_row['f1']:.2f}")

for key in ("condition", "clutter"):
    print(f"breakdown by {key}:")
    for value, row in analysis.breakdown(records, key).items():
        line = (f"  {value:14s} acc_all {row['accuracy_all']:.3f} "
                f"(sem {row['sem_all']:.3f}, n={row['n_trials']})")
        print(line)

print("trial times:", {k: f"{v['mean_s']:.2f}s sd {v['sd_s']:.2f}"
                       for k, v in analysis.trial_time_stats(records).items()})

# Gaze dispersion per condition: entropy in bits plus a smoothed map.
for condition in ("GCSS", "Edges"):
    trace = [g for r in records if r["condition"] == condition for g in r["gaze"]]
    grid = analysis.gaze_entropy(trace)
    gmap = analysis.gaze_map(trace)
    analysis.heatmap_png(gmap, OUT / f"gaze_{condition}.png")
    print(f"{condition}: {grid.entropy_bits:.2f} bits over "
          f"{len(trace)} samples -> gaze_{condition}.png")

# Paired comparison of per-session reaction time means.
gcss_rt = [np.mean([r["rt_ms"] for r in records
                    if r["condition"] == "GCSS" and r["session_id"].endswith(str(s))])
           for s in (1, 2)]
edges_rt = [np.mean([r["rt_ms"] for r in records
                     if r["condition"] == "Edges" and r["session_id"].endswith(str(s))])
            for s in (1, 2)]
try:
    res = analysis.paired_t(gcss_rt, edges_rt)
    print(f"paired t: t={res.t:.3f}, df={res.df}, p={res.p:.3f}")
except ValueError as exc:
    print(f"paired t needs more sessions: {exc}")

# Two-way ANOVA: accuracy per (condition, clutter) cell with per-session
# replicates.
values, fa, fb = [], [], []
for condition in ("GCSS", "Edges"):
    for clutter in experiment.CLUTTER_LEVELS:
        for s in (1, 2):
            cell = [r for r in records
                    if r["condition"] == condition and r["clutter"] == clutter
                    and r["session_id"].endswith(str(s))]
            values.append(analysis.accuracy_all(cell))
            fa.append(condition)
            fb.append(clutter)
res = analysis.two_way_anova(values, fa, fb)
print(f"ANOVA: F_condition={res.f_a:.2f} (p={res.p_a:.3f}), "
      f"F_clutter={res.f_b:.2f} (p={res.p_b:.3f}), "
      f"F_interaction={res.f_ab:.2f} (p={res.p_ab:.3f})")
