"""Metrics and statistics over exported trial logs.

All functions are pure and operate on parsed log records (mappings with
the trial-log field names).  Two conventions hold throughout: standard
deviations are sample deviations (ddof = 1), and division-by-zero cells
report 0 together with a degenerate flag rather than raising.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, stats

FP_MAPPINGS = ("claim-only", "strict-location")

ENTROPY_GRID = 32


class UndefinedMetricError(ValueError):
    """Metric has an empty denominator at the record level."""


class DegenerateStatisticError(ValueError):
    """Test statistic undefined (zero variance or zero error df)."""


class UnsupportedDesignError(ValueError):
    """ANOVA input is not a balanced complete two-factor design."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int
    mapping: str


def outcome_counts(records) -> dict:
    counts = {"TP": 0, "FP_location": 0, "FP_claim": 0, "TN": 0, "FN": 0}
    for r in records:
        out = r["outcome"]
        if out not in counts:
            raise ValueError(f"unknown outcome {out!r}")
        counts[out] += 1
    return counts


def confusion_counts(records, fp_mapping: str = "claim-only") -> ConfusionCounts:
    """Collapse five-way outcomes to TP/FP/TN/FN.

    ``claim-only`` treats a wrong-location click on a true trial as a
    failure to find the target (FN side); ``strict-location`` counts it
    as a false positive.
    """
    if fp_mapping not in FP_MAPPINGS:
        raise ValueError(f"unknown fp_mapping {fp_mapping!r}")
    c = outcome_counts(records)
    if fp_mapping == "claim-only":
        return ConfusionCounts(tp=c["TP"], fp=c["FP_claim"], tn=c["TN"],
                               fn=c["FN"] + c["FP_location"], mapping=fp_mapping)
    return ConfusionCounts(tp=c["TP"], fp=c["FP_claim"] + c["FP_location"],
                           tn=c["TN"], fn=c["FN"], mapping=fp_mapping)


def accuracy_true(records) -> float:
    """Fraction of target-present trials answered with a correct click."""
    records = list(records)
    n_true = sum(1 for r in records if r["target_present"])
    if n_true == 0:
        raise UndefinedMetricError("no target-present trials")
    hits = sum(1 for r in records if r["outcome"] == "TP")
    return hits / n_true


def accuracy_all(records) -> float:
    """Fraction of all trials answered correctly (TP or TN)."""
    records = list(records)
    if not records:
        raise UndefinedMetricError("no trials")
    good = sum(1 for r in records if r["outcome"] in ("TP", "TN"))
    return good / len(records)


def _rate(num: int, den: int) -> tuple:
    if den == 0:
        return 0.0, True
    return num / den, False


def report_from_outcome_counts(counts: dict, fp_mapping: str = "claim-only") -> dict:
    """Binary present/absent classification report from five-way counts.

    Under ``claim-only`` the four cells partition the trials (a wrong
    location counts with the misses); under ``strict-location`` wrong
    locations enter the true-class false positives instead, so the rows
    are computed from the flat counts rather than a 2x2 table.
    """
    if fp_mapping not in FP_MAPPINGS:
        raise ValueError(f"unknown fp_mapping {fp_mapping!r}")
    tp = counts["TP"]
    fpl = counts["FP_location"]
    fpc = counts["FP_claim"]
    tn = counts["TN"]
    fn = counts["FN"]
    n_true = tp + fpl + fn
    n_false = tn + fpc
    total = n_true + n_false
    degenerate = []

    if fp_mapping == "claim-only":
        p_t, d1 = _rate(tp, tp + fpc)
        r_t, d2 = _rate(tp, n_true)
        p_f, d3 = _rate(tn, tn + fn + fpl)
        r_f, d4 = _rate(tn, n_false)
    else:
        p_t, d1 = _rate(tp, tp + fpc + fpl)
        r_t, d2 = _rate(tp, tp + fn)
        p_f, d3 = _rate(tn, tn + fn)
        r_f, d4 = _rate(tn, n_false)
    for flag, name in ((d1, "true.precision"), (d2, "true.recall"),
                       (d3, "false.precision"), (d4, "false.recall")):
        if flag:
            degenerate.append(name)

    def f1(p, r, row):
        if p + r == 0.0:
            degenerate.append(f"{row}.f1")
            return 0.0
        return 2.0 * p * r / (p + r)

    rows = {
        "false": {"precision": p_f, "recall": r_f, "f1": f1(p_f, r_f, "false"),
                  "support": n_false},
        "true": {"precision": p_t, "recall": r_t, "f1": f1(p_t, r_t, "true"),
                 "support": n_true},
    }
    acc, dacc = _rate(tp + tn, total)
    if dacc:
        degenerate.append("accuracy")
    macro = {
        k: (rows["false"][k] + rows["true"][k]) / 2.0
        for k in ("precision", "recall", "f1")
    }
    if total == 0:
        weighted = {k: 0.0 for k in ("precision", "recall", "f1")}
        degenerate.append("weighted_avg")
    else:
        weighted = {
            k: (rows["false"][k] * n_false + rows["true"][k] * n_true) / total
            for k in ("precision", "recall", "f1")
        }
    return {
        "mapping": fp_mapping,
        "classes": rows,
        "accuracy": acc,
        "macro_avg": macro,
        "weighted_avg": weighted,
        "total": total,
        "degenerate": degenerate,
    }


def classification_report(records, fp_mapping: str = "claim-only") -> dict:
    return report_from_outcome_counts(outcome_counts(records), fp_mapping)


def breakdown(records, key: str) -> dict:
    """Per-group accuracies with dispersion across sessions.

    ``key`` is a record field (clutter, shape, condition, ...).  Each
    group reports the pooled accuracies plus the standard error of the
    per-session accuracy means (sample SD / sqrt(n_sessions)).  Groups
    with no records are omitted; an empty input warns and returns {}.
    """
    records = list(records)
    if not records:
        warnings.warn("breakdown over an empty record set")
        return {}
    groups: dict = {}
    for r in records:
        groups.setdefault(r[key], []).append(r)
    out = {}
    for value in sorted(groups, key=str):
        recs = groups[value]
        sessions: dict = {}
        for r in recs:
            sessions.setdefault(r["session_id"], []).append(r)
        per_true = []
        per_all = []
        for sid in sorted(sessions):
            srecs = sessions[sid]
            per_all.append(accuracy_all(srecs))
            if any(r["target_present"] for r in srecs):
                per_true.append(accuracy_true(srecs))
        entry = {
            "n_trials": len(recs),
            "n_sessions": len(sessions),
            "accuracy_all": accuracy_all(recs),
            "sem_all": _sem(per_all),
            "mean_accuracy_all": float(np.mean(per_all)),
        }
        if any(r["target_present"] for r in recs):
            entry["accuracy_true"] = accuracy_true(recs)
            entry["mean_accuracy_true"] = float(np.mean(per_true)) if per_true else 0.0
            entry["sem_true"] = _sem(per_true)
        out[value] = entry
    return out


def _sem(values) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def trial_time_stats(records) -> dict:
    """Mean and sample SD of reaction times in seconds, per condition."""
    groups: dict = {}
    for r in records:
        groups.setdefault(r["condition"], []).append(r["rt_ms"] / 1000.0)
    out = {}
    for cond in sorted(groups):
        times = np.asarray(groups[cond], dtype=np.float64)
        sd = float(np.std(times, ddof=1)) if times.size > 1 else 0.0
        out[cond] = {"mean_s": float(times.mean()), "sd_s": sd, "n": int(times.size)}
    return out


# ---------------------------------------------------------------------------
# Gaze dispersion.

@dataclass
class EntropyGrid:
    grid_size: int
    probs: np.ndarray  # (g, g), sums to 1 when any samples fell inside
    entropy_bits: float


def _gaze_histogram(trace, grid_size: int, frame_size: tuple) -> np.ndarray:
    w, h = frame_size
    if w <= 0 or h <= 0:
        raise ValueError(f"bad frame size {frame_size}")
    if grid_size <= 0:
        raise ValueError(f"grid_size must be positive, got {grid_size}")
    counts = np.zeros((grid_size, grid_size), dtype=np.float64)
    for sample in trace:
        t, x, y = sample[0], sample[1], sample[2]
        ix = min(max(int(x * grid_size / w), 0), grid_size - 1)
        iy = min(max(int(y * grid_size / h), 0), grid_size - 1)
        counts[iy, ix] += 1.0
    return counts


def gaze_entropy(trace, grid_size: int = ENTROPY_GRID,
                 frame_size: tuple = (1024, 1024)) -> EntropyGrid:
    """Shannon entropy (bits) of the gaze distribution on a square grid.

    H = -sum P log2 P with 0 log 0 = 0; bounded by 2 log2(grid_size).
    Samples outside the frame clamp to the border cells.  An empty trace
    is undefined.
    """
    counts = _gaze_histogram(trace, grid_size, frame_size)
    n = counts.sum()
    if n == 0:
        raise UndefinedMetricError("gaze trace is empty")
    probs = counts / n
    nz = probs[probs > 0]
    h = float(-(nz * np.log2(nz)).sum())
    return EntropyGrid(grid_size=grid_size, probs=probs, entropy_bits=h)


def scott_bandwidth(trace, grid_size: int = ENTROPY_GRID,
                    frame_size: tuple = (1024, 1024)) -> float:
    """Scott's rule bandwidth in grid-cell units: n^(-1/6) * mean sigma."""
    w, h = frame_size
    pts = np.asarray([[s[1], s[2]] for s in trace], dtype=np.float64)
    if pts.shape[0] == 0:
        raise UndefinedMetricError("gaze trace is empty")
    cells = np.empty_like(pts)
    cells[:, 0] = np.clip(pts[:, 0] * grid_size / w, 0, grid_size - 1e-9)
    cells[:, 1] = np.clip(pts[:, 1] * grid_size / h, 0, grid_size - 1e-9)
    n = pts.shape[0]
    sigma = float(np.mean(np.std(cells, axis=0, ddof=1))) if n > 1 else 1.0
    if sigma == 0.0:
        sigma = 1.0
    return float(n ** (-1.0 / 6.0) * sigma)


def gaze_map(trace, bandwidth: float | None = None,
             grid_size: int = ENTROPY_GRID,
             frame_size: tuple = (1024, 1024)) -> np.ndarray:
    """Smoothed gaze density on the grid, renormalized to sum 1.

    Gaussian kernel density over the occupancy histogram; ``bandwidth``
    is the kernel sigma in cell units (Scott's rule when omitted).  As
    the bandwidth approaches zero the map converges to the histogram.
    """
    counts = _gaze_histogram(trace, grid_size, frame_size)
    n = counts.sum()
    if n == 0:
        raise UndefinedMetricError("gaze trace is empty")
    if bandwidth is None:
        bandwidth = scott_bandwidth(trace, grid_size, frame_size)
    if bandwidth < 0:
        raise ValueError(f"bandwidth must be nonnegative, got {bandwidth}")
    probs = counts / n
    if bandwidth > 0:
        probs = ndimage.gaussian_filter(probs, sigma=bandwidth, mode="constant")
    total = probs.sum()
    if total > 0:
        probs = probs / total
    return probs


def heatmap_png(grid: np.ndarray, path, scale: int = 8):
    """Write a probability grid as an 8-bit grayscale PNG heatmap."""
    from . import imaging

    grid = np.asarray(grid, dtype=np.float64)
    peak = grid.max()
    frame = grid / peak if peak > 0 else grid
    if scale > 1:
        frame = imaging.resize(frame, grid.shape[1] * scale, grid.shape[0] * scale)
        frame = np.clip(frame, 0.0, 1.0)
    imaging.write_gray(path, frame)


# ---------------------------------------------------------------------------
# Inference.

@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float


def paired_t(a, b) -> TTestResult:
    """Two-sided paired t-test; df = n - 1, sample SD of the differences."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired_t needs two 1-D arrays of equal length")
    if a.size < 2:
        raise ValueError("paired_t needs at least two pairs")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise DegenerateStatisticError("differences have zero variance")
    n = d.size
    t = float(d.mean() / (sd / math.sqrt(n)))
    df = n - 1
    p = float(2.0 * stats.t.sf(abs(t), df))
    return TTestResult(t=t, df=df, p=p)


@dataclass(frozen=True)
class AnovaResult:
    f_a: float
    f_b: float
    f_ab: float
    df_a: int
    df_b: int
    df_ab: int
    df_within: int
    p_a: float
    p_b: float
    p_ab: float
    ss_a: float
    ss_b: float
    ss_ab: float
    ss_within: float
    ss_total: float


def two_way_anova(values, factor_a, factor_b) -> AnovaResult:
    """Fixed-effects two-way ANOVA on a balanced complete design.

    Sums of squares decompose exactly: SS_A + SS_B + SS_AB + SS_within
    = SS_total.  Unbalanced or incomplete designs are rejected; a design
    with one observation per cell has no error term and is degenerate.
    """
    y = np.asarray(values, dtype=np.float64)
    fa = np.asarray(factor_a)
    fb = np.asarray(factor_b)
    if not (y.shape == fa.shape == fb.shape) or y.ndim != 1:
        raise ValueError("values and factor labels must be equal-length 1-D arrays")
    if y.size == 0:
        raise ValueError("empty input")
    a_levels = sorted(set(fa.tolist()), key=str)
    b_levels = sorted(set(fb.tolist()), key=str)
    na, nb = len(a_levels), len(b_levels)
    if na < 2 or nb < 2:
        raise UnsupportedDesignError("each factor needs at least two levels")
    cells = {}
    for ai in a_levels:
        for bi in b_levels:
            sel = (fa == ai) & (fb == bi)
            cells[(ai, bi)] = y[sel]
    sizes = {k: v.size for k, v in cells.items()}
    n = next(iter(sizes.values()))
    if n == 0 or any(s != n for s in sizes.values()):
        raise UnsupportedDesignError(
            f"cells must all hold the same count, got {sorted(set(sizes.values()))}"
        )
    df_within = na * nb * (n - 1)
    if df_within == 0:
        raise DegenerateStatisticError("one observation per cell leaves no error df")

    grand = y.mean()
    a_means = {ai: y[fa == ai].mean() for ai in a_levels}
    b_means = {bi: y[fb == bi].mean() for bi in b_levels}
    cell_means = {k: v.mean() for k, v in cells.items()}

    ss_a = nb * n * sum((a_means[ai] - grand) ** 2 for ai in a_levels)
    ss_b = na * n * sum((b_means[bi] - grand) ** 2 for bi in b_levels)
    ss_cells = n * sum((cell_means[k] - grand) ** 2 for k in cells)
    ss_ab = ss_cells - ss_a - ss_b
    ss_within = sum(((v - cell_means[k]) ** 2).sum() for k, v in cells.items())
    ss_total = float(((y - grand) ** 2).sum())

    df_a = na - 1
    df_b = nb - 1
    df_ab = df_a * df_b
    ms_within = ss_within / df_within
    if ms_within == 0.0:
        raise DegenerateStatisticError("zero within-cell variance")

    f_a = (ss_a / df_a) / ms_within
    f_b = (ss_b / df_b) / ms_within
    f_ab = (ss_ab / df_ab) / ms_within
    return AnovaResult(
        f_a=float(f_a), f_b=float(f_b), f_ab=float(f_ab),
        df_a=df_a, df_b=df_b, df_ab=df_ab, df_within=df_within,
        p_a=float(stats.f.sf(f_a, df_a, df_within)),
        p_b=float(stats.f.sf(f_b, df_b, df_within)),
        p_ab=float(stats.f.sf(f_ab, df_ab, df_within)),
        ss_a=float(ss_a), ss_b=float(ss_b), ss_ab=float(ss_ab),
        ss_within=float(ss_within), ss_total=ss_total,
    )


# ---------------------------------------------------------------------------
# Report export.

def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def report_to_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["class", "precision", "recall", "f1", "support"])
    for name in ("false", "true"):
        row = report["classes"][name]
        writer.writerow([name, f"{row['precision']:.6f}", f"{row['recall']:.6f}",
                         f"{row['f1']:.6f}", row["support"]])
    writer.writerow(["accuracy", "", "", f"{report['accuracy']:.6f}", report["total"]])
    for name in ("macro_avg", "weighted_avg"):
        row = report[name]
        writer.writerow([name, f"{row['precision']:.6f}", f"{row['recall']:.6f}",
                         f"{row['f1']:.6f}", report["total"]])
    return buf.getvalue()
