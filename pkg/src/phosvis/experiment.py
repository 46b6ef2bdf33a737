"""Object-search experiment protocol.

A session is 76 cue/stimulus trials: the participant sees a target name,
then the scene, and answers by clicking the target location or claiming
it absent.  22 of the 76 trials are false (target not in the scene) and
the trials cover three clutter strata.  Trial selection is a
deterministic function of the dataset so every condition runs the same
trial multiset; the seed only shuffles presentation order.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import maskstore
from .maskstore import GazePoint, MaskArchive

CONDITIONS = ("GCSS", "Edges", "Coloured")
CLUTTER_LEVELS = ("low", "intermediate", "high")
CLUTTER_RANGES = {"low": (1, 3), "intermediate": (5, 8), "high": (9, 11)}
OUTCOMES = ("TP", "FP_location", "FP_claim", "TN", "FN")

SESSION_TRIALS = 76
FALSE_TRIALS = 22
CLUTTER_QUOTAS = {"low": 24, "intermediate": 26, "high": 26}
BREAK_AFTER = 38  # GCSS and Edges pause mid-session; Coloured runs through
CLICK_TOLERANCE_PX = 10

PHASES = ("cue", "stimulus", "break", "done")

RECORD_FIELDS = (
    "session_id", "condition", "index", "image_id", "target_label",
    "target_present", "clutter", "shape", "onset_ms", "decision", "rt_ms",
    "outcome", "policy", "gaze",
)


class ProtocolError(RuntimeError):
    """Event not legal in the current phase."""


class ConfigurationError(ValueError):
    """Dataset cannot satisfy the session quotas."""


class DataError(ValueError):
    """Referenced archive or mask is missing or inconsistent."""


@dataclass(frozen=True)
class TrialSpec:
    image_id: str
    target_label: str
    target_present: bool
    clutter: str
    shape: str
    condition: str


@dataclass
class SessionPlan:
    condition: str
    seed: int
    trials: list[TrialSpec]
    break_after: int | None


@dataclass
class Decision:
    type: str  # click | absent
    x: int | None = None
    y: int | None = None

    def __post_init__(self):
        if self.type not in ("click", "absent"):
            raise ValueError(f"unknown decision type {self.type!r}")
        if self.type == "click" and (self.x is None or self.y is None):
            raise ValueError("click decisions need x and y")


@dataclass
class TrialRecord:
    spec: TrialSpec
    onset_ms: int
    decision: Decision
    rt_ms: int
    outcome: str
    policy: str
    gaze: list = field(default_factory=list)  # [t, x, y] triples


def clutter_level(object_count: int) -> str | None:
    """Map a scene's object count onto a stratum, or None if outside all."""
    for level, (lo, hi) in CLUTTER_RANGES.items():
        if lo <= object_count <= hi:
            return level
    return None


@dataclass
class DatasetImage:
    image_id: str
    labels: dict  # label -> shape_class for every annotated object
    targets: list  # labels eligible as cues
    archive_path: Path | None = None
    image_path: Path | None = None

    @property
    def object_count(self) -> int:
        return len(self.labels)

    @property
    def clutter(self) -> str | None:
        return clutter_level(self.object_count)


class Dataset:
    """Scene collection backing session construction and scoring."""

    def __init__(self, images: list[DatasetImage], root: Path | None = None):
        self.images = sorted(images, key=lambda im: im.image_id)
        self.root = root
        self.vocabulary: dict = {}
        for im in self.images:
            for label, shape in sorted(im.labels.items()):
                prior = self.vocabulary.get(label)
                if prior is not None and prior != shape:
                    raise ConfigurationError(
                        f"label {label!r} maps to both {prior!r} and {shape!r}"
                    )
                self.vocabulary[label] = shape
        self._pairs = None
        self._archives: dict = {}

    @classmethod
    def from_dir(cls, path) -> "Dataset":
        root = Path(path)
        images = []
        for pmsk in sorted(root.glob("*.pmsk")):
            sidecar = pmsk.with_suffix(".json")
            if not sidecar.exists():
                raise ConfigurationError(f"{pmsk.name}: missing sidecar JSON")
            meta = maskstore.load_sidecar(sidecar)
            archive = maskstore.load_archive(pmsk)
            labels = {
                m.label: m.shape_class
                for m in archive.masks
                if m.label and m.label != "background"
            }
            missing = [t for t in meta["target_labels"] if t not in labels]
            if missing:
                raise ConfigurationError(
                    f"{pmsk.name}: sidecar targets {missing} not in archive"
                )
            images.append(DatasetImage(
                image_id=meta["image_id"],
                labels=labels,
                targets=sorted(meta["target_labels"]),
                archive_path=pmsk,
                image_path=root / meta["source"] if meta["source"] else None,
            ))
        if not images:
            raise ConfigurationError(f"{root}: no .pmsk archives found")
        return cls(images, root=root)

    def archive(self, image_id: str) -> MaskArchive:
        if image_id not in self._archives:
            for im in self.images:
                if im.image_id == image_id:
                    if im.archive_path is None:
                        raise DataError(f"image {image_id!r} has no archive path")
                    self._archives[image_id] = maskstore.load_archive(im.archive_path)
                    break
            else:
                raise DataError(f"unknown image id {image_id!r}")
        return self._archives[image_id]

    def add_archive(self, image_id: str, archive: MaskArchive):
        """Register an in-memory archive (used by synthetic datasets)."""
        self._archives[image_id] = archive

    def select_pairs(self) -> list[tuple]:
        """The canonical 76 (image, label, present) pairs for this dataset.

        Deterministic: stratified by clutter quota with the false trials
        allocated 7/8/7 across strata (largest-remainder split of 22),
        candidates taken round-robin over images in sorted order.
        """
        if self._pairs is not None:
            return self._pairs
        false_share = _largest_remainder(FALSE_TRIALS, CLUTTER_QUOTAS)
        pairs = []
        for level in CLUTTER_LEVELS:
            imgs = [im for im in self.images if im.clutter == level]
            need_false = false_share[level]
            need_true = CLUTTER_QUOTAS[level] - need_false
            true_cands = _round_robin(
                [(im.image_id, t) for im in imgs for t in im.targets], imgs
            )
            false_cands = _round_robin(
                [
                    (im.image_id, lbl)
                    for im in imgs
                    for lbl in sorted(self.vocabulary)
                    if lbl not in im.labels
                ],
                imgs,
            )
            if len(true_cands) < need_true:
                raise ConfigurationError(
                    f"stratum {level!r}: need {need_true} present-target pairs, "
                    f"dataset offers {len(true_cands)}"
                )
            if len(false_cands) < need_false:
                raise ConfigurationError(
                    f"stratum {level!r}: need {need_false} absent-target pairs, "
                    f"dataset offers {len(false_cands)}"
                )
            pairs.extend((iid, lbl, True, level) for iid, lbl in true_cands[:need_true])
            pairs.extend((iid, lbl, False, level) for iid, lbl in false_cands[:need_false])
        self._pairs = pairs
        return pairs


def _largest_remainder(total: int, quotas: dict) -> dict:
    grand = sum(quotas.values())
    raw = {k: total * q / grand for k, q in quotas.items()}
    out = {k: int(raw[k]) for k in quotas}
    short = total - sum(out.values())
    for k in sorted(quotas, key=lambda k: (-(raw[k] - out[k]), list(quotas).index(k))):
        if short <= 0:
            break
        out[k] += 1
        short -= 1
    return out


def _round_robin(pairs: list, imgs: list) -> list:
    by_img = {im.image_id: [] for im in imgs}
    for iid, lbl in sorted(pairs):
        by_img[iid].append(lbl)
    order = sorted(by_img)
    out = []
    depth = 0
    while True:
        row = [(iid, by_img[iid][depth]) for iid in order if depth < len(by_img[iid])]
        if not row:
            return out
        out.extend(row)
        depth += 1


def build_session(dataset: Dataset, condition: str, seed: int) -> SessionPlan:
    """Assemble a 76-trial plan; the seed randomizes order only."""
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}")
    pairs = dataset.select_pairs()
    order = list(range(len(pairs)))
    random.Random(seed).shuffle(order)
    trials = []
    for i in order:
        iid, label, present, level = pairs[i]
        trials.append(TrialSpec(
            image_id=iid,
            target_label=label,
            target_present=present,
            clutter=level,
            shape=dataset.vocabulary[label],
            condition=condition,
        ))
    break_after = BREAK_AFTER if condition in ("GCSS", "Edges") else None
    return SessionPlan(condition=condition, seed=seed, trials=trials,
                       break_after=break_after)


def score_trial(spec: TrialSpec, decision: Decision, archive: MaskArchive | None,
                tolerance_px: int = CLICK_TOLERANCE_PX) -> str:
    """Five-way outcome for one decision.

    A click on a present target counts as TP when it lands inside the
    target mask dilated by ``tolerance_px`` (Euclidean radius).
    """
    if not spec.target_present:
        return "FP_claim" if decision.type == "click" else "TN"
    if decision.type == "absent":
        return "FN"
    if archive is None:
        raise DataError(f"scoring {spec.image_id!r} needs its mask archive")
    target = None
    for m in archive.masks:
        if m.label == spec.target_label:
            target = m
            break
    if target is None:
        raise DataError(
            f"image {spec.image_id!r} has no mask labelled {spec.target_label!r}"
        )
    x = int(decision.x)
    y = int(decision.y)
    h, w = target.bitmap.shape
    if 0 <= x < w and 0 <= y < h and target.bitmap[y, x]:
        return "TP"
    t = int(tolerance_px)
    x0, x1 = max(x - t, 0), min(x + t + 1, w)
    y0, y1 = max(y - t, 0), min(y + t + 1, h)
    if x0 < x1 and y0 < y1:
        import numpy as np

        ys, xs = np.nonzero(target.bitmap[y0:y1, x0:x1])
        if ys.size:
            d2 = (ys + y0 - y) ** 2 + (xs + x0 - x) ** 2
            if int(d2.min()) <= t * t:
                return "TP"
    return "FP_location"


class SessionState:
    """Mutable run state for one session; single writer assumed.

    ``archives`` is a callable image_id -> MaskArchive used when scoring
    clicked true trials.
    """

    def __init__(self, plan: SessionPlan, archives=None,
                 selection_policy: str = "union",
                 tolerance_px: int = CLICK_TOLERANCE_PX):
        if selection_policy not in maskstore.SELECTION_POLICIES:
            raise ValueError(f"unknown selection policy {selection_policy!r}")
        self.plan = plan
        self.phase = "cue"
        self.index = 0
        self.records: list[TrialRecord] = []
        self.archives = archives
        self.selection_policy = selection_policy
        self.tolerance_px = tolerance_px
        self._onset_ms: int | None = None
        self._gaze: list = []
        self._gaze_ts: set = set()

    @property
    def current_trial(self) -> TrialSpec | None:
        if self.index < len(self.plan.trials):
            return self.plan.trials[self.index]
        return None


def advance(state: SessionState, event: dict) -> SessionState:
    """Apply one event to the session state machine.

    Legal transitions: cue --show_stimulus--> stimulus; stimulus
    --decide--> cue, break or done; break --resume--> cue.  Gaze events
    accumulate on the live trial (duplicate timestamps dropped);
    show_cue is a legal no-op marker in the cue phase.  Illegal events
    raise ProtocolError and leave the state untouched.
    """
    etype = event.get("type")
    if etype == "show_cue":
        if state.phase != "cue":
            raise ProtocolError(f"show_cue in phase {state.phase!r}")
        return state
    if etype == "show_stimulus":
        if state.phase != "cue":
            raise ProtocolError(f"show_stimulus in phase {state.phase!r}")
        state.phase = "stimulus"
        state._onset_ms = int(event.get("t", 0))
        state._gaze = []
        state._gaze_ts = set()
        return state
    if etype == "gaze":
        if state.phase != "stimulus":
            raise ProtocolError(f"gaze in phase {state.phase!r}")
        t = int(event["t"])
        if t in state._gaze_ts:
            return state  # duplicate timestamp, drop
        state._gaze_ts.add(t)
        state._gaze.append([t, int(event["x"]), int(event["y"])])
        return state
    if etype == "decide":
        if state.phase != "stimulus":
            raise ProtocolError(f"decide in phase {state.phase!r}")
        spec = state.current_trial
        decision = event["decision"]
        if not isinstance(decision, Decision):
            decision = Decision(
                type=decision["type"],
                x=decision.get("x"),
                y=decision.get("y"),
            )
        archive = None
        if spec.target_present and decision.type == "click":
            if state.archives is None:
                raise DataError("session state has no archive source for scoring")
            archive = state.archives(spec.image_id)
        outcome = score_trial(spec, decision, archive, state.tolerance_px)
        t = int(event.get("t", state._onset_ms or 0))
        state.records.append(TrialRecord(
            spec=spec,
            onset_ms=int(state._onset_ms or 0),
            decision=decision,
            rt_ms=t - int(state._onset_ms or 0),
            outcome=outcome,
            policy=state.selection_policy,
            gaze=list(state._gaze),
        ))
        state.index += 1
        state._onset_ms = None
        state._gaze = []
        state._gaze_ts = set()
        if state.index >= len(state.plan.trials):
            state.phase = "done"
        elif state.plan.break_after is not None and state.index == state.plan.break_after:
            state.phase = "break"
        else:
            state.phase = "cue"
        return state
    if etype == "resume":
        if state.phase != "break":
            raise ProtocolError(f"resume in phase {state.phase!r}")
        state.phase = "cue"
        return state
    raise ProtocolError(f"unknown event type {etype!r}")


# ---------------------------------------------------------------------------
# JSON Lines log format.

def record_to_dict(record: TrialRecord, session_id: str, index: int) -> dict:
    d = record.decision
    return {
        "session_id": session_id,
        "condition": record.spec.condition,
        "index": index,
        "image_id": record.spec.image_id,
        "target_label": record.spec.target_label,
        "target_present": record.spec.target_present,
        "clutter": record.spec.clutter,
        "shape": record.spec.shape,
        "onset_ms": record.onset_ms,
        "decision": {"type": d.type, "x": d.x, "y": d.y},
        "rt_ms": record.rt_ms,
        "outcome": record.outcome,
        "policy": record.policy,
        "gaze": [list(g) for g in record.gaze],
    }


def export_log(state: SessionState, session_id: str) -> str:
    """Serialize completed trials as JSON Lines, one record per line."""
    lines = [
        json.dumps(record_to_dict(r, session_id, i), separators=(",", ":"))
        for i, r in enumerate(state.records)
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_log(text: str) -> list[dict]:
    """Parse JSON Lines trial records, skipping metadata lines."""
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"log line {lineno}: bad JSON ({exc})") from exc
        if "type" in doc and "outcome" not in doc:
            continue  # trailing metadata such as the questionnaire line
        missing = [k for k in RECORD_FIELDS if k not in doc]
        if missing:
            raise DataError(f"log line {lineno}: missing fields {missing}")
        records.append(doc)
    return records


def replay_log(text: str, archives) -> str:
    """Re-run a log's events through the state machine and re-export.

    ``archives`` is a callable image_id -> MaskArchive.  Replaying an
    exported log reproduces it byte for byte; a divergence means either
    the log or the dataset changed.
    """
    docs = parse_log(text)
    if not docs:
        return ""
    condition = docs[0]["condition"]
    session_id = docs[0]["session_id"]
    policy = docs[0]["policy"]
    trials = [
        TrialSpec(
            image_id=d["image_id"],
            target_label=d["target_label"],
            target_present=bool(d["target_present"]),
            clutter=d["clutter"],
            shape=d["shape"],
            condition=d["condition"],
        )
        for d in docs
    ]
    break_after = None
    plan = SessionPlan(condition=condition, seed=-1, trials=trials,
                       break_after=break_after)
    state = SessionState(plan, archives=archives, selection_policy=policy)
    for d in docs:
        advance(state, {"type": "show_stimulus", "t": d["onset_ms"]})
        for t, x, y in d["gaze"]:
            advance(state, {"type": "gaze", "t": t, "x": x, "y": y})
        advance(state, {
            "type": "decide",
            "t": d["onset_ms"] + d["rt_ms"],
            "decision": d["decision"],
        })
    return export_log(state, session_id)


def write_log(path, text: str):
    Path(path).write_text(text)


def read_log(path) -> str:
    return Path(path).read_text()
