"""Phosphene vision simulator.

Electrodes are placed by a reverse visuotopic model: polar angle is
uniform, eccentricity follows the density e * M(e)^2 implied by uniform
electrode coverage of a cortical sheet with magnification
M(e) = k / (e + a) (Horton-Hoyt constants k = 17.3 mm, a = 0.75 deg).
Each electrode renders one Gaussian phosphene whose size and brightness
follow the stimulation parameters; the frame is screen centered and the
stimulus is sampled relative to the gaze point.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class SimParams:
    """Stimulation and optics parameters.

    current_ua is the per-electrode pulse current in microamperes,
    excitability in uA/mm^2; their ratio sets the activated cortical
    area and with it the phosphene diameter.
    """

    n_electrodes: int = 600
    field_radius_deg: float = 4.0
    pulse_freq_hz: float = 300.0
    current_ua: float = 60.0
    thresholding: bool = False
    magnification_k: float = 17.3
    magnification_a: float = 0.75
    excitability: float = 675.0
    frame_size: int = 640

    def __post_init__(self):
        if self.n_electrodes <= 0:
            raise ValueError(f"n_electrodes must be positive, got {self.n_electrodes}")
        if self.field_radius_deg <= 0:
            raise ValueError(f"field_radius_deg must be positive, got {self.field_radius_deg}")
        if self.pulse_freq_hz < 0 or self.current_ua < 0:
            raise ValueError("pulse_freq_hz and current_ua must be nonnegative")
        if self.magnification_k <= 0 or self.magnification_a <= 0:
            raise ValueError("magnification constants must be positive")
        if self.excitability <= 0:
            raise ValueError(f"excitability must be positive, got {self.excitability}")
        if self.frame_size <= 0:
            raise ValueError(f"frame_size must be positive, got {self.frame_size}")


@dataclass
class ElectrodeLayout:
    """Sampled electrode positions in visual-field coordinates (degrees)."""

    seed: int
    n_electrodes: int
    field_radius_deg: float
    eccentricity: np.ndarray  # (N,) degrees
    angle: np.ndarray  # (N,) radians

    @property
    def x_deg(self) -> np.ndarray:
        return self.eccentricity * np.cos(self.angle)

    @property
    def y_deg(self) -> np.ndarray:
        return self.eccentricity * np.sin(self.angle)


def magnification(ecc_deg, params: SimParams = SimParams()) -> np.ndarray:
    """Cortical magnification M(e) = k / (e + a) in mm/deg."""
    ecc = np.asarray(ecc_deg, dtype=np.float64)
    if np.any(ecc < 0):
        raise ValueError("eccentricity must be nonnegative")
    return params.magnification_k / (ecc + params.magnification_a)


def _ecc_cdf_unnormalized(e, a: float) -> np.ndarray:
    # Integral of e / (e + a)^2 from 0 to e (the k^2 factor cancels in
    # normalization): ln((e + a) / a) + a / (e + a) - 1.
    e = np.asarray(e, dtype=np.float64)
    return np.log((e + a) / a) + a / (e + a) - 1.0


def eccentricity_cdf(e, params: SimParams = SimParams()) -> np.ndarray:
    """CDF of the electrode eccentricity distribution on (0, R]."""
    a = params.magnification_a
    r = params.field_radius_deg
    return _ecc_cdf_unnormalized(e, a) / _ecc_cdf_unnormalized(r, a)


def sample_layout(params: SimParams, seed: int) -> ElectrodeLayout:
    """Sample electrode positions; identical seeds give identical layouts.

    Eccentricity uses inverse-transform sampling of the analytic CDF on
    a dense grid; polar angle is uniform on [0, 2 pi).
    """
    rng = np.random.default_rng(seed)
    a = params.magnification_a
    r = params.field_radius_deg
    grid = np.linspace(r * 1e-9, r, 8192)
    cdf = _ecc_cdf_unnormalized(grid, a)
    cdf = cdf / cdf[-1]
    u = rng.uniform(0.0, 1.0, params.n_electrodes)
    ecc = np.interp(u, cdf, grid)
    angle = rng.uniform(0.0, 2.0 * np.pi, params.n_electrodes)
    return ElectrodeLayout(
        seed=seed,
        n_electrodes=params.n_electrodes,
        field_radius_deg=r,
        eccentricity=ecc,
        angle=angle,
    )


def phosphene_size(ecc_deg, params: SimParams = SimParams()) -> np.ndarray:
    """Phosphene sigma in degrees at the given eccentricity.

    The activated cortical radius sqrt(current / excitability) in mm is
    mapped back through M(e) and halved: sigma covers the half-width.
    """
    spread_mm = np.sqrt(params.current_ua / params.excitability)
    return spread_mm / magnification(ecc_deg, params) / 2.0


def _brightness(x):
    # Saturating response, scaled so that full activation at the default
    # drive lands at 0.9; clamped into [0, 1] for overdriven parameters.
    return np.minimum(1.0, 1.35 * x / (x + 0.5))


def drive_factor(params: SimParams) -> float:
    """Relative stimulation drive, 1.0 at the 60 uA / 300 Hz defaults."""
    return (params.current_ua / 60.0) * (params.pulse_freq_hz / 300.0)


def save_layout(layout: ElectrodeLayout, path):
    doc = {
        "seed": layout.seed,
        "n_electrodes": layout.n_electrodes,
        "field_radius_deg": layout.field_radius_deg,
        "centers": [[float(e), float(t)]
                    for e, t in zip(layout.eccentricity, layout.angle)],
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_layout(path) -> ElectrodeLayout:
    doc = json.loads(Path(path).read_text())
    centers = np.asarray(doc["centers"], dtype=np.float64)
    if centers.ndim != 2 or centers.shape[1] != 2:
        raise ValueError("layout file: centers must be a list of [ecc, angle] pairs")
    if centers.shape[0] != doc["n_electrodes"]:
        raise ValueError("layout file: center count does not match n_electrodes")
    return ElectrodeLayout(
        seed=int(doc["seed"]),
        n_electrodes=int(doc["n_electrodes"]),
        field_radius_deg=float(doc["field_radius_deg"]),
        eccentricity=centers[:, 0].copy(),
        angle=centers[:, 1].copy(),
    )


class PhospheneRenderer:
    """Precomputed rendering state for one layout / parameter set.

    Construction derives, per electrode, the fixed screen-space Gaussian
    stamp plus the stimulus-space sampling stencil.  ``render`` then
    only gathers stimulus values and accumulates stamps, which keeps a
    600-electrode frame within interactive latency.
    """

    def __init__(self, layout: ElectrodeLayout, params: SimParams,
                 stim_shape: tuple):
        if layout.n_electrodes != params.n_electrodes:
            raise ValueError(
                f"layout has {layout.n_electrodes} electrodes, params expect "
                f"{params.n_electrodes}"
            )
        if layout.field_radius_deg != params.field_radius_deg:
            raise ValueError("layout and params disagree on field radius")
        if len(stim_shape) != 2 or min(stim_shape) <= 0:
            raise ValueError(f"bad stimulus shape {stim_shape}")
        self.params = params
        self.stim_shape = tuple(int(v) for v in stim_shape)
        size = params.frame_size
        r_deg = params.field_radius_deg
        # The frame spans the full field: 2R degrees across its width.
        ppd_screen = size / (2.0 * r_deg)
        ppd_stim = self.stim_shape[1] / (2.0 * r_deg)

        sigma_deg = phosphene_size(layout.eccentricity, params)
        x_deg = layout.x_deg
        y_deg = layout.y_deg

        self._drive = drive_factor(params)
        self._screen = []
        self._sample = []
        cx = (size - 1) / 2.0
        cy = (size - 1) / 2.0
        for i in range(layout.n_electrodes):
            sx = cx + x_deg[i] * ppd_screen
            sy = cy + y_deg[i] * ppd_screen
            sig_s = max(sigma_deg[i] * ppd_screen, 1e-9)
            rad = max(1, int(np.ceil(3.0 * sig_s)))
            x0 = int(np.floor(sx)) - rad
            y0 = int(np.floor(sy)) - rad
            n = 2 * rad + 2
            gx = np.arange(x0, x0 + n, dtype=np.float64)
            gy = np.arange(y0, y0 + n, dtype=np.float64)
            d2 = (gx[None, :] - sx) ** 2 + (gy[:, None] - sy) ** 2
            stamp = np.exp(-d2 / (2.0 * sig_s * sig_s))
            stamp[d2 > (3.0 * sig_s) ** 2] = 0.0  # hard 3-sigma truncation
            ys0, ys1 = max(y0, 0), min(y0 + n, size)
            xs0, xs1 = max(x0, 0), min(x0 + n, size)
            if ys0 >= ys1 or xs0 >= xs1:
                self._screen.append(None)
            else:
                view = stamp[ys0 - y0:ys1 - y0, xs0 - x0:xs1 - x0]
                self._screen.append((slice(ys0, ys1), slice(xs0, xs1),
                                     np.ascontiguousarray(view)))

            # Sampling stencil: Gaussian receptive field of the same
            # angular extent, anchored at integer offsets from the gaze.
            ox = x_deg[i] * ppd_stim
            oy = y_deg[i] * ppd_stim
            oxi = int(np.rint(ox))
            oyi = int(np.rint(oy))
            sig_t = max(sigma_deg[i] * ppd_stim, 1e-9)
            rw = max(1, int(np.ceil(3.0 * sig_t)))
            wx = np.arange(-rw, rw + 1, dtype=np.float64) - (ox - oxi)
            wy = np.arange(-rw, rw + 1, dtype=np.float64) - (oy - oyi)
            w = np.exp(-(wx[None, :] ** 2 + wy[:, None] ** 2) / (2.0 * sig_t * sig_t))
            if w.sum() <= 0.0:
                # Degenerate sigma (zero current): fall back to the
                # nearest stimulus pixel.
                w = np.zeros_like(w)
                w[rw, rw] = 1.0
            self._sample.append((oxi, oyi, rw, np.ascontiguousarray(w), float(w.sum())))

        yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
        half = size / 2.0
        self._aperture = ((xx - cx) ** 2 + (yy - cy) ** 2) <= half * half
        self._size = size

    def activations(self, stimulus: np.ndarray, gaze_xy: tuple) -> np.ndarray:
        """Per-electrode Gaussian-weighted stimulus averages in [0, 1].

        Window weight falling outside the stimulus counts as intensity
        zero, so electrodes looking off the image dim accordingly.
        """
        stim = np.asarray(stimulus, dtype=np.float64)
        if stim.shape != self.stim_shape:
            raise ValueError(
                f"stimulus shape {stim.shape} does not match renderer "
                f"{self.stim_shape}"
            )
        h, w = stim.shape
        gx = int(np.rint(gaze_xy[0]))
        gy = int(np.rint(gaze_xy[1]))
        out = np.empty(len(self._sample), dtype=np.float64)
        for i, (oxi, oyi, rw, wgt, wsum) in enumerate(self._sample):
            x0 = gx + oxi - rw
            y0 = gy + oyi - rw
            n = 2 * rw + 1
            xs0, xs1 = max(x0, 0), min(x0 + n, w)
            ys0, ys1 = max(y0, 0), min(y0 + n, h)
            if xs0 >= xs1 or ys0 >= ys1:
                out[i] = 0.0
                continue
            win = stim[ys0:ys1, xs0:xs1]
            wv = wgt[ys0 - y0:ys1 - y0, xs0 - x0:xs1 - x0]
            out[i] = float((win * wv).sum()) / wsum
        return out

    def render(self, stimulus: np.ndarray, gaze_xy: tuple) -> np.ndarray:
        """Render one phosphene frame for the given gaze point."""
        act = self.activations(stimulus, gaze_xy)
        brightness = _brightness(act * self._drive)
        frame = np.zeros((self._size, self._size), dtype=np.float64)
        for b, placed in zip(brightness, self._screen):
            if placed is None or b <= 0.0:
                continue
            ys, xs, stamp = placed
            frame[ys, xs] += b * stamp
        np.clip(frame, 0.0, 1.0, out=frame)
        frame[~self._aperture] = 0.0
        return frame


def render_frame(stimulus: np.ndarray, gaze_xy: tuple, layout: ElectrodeLayout,
                 params: SimParams = SimParams()) -> np.ndarray:
    """One-shot frame render; builds a fresh renderer each call.

    Interactive callers should hold a :class:`PhospheneRenderer` so the
    per-electrode stamps are computed once.
    """
    stim = np.asarray(stimulus, dtype=np.float64)
    if stim.ndim != 2:
        raise ValueError(f"stimulus must be a 2-D frame, got shape {stim.shape}")
    return PhospheneRenderer(layout, params, stim.shape).render(stim, gaze_xy)
