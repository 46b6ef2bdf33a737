import json

import numpy as np
import pytest
from scipy import ndimage

from phosvis import simulator
from phosvis.simulator import (
    ElectrodeLayout, PhospheneRenderer, SimParams, load_layout, magnification,
    phosphene_size, render_frame, sample_layout, save_layout,
)


class TestMagnification:
    def test_hand_values(self):
        # 17.3 / (0 + 0.75) and 17.3 / (4 + 0.75), computed by hand.
        assert magnification(0.0) == pytest.approx(23.066666666666666, abs=1e-12)
        assert magnification(4.0) == pytest.approx(3.642105263157895, abs=1e-12)

    def test_monotone_decreasing(self):
        ecc = np.linspace(0, 4, 100)
        m = magnification(ecc)
        assert np.all(np.diff(m) < 0)

    def test_negative_eccentricity_rejected(self):
        with pytest.raises(ValueError):
            magnification(-0.1)


class TestPhospheneSize:
    def test_default_foveal_size(self):
        # sqrt(60 / 675) mm spread over M(0) = 23.0667 mm/deg, halved.
        want = np.sqrt(60.0 / 675.0) / (17.3 / 0.75) / 2.0
        assert phosphene_size(0.0) == pytest.approx(want, abs=1e-15)
        assert phosphene_size(0.0) == pytest.approx(0.006463, abs=1e-6)

    def test_grows_with_eccentricity(self):
        ecc = np.linspace(0, 4, 50)
        sizes = phosphene_size(ecc)
        assert np.all(np.diff(sizes) > 0)

    def test_grows_with_current(self):
        lo = phosphene_size(2.0, SimParams(current_ua=30.0))
        hi = phosphene_size(2.0, SimParams(current_ua=120.0))
        assert hi > lo
        assert hi / lo == pytest.approx(2.0, abs=1e-12)  # sqrt(4x)


class TestLayout:
    def test_deterministic(self):
        p = SimParams()
        a = sample_layout(p, seed=5)
        b = sample_layout(p, seed=5)
        assert np.array_equal(a.eccentricity, b.eccentricity)
        assert np.array_equal(a.angle, b.angle)
        c = sample_layout(p, seed=6)
        assert not np.array_equal(a.eccentricity, c.eccentricity)

    def test_bounds(self):
        layout = sample_layout(SimParams(), seed=1)
        assert layout.eccentricity.shape == (600,)
        assert np.all(layout.eccentricity > 0)
        assert np.all(layout.eccentricity <= 4.0)
        assert np.all((layout.angle >= 0) & (layout.angle < 2 * np.pi))

    def test_eccentricity_distribution(self):
        # Independent oracle: trapezoid integration of e * M(e)^2.
        p = SimParams(n_electrodes=20_000)
        ecc = np.sort(sample_layout(p, seed=77).eccentricity)
        grid = np.linspace(1e-9, 4.0, 100_001)
        dens = grid * (17.3 / (grid + 0.75)) ** 2
        cdf = np.concatenate(
            [[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2.0 * np.diff(grid))]
        )
        cdf /= cdf[-1]
        f = np.interp(ecc, grid, cdf)
        n = len(ecc)
        ks = max(
            np.abs(np.arange(1, n + 1) / n - f).max(),
            np.abs(np.arange(n) / n - f).max(),
        )
        assert ks < 0.02

    def test_angle_uniformity(self):
        layout = sample_layout(SimParams(n_electrodes=20_000), seed=3)
        hist, _ = np.histogram(layout.angle, bins=8, range=(0, 2 * np.pi))
        assert hist.min() > 0.8 * 20_000 / 8

    def test_json_round_trip_exact(self, tmp_path):
        layout = sample_layout(SimParams(), seed=9)
        path = tmp_path / "layout.json"
        save_layout(layout, path)
        back = load_layout(path)
        assert back.seed == 9
        assert np.array_equal(back.eccentricity, layout.eccentricity)
        assert np.array_equal(back.angle, layout.angle)

    def test_load_rejects_inconsistent_count(self, tmp_path):
        layout = sample_layout(SimParams(n_electrodes=10), seed=0)
        path = tmp_path / "layout.json"
        save_layout(layout, path)
        doc = json.loads(path.read_text())
        doc["n_electrodes"] = 11
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError):
            load_layout(path)


class TestBrightness:
    def test_default_drive_is_unity(self):
        assert simulator.drive_factor(SimParams()) == pytest.approx(1.0)

    def test_unit_activation_hits_nine_tenths(self):
        assert simulator._brightness(1.0) == pytest.approx(0.9, abs=1e-12)

    def test_monotone_and_bounded(self):
        x = np.linspace(0, 50, 1000)
        b = simulator._brightness(x)
        assert b[0] == 0.0
        assert np.all(np.diff(b) >= 0)
        assert np.all(b <= 1.0)


@pytest.fixture(scope="module")
def setup():
    p = SimParams()
    layout = sample_layout(p, seed=11)
    renderer = PhospheneRenderer(layout, p, (1024, 1024))
    return p, layout, renderer


class TestRenderer:

    def test_black_stimulus_black_frame(self, setup):
        _, _, renderer = setup
        frame = renderer.render(np.zeros((1024, 1024)), (512, 512))
        assert frame.max() == 0.0

    def test_white_stimulus_shows_layout(self, setup):
        _, _, renderer = setup
        frame = renderer.render(np.ones((1024, 1024)), (512, 512))
        mx = ndimage.maximum_filter(frame, size=3)
        peaks = (frame == mx) & (frame > 1e-6)
        _, n = ndimage.label(peaks, structure=np.ones((3, 3), dtype=int))
        assert 0.9 * 600 <= n <= 600

    def test_aperture(self, setup):
        _, _, renderer = setup
        frame = renderer.render(np.ones((1024, 1024)), (512, 512))
        size = frame.shape[0]
        yy, xx = np.mgrid[0:size, 0:size]
        c = (size - 1) / 2.0
        outside = (xx - c) ** 2 + (yy - c) ** 2 > (size / 2.0) ** 2
        assert frame[outside].sum() == 0.0

    def test_range(self, setup):
        _, _, renderer = setup
        rng = np.random.default_rng(0)
        frame = renderer.render(rng.random((1024, 1024)), (400, 650))
        assert frame.min() >= 0.0 and frame.max() <= 1.0

    def test_deterministic(self, setup):
        _, _, renderer = setup
        rng = np.random.default_rng(1)
        stim = rng.random((1024, 1024))
        a = renderer.render(stim, (300, 300))
        b = renderer.render(stim, (300, 300))
        assert np.array_equal(a, b)

    def test_gaze_shift_moves_content_not_positions(self, setup):
        _, _, renderer = setup
        rng = np.random.default_rng(2)
        stim = np.zeros((1024, 1024))
        stim[300:700, 300:700] = rng.random((400, 400))
        f1 = renderer.render(stim, (512, 512))
        # Shift the stimulus and the gaze identically: same frame.
        shifted = np.roll(stim, (41, -23), axis=(0, 1))
        f2 = renderer.render(shifted, (512 - 23, 512 + 41))
        assert np.array_equal(f1, f2)

    def test_phosphene_positions_fixed_across_gaze(self):
        # Hand-built layout with eccentricities small enough that every
        # sampling window stays inside the stimulus for both gazes.  A
        # uniform stimulus then yields identical activations, so the two
        # frames must match bit for bit: gaze moves the sampled content,
        # never the rendered phosphene positions.
        p = SimParams(n_electrodes=5)
        layout = ElectrodeLayout(
            seed=-1,
            n_electrodes=5,
            field_radius_deg=p.field_radius_deg,
            eccentricity=np.array([0.3, 0.9, 1.4, 1.8, 2.0]),
            angle=np.array([0.0, 1.1, 2.9, 4.2, 5.5]),
        )
        renderer = PhospheneRenderer(layout, p, (1024, 1024))
        white = np.ones((1024, 1024))
        fa = renderer.render(white, (420, 470))
        fb = renderer.render(white, (610, 520))
        assert np.array_equal(fa, fb)
        # Each lit blob peaks at the layout-predicted screen position.
        ppd = p.frame_size / (2.0 * p.field_radius_deg)
        c = (p.frame_size - 1) / 2.0
        peaks = np.argwhere(
            (fa == ndimage.maximum_filter(fa, 5)) & (fa > 0.5))
        ex = c + layout.x_deg * ppd
        ey = c + layout.y_deg * ppd
        for py, px in peaks:
            d = np.hypot(ex - px, ey - py)
            assert d.min() <= 1.5

    def test_brighter_stimulus_brighter_frame(self, setup):
        _, _, renderer = setup
        rng = np.random.default_rng(3)
        dim = rng.random((1024, 1024)) * 0.4
        bright = np.clip(dim + 0.3, 0.0, 1.0)
        fd = renderer.render(dim, (512, 512))
        fb = renderer.render(bright, (512, 512))
        assert np.all(fb >= fd - 1e-12)

    def test_zero_current_black(self):
        p = SimParams(current_ua=0.0)
        layout = sample_layout(p, seed=4)
        frame = PhospheneRenderer(layout, p, (256, 256)).render(
            np.ones((256, 256)), (128, 128))
        assert frame.max() == 0.0

    def test_layout_params_mismatch(self):
        layout = sample_layout(SimParams(n_electrodes=100), seed=0)
        with pytest.raises(ValueError):
            PhospheneRenderer(layout, SimParams(n_electrodes=200), (64, 64))

    def test_stimulus_shape_mismatch(self, setup):
        _, _, renderer = setup
        with pytest.raises(ValueError):
            renderer.render(np.zeros((100, 100)), (50, 50))

    def test_render_frame_wrapper(self):
        p = SimParams(n_electrodes=50)
        layout = sample_layout(p, seed=8)
        stim = np.ones((256, 256))
        a = render_frame(stim, (128, 128), layout, p)
        b = PhospheneRenderer(layout, p, (256, 256)).render(stim, (128, 128))
        assert np.array_equal(a, b)
        with pytest.raises(ValueError):
            render_frame(np.zeros((4, 4, 3)), (0, 0), layout, p)


class TestParamsValidation:
    def test_rejects_bad_values(self):
        for kwargs in (
            {"n_electrodes": 0},
            {"field_radius_deg": -1.0},
            {"current_ua": -5.0},
            {"excitability": 0.0},
            {"frame_size": 0},
            {"magnification_a": 0.0},
        ):
            with pytest.raises(ValueError):
                SimParams(**kwargs)
