import numpy as np
import pytest

from dipunwrap import nn
from dipunwrap.core import WeightBounds, wrap
from dipunwrap.io import read_grid
from dipunwrap.metrics import rsnr
from dipunwrap.nn import Tensor
from dipunwrap.pudip import (
    CornerMeanSubtract,
    GeneratorConfig,
    MinSubtract,
    NumericalError,
    TrainConfig,
    build_generator,
    desk_profile,
    local_std,
    pudip_loss,
    remove_background,
    sample_input,
    segment_threshold,
    unwrap_pudip,
)

TINY = GeneratorConfig(input_channels=4, stages=1, body_channels=8, skip_channels=4)


class TestGenerator:
    def test_output_shape(self):
        net = build_generator(TINY, 16, 16, seed=0)
        z = sample_input(0, 4, *net.padded)
        assert net(z).shape == (1, 16, 16)

    @pytest.mark.parametrize("h,w", [(20, 12), (13, 17)])
    def test_padding_crops_back(self, h, w):
        cfg = GeneratorConfig(input_channels=2, stages=2, body_channels=4, skip_channels=2)
        net = build_generator(cfg, h, w)
        ph, pw = net.padded
        assert ph % 4 == 0 and pw % 4 == 0 and ph >= h and pw >= w
        assert net(sample_input(1, 2, ph, pw)).shape == (1, h, w)

    def test_wrong_input_shape(self):
        net = build_generator(TINY, 16, 16)
        with pytest.raises(ValueError):
            net(sample_input(0, 4, 8, 8))

    def test_min_subtract(self):
        net = build_generator(TINY, 16, 16, seed=3)
        out = net(sample_input(3, 4, 16, 16)).data
        assert out.min() == 0.0

    def test_corner_mean_subtract(self):
        cfg = GeneratorConfig(4, 2, 8, 4, CornerMeanSubtract(30, 30))
        net = build_generator(cfg, 40, 44, seed=1)
        out = net(sample_input(1, 4, *net.padded)).data[0]
        assert abs(out[:30, :30].mean()) < 1e-9

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GeneratorConfig(stages=0)
        with pytest.raises(ValueError):
            CornerMeanSubtract(0, 3)

    def test_layer_sequence(self):
        net = build_generator(GeneratorConfig(4, 2, 8, 4), 16, 16)
        names = [n for n, _ in net.named_parameters()]
        assert sum(n.endswith("weight") for n in names) == 2 * 2 + 2 + 2 * 2 + 1  # 3x3 convs, skips, head
        shapes = dict((n, p.shape) for n, p in net.named_parameters())
        assert any(s == (4, 8, 1, 1) for s in shapes.values())  # skip branch to 4 channels
        assert any(s == (1, 8, 1, 1) for s in shapes.values())  # head

    def test_full_gradient_check(self):
        net = build_generator(GeneratorConfig(2, 2, 3, 2), 8, 8, seed=5)
        z = sample_input(5, 2, 8, 8)
        psi = wrap(np.random.default_rng(0).uniform(-3, 3, (8, 8)))
        w = np.random.default_rng(1).uniform(0.1, 1, (8, 8))
        params = net.parameters()

        def loss_value():
            return float(pudip_loss(net(z), psi, w, 1e-6).data)

        nn.backward(pudip_loss(net(z), psi, w, 1e-6))
        rng = np.random.default_rng(9)
        for p in params:
            ana = p.grad.copy()
            flat = p.data.reshape(-1)
            for idx in rng.choice(flat.size, size=min(3, flat.size), replace=False):
                old = flat[idx]
                flat[idx] = old + 1e-5
                fp = loss_value()
                flat[idx] = old - 1e-5
                fm = loss_value()
                flat[idx] = old
                num = (fp - fm) / 2e-5
                a = ana.reshape(-1)[idx]
                assert abs(a - num) <= max(1e-3 * max(abs(a), abs(num)), 1e-6)


class TestInput:
    def test_deterministic_and_range(self):
        a, b = sample_input(7, 3, 8, 8), sample_input(7, 3, 8, 8)
        assert np.array_equal(a.data, b.data)
        assert a.data.min() >= 0 and a.data.max() < 0.1
        assert not np.array_equal(a.data, sample_input(8, 3, 8, 8).data)

    def test_mean(self):
        m = sample_input(0, 1, 1000, 1000).data.mean()
        assert 0.0495 <= m <= 0.0505


class TestLoss:
    def test_direct_value(self):
        out = Tensor(np.array([[[0.0, 1.0]]]))
        assert float(pudip_loss(out, np.zeros((1, 2)), np.ones((1, 2)), 0.0).data) == 1.0

    def test_zero_weights(self, rng):
        out = Tensor(rng.normal(size=(1, 5, 5)))
        assert float(pudip_loss(out, np.zeros((5, 5)), np.zeros((5, 5))).data) == 0.0

    def test_exact_unwrap(self):
        y, x = np.mgrid[:10, :10]
        phi = 0.8 * x + 0.5 * y
        w = np.ones_like(phi)
        loss = float(pudip_loss(Tensor(phi[None]), wrap(phi), w, 1e-18).data)
        # only the smoothing floor sum(w) * sqrt(delta) remains
        assert loss == pytest.approx(w.sum() * 1e-9, rel=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            pudip_loss(Tensor(np.zeros((1, 3, 3))), np.zeros((3, 4)), np.ones((3, 4)))


class TestTrainConfig:
    def test_refresh_not_beyond_iterations(self):
        with pytest.raises(ValueError):
            TrainConfig(iterations=10, refresh_every=20)

    def test_positive(self):
        with pytest.raises(ValueError):
            TrainConfig(lr=0)


class TestRun:
    def test_short_run_contract(self, tmp_path, rng):
        psi = wrap(rng.uniform(-3, 3, (16, 16)))
        tcfg = TrainConfig(iterations=12, refresh_every=4, seed=2)
        seen = []
        phi, rep = unwrap_pudip(psi, TINY, tcfg, callback=lambda i, loss, out: seen.append(i))
        assert len(rep.losses) == 12 and seen == list(range(12))
        assert np.max(np.abs(wrap(phi) - psi)) < 1e-9
        assert rep.seed == 2 and rep.config["train"]["refresh_every"] == 4
        rep.save(tmp_path)
        assert read_grid(tmp_path / "phi_tilde.phz").tobytes() == phi.tobytes()
        assert len((tmp_path / "losses.txt").read_text().splitlines()) == 12

    def test_deterministic(self, rng):
        psi = wrap(rng.uniform(-3, 3, (16, 16)))
        a, ra = unwrap_pudip(psi, TINY, TrainConfig(iterations=8, refresh_every=4, seed=1))
        b, rb = unwrap_pudip(psi, TINY, TrainConfig(iterations=8, refresh_every=4, seed=1))
        assert a.tobytes() == b.tobytes() and ra.losses == rb.losses

    def test_divergence_reported(self, rng):
        psi = wrap(rng.uniform(-3, 3, (16, 16)))
        with pytest.raises(NumericalError), np.errstate(all="ignore"):
            unwrap_pudip(psi, TINY, TrainConfig(iterations=30, refresh_every=10, lr=1e200))

    def test_loss_decreases(self):
        y, x = np.mgrid[:32, :32]
        truth = 6 * np.exp(-((x - 16) ** 2 + (y - 16) ** 2) / 80.0)
        _, rep = unwrap_pudip(wrap(truth), GeneratorConfig(8, 2, 8, 4), TrainConfig(iterations=60, refresh_every=60))
        assert rep.losses[-1] < 0.5 * rep.losses[0]

    @pytest.mark.slow
    def test_smooth_input_recovered(self):
        # no wraps at all: the generator only has to reproduce a smooth surface
        y, x = np.mgrid[:64, :64]
        truth = 2.5 * np.exp(-((x - 30) ** 2 / 300.0 + (y - 34) ** 2 / 200.0))
        gcfg, tcfg = desk_profile(iterations=300, seed=0)
        phi, _ = unwrap_pudip(wrap(truth), gcfg, tcfg)
        assert rsnr(phi, truth).value_db > 30


class TestPostprocess:
    def _poly(self, h=40, w=50):
        y, x = np.meshgrid(np.linspace(-1, 1, h), np.linspace(-1, 1, w), indexing="ij")
        return 0.2 + 0.3 * x - 0.1 * y + 0.05 * x * y + 0.02 * x**3 - 0.04 * y**2 * x

    def test_polynomial_removed(self):
        out = remove_background(self._poly(), 0.5)
        assert np.max(np.abs(out)) < 1e-6

    def test_constant(self):
        assert np.max(np.abs(remove_background(np.full((10, 10), 3.3), 0.7))) < 1e-9

    def test_bump_kept(self):
        bg = self._poly()
        y, x = np.mgrid[:40, :50]
        bump = 8.0 * np.exp(-((x - 25) ** 2 + (y - 20) ** 2) / 8.0)
        bump[bump < 0.5] = 0
        phi = bg + bump
        assert np.all(local_std(phi)[bump > 1.0] >= 0.5)  # bump core excluded from the fit
        out = remove_background(phi, 0.5)
        core = bump > 1.0
        np.testing.assert_allclose(out[core], bump[core], atol=0.05)

    def test_errors(self, rng):
        with pytest.raises(ValueError):
            remove_background(np.zeros((2, 5)), 0.5)
        with pytest.raises(ValueError):
            remove_background(np.zeros((5, 5)), 1.5)
        with pytest.raises(ValueError):
            remove_background(rng.uniform(-100, 100, (6, 6)), 0.5)  # nothing flat enough

    def test_local_std_oracle(self, rng):
        a = rng.normal(size=(6, 7))
        padded = np.pad(a, 1, mode="symmetric")
        ref = np.array([[padded[i : i + 3, j : j + 3].std() for j in range(7)] for i in range(6)])
        np.testing.assert_allclose(local_std(a), ref, atol=1e-12)

    def test_threshold(self):
        assert np.all(segment_threshold(np.full((3, 3), 4.0)) == 1)
        phi = np.array([[0.0, 1.0, 2.0], [3.0, 10.0, 1.99]])
        np.testing.assert_array_equal(segment_threshold(phi), phi >= 2)
        assert np.all(segment_threshold(np.zeros((2, 2))) == 1)
        with pytest.raises(ValueError):
            segment_threshold(phi, 1.0)
