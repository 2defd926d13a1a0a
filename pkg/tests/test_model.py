import numpy as np
import pytest

from canet import checkpoint
from canet.errors import CheckpointError, ConfigError
from canet.model import CANet, ExternalProj, ModelConfig, RawStats, denormalize, external_style, instance_normalize, param_reduction
from canet.tensor import Tensor


def tiny(**kw):
    base = dict(look_back=16, horizon=4, channels=2, patch_sizes=[4, 8], embed_dim=8, dropout=0.0, precision=64)
    base.update(kw)
    return ModelConfig(**base)


def test_output_shape(rng):
    m = CANet(tiny())
    assert m(rng.standard_normal((3, 2, 16))).shape == (3, 2, 4)


def test_default_config_shape(rng):
    m = CANet(ModelConfig(channels=3))
    y = m(rng.standard_normal((2, 3, 96)))
    assert y.shape == (2, 3, 24) and y.dtype == np.float32


def test_input_shape_checked(rng):
    with pytest.raises(ConfigError):
        CANet(tiny())(rng.standard_normal((3, 2, 15)))


def test_minimal_pipeline(rng):
    cfg = tiny(use_asb=False, use_icb=False, use_mrp=False, norm_kind="layer", patch_sizes=[16])
    m = CANet(cfg)
    assert m.features(rng.standard_normal((2, 2, 16)))[0].shape == (2, 2, 4)
    assert not any(".asb." in k or ".icb." in k for k in m.named_parameters())


@pytest.mark.parametrize(
    "flag,fragment",
    [("use_asb", ".asb."), ("use_icb", ".icb."), ("use_blending_gate", ".gate."), ("use_blending_gate", ".external.")],
)
def test_ablation_removes_parameters(flag, fragment):
    full = CANet(tiny()).named_parameters()
    cut = CANet(tiny(**{flag: False})).named_parameters()
    assert any(fragment in k for k in full)
    assert not any(fragment in k for k in cut)


def test_without_mrp_uses_one_fixed_patch():
    cfg = tiny(use_mrp=False, look_back=32)
    assert cfg.patches == [16]
    assert len(CANet(cfg).layers) == 1


def test_baseline_norm_drops_style_projection():
    names = CANet(tiny(norm_kind="batch")).named_parameters()
    assert not any(k.endswith("w_style") for k in names)
    assert "layers.0.norm.gamma" in names


def test_scale_shift_contrast(rng):
    x = rng.standard_normal((3, 2, 16))
    x2 = 2 * x + 5
    nsan = CANet(tiny(seed=4))
    a, b = nsan.features(x)[0].data, nsan.features(x2)[0].data
    assert np.abs(a - b).max() > 1e-6
    inst = CANet(tiny(seed=4, norm_kind="instance"))
    a, b = inst.features(x)[0].data, inst.features(x2)[0].data
    assert np.abs(a - b).max() < 1e-6


def test_denormalize_roundtrip(rng):
    x = Tensor(rng.standard_normal((2, 3, 10)) * 7 + 3)
    z, raw = instance_normalize(x)
    np.testing.assert_allclose(denormalize(z, raw).data, x.data, atol=1e-12)
    np.testing.assert_allclose(z.data.mean(axis=2), 0, atol=1e-12)


def test_constant_window_is_finite():
    m = CANet(tiny())
    y = m(np.full((1, 2, 16), 4.0)).data
    assert np.isfinite(y).all()
    z, raw = instance_normalize(Tensor(np.full((1, 1, 8), 4.0)))
    assert not z.data.any()
    assert raw.sigma.data[0, 0] == pytest.approx(1e-5)


class TestExternalStyle:
    def test_shape_and_positive_sigma(self, rng):
        raw = RawStats(Tensor(rng.standard_normal((2, 3))), Tensor(rng.random((2, 3)) + 0.1))
        s = external_style(raw, ExternalProj.init(5, rng))
        assert s.mu.shape == (6, 1, 5)
        assert (s.sigma.data > 0).all()

    def test_affine_in_mu(self, rng):
        p = ExternalProj.init(4, rng)
        raw = RawStats(Tensor(np.array([[2.0]])), Tensor(np.array([[1.0]])))
        s = external_style(raw, p)
        np.testing.assert_allclose(s.mu.data.ravel(), 2 * p.mu_w.data + p.mu_b.data)
        np.testing.assert_allclose(s.sigma.data.ravel(), np.log1p(np.exp(p.sigma_w.data + p.sigma_b.data)) + 1e-8)


def test_seed_determinism(rng):
    x = rng.standard_normal((2, 2, 16))
    np.testing.assert_array_equal(CANet(tiny(seed=7))(x).data, CANet(tiny(seed=7))(x).data)
    assert not np.array_equal(CANet(tiny(seed=7))(x).data, CANet(tiny(seed=8))(x).data)


def test_head_is_smaller_than_dense():
    cfg = ModelConfig()
    assert 0 < param_reduction(cfg) < 1
    m = CANet(cfg)
    assert sum(t.size for t in m.head.named().values()) < m.dense_head_param_count()


def test_config_validation():
    with pytest.raises(ConfigError):
        ModelConfig(patch_sizes=[200])
    with pytest.raises(ConfigError):
        ModelConfig(norm_kind="group")
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({"lookback": 3})
    assert ModelConfig.from_dict(ModelConfig().to_dict()) == ModelConfig()


class TestCheckpoint:
    def test_roundtrip_bytes_identical(self, tmp_path):
        m = CANet(ModelConfig(channels=2, look_back=32, horizon=8, patch_sizes=[8, 16], embed_dim=8))
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        checkpoint.save(m, p1)
        checkpoint.save(checkpoint.load(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_float32_forward_exact(self, tmp_path, rng):
        m = CANet(ModelConfig(channels=2, look_back=32, horizon=8, patch_sizes=[8, 16], embed_dim=8))
        checkpoint.save(m, tmp_path / "m.ckpt")
        x = rng.standard_normal((3, 2, 32))
        np.testing.assert_array_equal(m(x).data, checkpoint.load(tmp_path / "m.ckpt")(x).data)

    def test_batch_norm_buffers_saved(self, tmp_path, rng):
        m = CANet(tiny(norm_kind="batch", precision=32))
        m.forward(rng.standard_normal((4, 2, 16)), training=True)
        checkpoint.save(m, tmp_path / "b.ckpt")
        back = checkpoint.load(tmp_path / "b.ckpt")
        for k, v in m.named_buffers().items():
            np.testing.assert_array_equal(back.named_buffers()[k], v)

    def test_config_mismatch(self, tmp_path):
        checkpoint.save(CANet(tiny(precision=32)), tmp_path / "m.ckpt")
        with pytest.raises(CheckpointError):
            checkpoint.load(tmp_path / "m.ckpt", config=tiny(precision=32, embed_dim=16))

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.ckpt"
        p.write_bytes(b"NOTCKPT" + bytes(20))
        with pytest.raises(CheckpointError):
            checkpoint.load(p)

    def test_truncated(self, tmp_path):
        blob = checkpoint.dumps(CANet(tiny(precision=32)))
        p = tmp_path / "t.ckpt"
        p.write_bytes(blob[:-7])
        with pytest.raises(CheckpointError):
            checkpoint.load(p)

    def test_trailing_bytes(self, tmp_path):
        p = tmp_path / "t.ckpt"
        p.write_bytes(checkpoint.dumps(CANet(tiny(precision=32))) + b"\0")
        with pytest.raises(CheckpointError):
            checkpoint.load(p)
