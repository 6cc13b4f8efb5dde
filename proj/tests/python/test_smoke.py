import math
import os
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

import sanet


def reference_conv(x, w, stride, padding, dilation):
    n, cin, h, wi = x.shape
    cout, _, kh, kw = w.shape
    sh, sw = stride
    ph, pw = padding
    dh, dw = dilation
    oh = (h + 2 * ph - dh * (kh - 1) - 1) // sh + 1
    ow = (wi + 2 * pw - dw * (kw - 1) - 1) // sw + 1
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw))).astype(np.float64)
    out = np.zeros((n, cout, oh, ow))
    for oy in range(oh):
        for ox in range(ow):
            patch = xp[:, :, oy * sh : oy * sh + dh * (kh - 1) + 1 : dh,
                       ox * sw : ox * sw + dw * (kw - 1) + 1 : dw]
            out[:, :, oy, ox] = np.einsum("nchw,ochw->no", patch, w.astype(np.float64))
    return out


def test_conv2d_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (2, 3, 8, 9)).astype(np.float32)
    w = rng.uniform(-1, 1, (4, 3, 3, 3)).astype(np.float32)
    got = sanet.conv2d(x, w, stride=(2, 1), padding=(1, 2), dilation=(1, 2))
    want = reference_conv(x, w, (2, 1), (1, 2), (1, 2))
    assert got.shape == want.shape
    np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-5)

    ref = sanet.conv2d(x, w, stride=(2, 1), padding=(1, 2), dilation=(1, 2), reference=True)
    np.testing.assert_allclose(got, ref, rtol=1e-5, atol=1e-6)


def test_conv2d_bias_and_errors():
    x = np.ones((1, 2, 4, 4), dtype=np.float32)
    w = np.zeros((3, 2, 1, 1), dtype=np.float32)
    b = np.array([1.5, -0.5, 0.0], dtype=np.float32)
    out = sanet.conv2d(x, w, bias=b)
    assert out.shape == (1, 3, 4, 4)
    assert np.allclose(out[0, 0], 1.5) and np.allclose(out[0, 1], -0.5)

    with pytest.raises(ValueError):
        sanet.conv2d(x, np.zeros((3, 5, 1, 1), dtype=np.float32))


def test_pooling_and_resize():
    x = np.arange(16, dtype=np.float32).reshape(1, 1, 4, 4)
    pooled = sanet.adaptive_avg_pool2d(x, 1, 1)
    assert pooled.shape == (1, 1, 1, 1)
    assert math.isclose(pooled[0, 0, 0, 0], x.mean(), rel_tol=1e-6)

    avg = sanet.avg_pool2d(x, kernel=(2, 2), stride=(2, 2))
    np.testing.assert_allclose(avg[0, 0], [[2.5, 4.5], [10.5, 12.5]], rtol=1e-6)

    same = sanet.bilinear_resize(x, 4, 4)
    np.testing.assert_array_equal(same, x)
    up = sanet.bilinear_resize(x, 8, 8)
    assert up.shape == (1, 1, 8, 8)
    assert up.min() >= x.min() - 1e-6 and up.max() <= x.max() + 1e-6


def test_softmax_argmax():
    rng = np.random.default_rng(1)
    x = rng.uniform(-5, 5, (1, 6, 3, 4)).astype(np.float32)
    p = sanet.softmax(x)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-5)
    np.testing.assert_array_equal(sanet.argmax(x), x[0].argmax(axis=0).astype(np.int32))


def test_receptive_field_and_impulse():
    assert sanet.receptive_field([(3, 3, 1, 1, 1, 1)]) == (3, 3)
    assert sanet.receptive_field([(3, 3, 1, 1, 1, 1), (3, 3, 1, 1, 1, 1)]) == (5, 5)
    chain = [(3, 1, 2, 1, 1, 1), (3, 3, 1, 1, 2, 2)]
    rh, rw = sanet.receptive_field(chain)
    assert sanet.impulse_support_span(chain, False) == rh
    assert sanet.impulse_support_span(chain, True) == rw


def test_losses_and_schedule():
    logits = np.zeros((1, 4, 2, 2), dtype=np.float32)
    labels = np.full((2, 2), 2, dtype=np.int32)
    assert math.isclose(sanet.cross_entropy(logits, labels), math.log(4.0), rel_tol=1e-9)

    pred = np.zeros((4, 4), dtype=np.int32)
    lab = np.zeros((4, 4), dtype=np.int32)
    lab[2:] = 1
    pred[1:3] = 1
    r = sanet.miou(pred, lab, 2)
    assert math.isclose(r["mean"], 1.0 / 3.0, rel_tol=1e-12)
    assert r["present"] == [True, True]

    assert math.isclose(sanet.poly_lr(0.01, 500, 1000, 0.9), 0.005358867312681466, abs_tol=1e-12)


def test_model_forward_deterministic():
    m = sanet.Model.random("s", 5, seed=11)
    assert m.variant == "S"
    assert m.num_classes == 5
    img = np.random.default_rng(2).uniform(0, 1, (1, 3, 64, 64)).astype(np.float32)
    a = m.forward(img)
    b = m.forward(img)
    assert a.shape == (1, 5, 64, 64)
    np.testing.assert_array_equal(a, b)

    pred = m.predict(img)
    np.testing.assert_array_equal(pred, a[0].argmax(axis=0).astype(np.int32))

    prob = m.infer(img, scales=[1.0])
    np.testing.assert_array_equal(prob[0].argmax(axis=0).astype(np.int32), pred)


def test_model_fold_keeps_outputs():
    m = sanet.Model.random("s", 4, seed=3)
    img = np.random.default_rng(4).uniform(0, 1, (1, 3, 64, 64)).astype(np.float32)
    before = m.forward(img)
    m.fold()
    assert m.folded
    after = m.forward(img)
    assert np.abs(before - after).max() <= 1e-4


def test_model_param_count_frozen():
    assert sanet.Model.random("s", 19, seed=1).param_count == 7442119


def test_save_load_round_trip(tmp_path):
    path = str(tmp_path / "weights.stf")
    sanet.export_random(path, variant="s", num_classes=4, seed=9)
    m = sanet.Model.load(path)
    assert m.num_classes == 4
    same = sanet.Model.random("s", 4, seed=9)
    img = np.random.default_rng(5).uniform(0, 1, (1, 3, 64, 64)).astype(np.float32)
    np.testing.assert_array_equal(m.forward(img), same.forward(img))

    with pytest.raises(ValueError):
        sanet.Model.load(str(tmp_path / "missing.stf"))


def test_describe_and_selftest():
    text = sanet.Model.random("s", 19, seed=1).describe(256, 512)
    assert "stem" in text and "l6" in text
    ok, lines = sanet.selftest(seed=5)
    assert ok
    assert len(lines) >= 5


def cli_path():
    exe = os.environ.get("SANET_BIN")
    if exe and Path(exe).exists():
        return exe
    found = shutil.which("sanet")
    return found


cli_missing = cli_path() is None


@pytest.mark.skipif(cli_missing, reason="sanet binary not found (set SANET_BIN)")
def test_cli_round_trip(tmp_path):
    exe = cli_path()
    weights = str(tmp_path / "w.stf")
    run = subprocess.run([exe, "export-random", "--seed", "1", "--out", weights,
                          "--variant", "s", "--classes", "4"], capture_output=True, text=True)
    assert run.returncode == 0, run.stderr

    img = tmp_path / "in.ppm"
    rng = np.random.default_rng(6)
    pixels = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
    img.write_bytes(b"P6\n64 64\n255\n" + pixels.tobytes())

    seg = tmp_path / "seg.ppm"
    run = subprocess.run([exe, "infer", "--weights", weights, "--image", str(img),
                          "--out", str(seg), "--classes", "4"], capture_output=True, text=True)
    assert run.returncode == 0, run.stderr
    assert seg.read_bytes().startswith(b"P6")

    run = subprocess.run([exe, "selftest"], capture_output=True, text=True)
    assert run.returncode == 0
    assert "ok" in run.stdout

    run = subprocess.run([exe, "describe", "--variant", "s", "--size", "256x512"],
                         capture_output=True, text=True)
    assert run.returncode == 0
    assert "l6" in run.stdout

    run = subprocess.run([exe, "bench", "--weights", weights, "--size", "64x64",
                          "--iters", "3", "--warmup", "1"], capture_output=True, text=True)
    assert run.returncode == 0
    assert "mean_ms" in run.stdout

    run = subprocess.run([exe, "infer", "--weights", weights], capture_output=True, text=True)
    assert run.returncode == 1
