import json

import numpy as np
import pytest

import srcount


def test_steering_and_frame():
    a = srcount.steering_vector(4, 30.0)
    assert a.shape == (4,)
    assert np.allclose(np.abs(a), 1.0)
    assert np.isclose(a[1], 1j)
    x = srcount.sample_frame(6, [-20.0, 35.0], snapshots=128, seed=3, noiseless=True)
    assert x.shape == (6, 128)
    e = srcount.eigvalsh(srcount.autocorrelation(x))
    assert np.sum(np.asarray(e) > 1e-8 * e[0]) == 2


def test_fbss_restores_rank():
    x = srcount.sample_frame(8, [-20.0, 25.0], coherent=[(0, 0.8, 1.0)], seed=4, noiseless=True)
    r = srcount.autocorrelation(x)
    assert np.sum(np.asarray(srcount.eigvalsh(r)) > 1e-8 * srcount.eigvalsh(r)[0]) == 1
    rf = srcount.fbss(r, 5)
    assert rf.shape == (5, 5)
    ef = np.asarray(srcount.eigvalsh(rf))
    assert np.sum(ef > 1e-8 * ef[0]) == 2


def test_features_and_criteria():
    f = np.asarray(srcount.extract_features(np.eye(10, dtype=complex)))
    assert f.shape == (110,)
    assert np.isclose(np.linalg.norm(f), 1.0)
    assert int(np.argmin(srcount.mdl([10, 1, 1, 1, 1], 1000))) == 1
    assert int(np.argmin(srcount.aic([1.0] * 6, 100))) == 0
    with pytest.raises(srcount.DomainError):
        srcount.mdl([1.0, 2.0], 10)


def test_classical_detection():
    x = srcount.sample_frame(10, [-30.0, 0.0, 40.0], sinr_db=20.0, seed=9)
    assert srcount.detect_classical(x, "mdl") == 3


def test_generate_and_evaluate():
    x, total, nc = srcount.generate(10, [0, 1, 2], 60, seed=2)
    assert x.shape == (60, 110) and x.dtype == np.float32
    assert np.allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-5)
    assert set(total.tolist()) <= {0, 1, 2}
    again, _, _ = srcount.generate(10, [0, 1, 2], 60, seed=2)
    assert np.array_equal(x, again)
    r = srcount.evaluate(total.tolist(), total.tolist(), 3)
    assert r["accuracy"] == 1.0
    assert r["confusion"].shape == (3, 3)
    xf, _, _ = srcount.generate(10, [0, 1], 4, coherent=[0, 1], fbss=5)
    assert xf.shape == (4, 30)


def test_cli_train_and_model(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "seed": 3,
        "scenario": {"classes": [0, 1, 2]},
        "dataset": {"train": 48, "val": 16, "test": 16},
        "model": {"num_classes": 3},
        "train": {"epochs": 1, "batch_size": 16},
    }))
    code, _, err = srcount.run_cli(["generate", "--config", str(cfg), "--out", str(tmp_path / "t.sds")])
    assert code == 0, err
    code, _, err = srcount.run_cli(["train", "--config", str(cfg), "--train", str(tmp_path / "t.sds"),
                                    "--out", str(tmp_path / "m.sck")])
    assert code == 0, err
    model = srcount.Model.load(str(tmp_path / "m.sck"))
    assert model.input_width == 110 and model.num_classes == 3
    assert model.architecture == "cnndetector"
    feats, labels, _ = srcount.load_dataset(str(tmp_path / "t.sds"))
    pred = model.predict(feats)
    assert pred.shape == (48,) and pred.max() < 3
    assert model.logits(feats[:2]).shape == (2, 3)
    frame = srcount.sample_frame(10, [10.0], seed=1)
    assert 0 <= model.detect(frame) < 3
    with pytest.raises(srcount.DataError):
        model.predict(np.zeros((2, 30), dtype=np.float32))
    code, _, _ = srcount.run_cli(["eval", "--baseline", "mdl", "--data", str(tmp_path / "missing.sds"),
                                  "--out", str(tmp_path / "r")])
    assert code == 3
