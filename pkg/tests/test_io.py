import json

import numpy as np
import pytest

from fisheripm import io, nn
from fisheripm.errors import MalformedCsv
from fisheripm.metrics import MetricsRecord


def test_params_roundtrip_bit_exact(tmp_path):
    spec = nn.mlp(3, [5, 4], 2)
    p = nn.init(spec, 7, 0.3)
    p.flat[0] = -0.0
    p.flat[1] = 1e-310
    path = tmp_path / "g.fipm"
    io.save_params(path, p, spec)
    back, spec2 = io.load_params(path)
    assert spec2 == spec
    assert back.flat.tobytes() == p.flat.tobytes()
    assert [(n, s) for n, s, *_ in back.layout] == [(n, s) for n, s, *_ in p.layout]


def test_params_without_spec():
    p = nn.init(nn.mlp(2, [3], 1), 0, 0.1)
    back, spec = io.params_from_bytes(io.params_to_bytes(p))
    assert spec is None and back == p


@pytest.mark.parametrize("mutate", [
    lambda b: b"XXXXXXXX" + b[8:],
    lambda b: b[:20],
    lambda b: b[:-8],
])
def test_params_corrupt_blob_rejected(mutate):
    p = nn.init(nn.mlp(2, [3], 1), 0, 0.1)
    with pytest.raises(ValueError):
        io.params_from_bytes(mutate(io.params_to_bytes(p)))


def _records():
    return [MetricsRecord(1, 0.1, 0.9, 0.0, 0.05, None, None, 1.5),
            MetricsRecord(2, 0.2, 1.1, -0.25, 0.1, 0.3, 1.7, 2.0)]


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "m.csv"
    io.write_metrics_csv(path, _records())
    assert path.read_text().splitlines()[0] == \
        "iter,e_hat,omega_hat,lambda,loss,chi2_oracle,chi2_kde_proxy,wall_ms"
    assert io.read_metrics_csv(path) == _records()


@pytest.mark.parametrize("text", [
    "",
    "iter,e_hat\n1,2\n",
    "iter,e_hat,omega_hat,lambda,loss,chi2_oracle,chi2_kde_proxy,wall_ms\n",
    "iter,e_hat,omega_hat,lambda,loss,chi2_oracle,chi2_kde_proxy,wall_ms\n1,x,1,0,0,,,0\n",
    "iter,e_hat,omega_hat,lambda,loss,chi2_oracle,chi2_kde_proxy,wall_ms\n1,1,1\n",
    "iter,e_hat,omega_hat,lambda,loss,chi2_oracle,chi2_kde_proxy,wall_ms\n1,1,,0,0,,,0\n",
])
def test_csv_malformed(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(MalformedCsv):
        io.read_metrics_csv(path)


def test_csv_missing_file(tmp_path):
    with pytest.raises(MalformedCsv):
        io.read_metrics_csv(tmp_path / "nope.csv")


def test_manifest_contents(tmp_path):
    out = tmp_path / "a.txt"
    out.write_text("x")
    path = io.write_manifest(tmp_path, "toy_gan", {"lr": 1e-4, "arr": np.arange(2)}, [0, 1], [out])
    m = json.loads(path.read_text())
    assert m["experiment"] == "toy_gan" and m["seeds"] == [0, 1]
    assert m["config"] == {"lr": 1e-4, "arr": [0, 1]}
    assert "PCG64" in m["rng"]
    assert "git_revision" in m and m["numpy"] == np.__version__
    assert m["formats"] == {"params": 1, "metrics_csv": 1, "manifest": 1}
    assert m["outputs"] == ["a.txt"]


def test_output_root_env(monkeypatch, tmp_path):
    monkeypatch.setenv("FISHERIPM_OUTPUT", str(tmp_path))
    assert io.output_root() == tmp_path
    monkeypatch.delenv("FISHERIPM_OUTPUT")
    assert str(io.output_root()) == "runs"
