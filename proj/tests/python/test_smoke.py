import math
from pathlib import Path

import numpy as np
import pytest

import tracesum

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_interval_gram():
    for d in (0.1, 1.0, 10.0):
        expected = d * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
        assert np.allclose(tracesum.gram_interval(0.0, d), expected, rtol=1e-12, atol=0)


def test_mode_grams():
    assert tracesum.gram_flat(2) == pytest.approx(0.25, rel=1e-14)
    # Small alpha approaches the flat value.
    assert tracesum.gram_grushin(5, 1e-9) == pytest.approx(0.1, abs=1e-6)


@pytest.mark.parametrize("alpha", [-0.5, -2.0, -8.0])
def test_single_delta(alpha):
    roots = tracesum.delta_spectrum([0.0], [alpha])
    assert len(roots) == 1
    assert roots[0]["E"] == pytest.approx(-alpha * alpha / 4, abs=1e-10)


def test_two_deltas_match_oracle():
    krein = sorted(r["E"] for r in tracesum.delta_spectrum([0.0, 2.0], [-2.0, -2.0]))
    oracle = tracesum.oracle_spectrum([0.0, 2.0], [-2.0, -2.0])
    assert len(krein) == 2
    assert np.allclose(krein, oracle, atol=1e-10, rtol=0)
    regularized = sorted(
        r["E"] for r in tracesum.delta_spectrum([0.0, 2.0], [-2.0, -2.0], representation="regularized")
    )
    assert np.allclose(krein, regularized, atol=1e-10, rtol=0)


def test_delta_prime():
    roots = tracesum.delta_prime_spectrum([0.0], [-1.0])
    assert [r["E"] for r in roots] == pytest.approx([-4.0], abs=1e-10)
    assert tracesum.oracle_spectrum([0.0], [-1.0], kind="delta_prime") == pytest.approx([-4.0], abs=1e-10)


def test_wall():
    krein = sorted(r["E"] for r in tracesum.delta_spectrum([0.0], [-2.0], wall=1.0))
    kappa = math.sqrt(-krein[0])
    assert kappa / math.tanh(kappa) + kappa == pytest.approx(2.0, abs=1e-10)


def test_cli_round_trip():
    status, report = tracesum.run_json("eigs", CONFIGS / "single_delta.yaml")
    assert status == 0
    assert report["source"] == "krein"
    assert report["roots"][0]["E"] == pytest.approx(-1.0, abs=1e-10)
    status, out, _ = tracesum.run(["oracle-compare", "--config", str(CONFIGS / "delta_lattice.yaml"), "--format", "csv"])
    assert status == 0
    assert out.rstrip().endswith("result=pass")


def test_errors():
    with pytest.raises(tracesum.TracesumError, match="InvalidSpec"):
        tracesum.gram_grushin(1, 2.0)
    with pytest.raises(tracesum.TracesumError, match="SearchFailure"):
        tracesum.delta_spectrum([0.0], [-2.0], z_min=-1.0)
    status, _, err = tracesum.run(["eigs", "--config", "/nonexistent.yaml"])
    assert status == 1
    assert "cannot open" in err
