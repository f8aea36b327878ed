import math

import numpy as np
import pytest

from streamkm.core import InvalidInputError, kmeans_error
from streamkm.driftgen import (BaseDataSpec, ConceptPool, DriftCalibrationError, DriftStream,
                               DriftStreamSpec, drift_translate, gen_base, initial_alpha, load_csv,
                               random_unit_vector, read_stream, write_stream)
from streamkm.rng import Xorshift64Star


def test_gen_base_single_component():
    X = gen_base(BaseDataSpec(d=2, n=100, k_true=1), Xorshift64Star(3))
    assert X.shape == (100, 2)
    # the component mean is the only cluster; unit variance around it
    assert np.all(np.abs(X.std(axis=0) - 1) < 0.3)


def test_gen_base_deterministic():
    spec = BaseDataSpec(d=3, n=50, k_true=2)
    np.testing.assert_array_equal(gen_base(spec, Xorshift64Star(1)), gen_base(spec, Xorshift64Star(1)))


def test_load_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b,c\n1,2,3\n4,5,6\n")
    assert load_csv(p, header=True).shape == (2, 3)
    p.write_text("1,2,3\n4,x,6\n")
    with pytest.raises(InvalidInputError, match=":2:"):
        load_csv(p)
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(InvalidInputError, match=":2:"):
        load_csv(p)


def test_random_unit_vector():
    g = Xorshift64Star(9)
    assert abs(random_unit_vector(1, g)[0]) == 1.0
    vs = np.array([random_unit_vector(3, g) for _ in range(10000)])
    assert np.allclose(np.linalg.norm(vs, axis=1), 1, atol=1e-12)
    assert np.linalg.norm(vs.mean(axis=0)) < 0.05


@pytest.mark.parametrize("eps,E,K,n,want", [(1, 100, 2, 50, 1.0), (0, 5, 3, 10, 0.0), (4, 25, 1, 100, 1.0)])
def test_initial_alpha(eps, E, K, n, want):
    assert initial_alpha(eps, E, K, n) == pytest.approx(want)


def test_translate_one_dimensional():
    pool = ConceptPool(np.array([[-1.0], [1.0]]), 0, np.array([[0.0]]))
    new, rep = drift_translate(pool, 3.0, Xorshift64Star(0))
    E = kmeans_error(new.points, pool.reference_centroids)
    assert 0.95 * 4 <= E <= 1.05 * 4
    assert 0.95 * 4 <= rep.ratio <= 1.05 * 4
    assert new.concept_id == 1


def test_translate_rejects_nonpositive_eps():
    pool = ConceptPool(np.array([[-1.0], [1.0]]), 0, np.array([[0.0]]))
    with pytest.raises(InvalidInputError):
        drift_translate(pool, 0.0, Xorshift64Star(0))


def test_translate_calibration_failure_reports_best():
    pool = ConceptPool(np.array([[-1.0], [1.0]]), 0, np.array([[0.0]]))
    with pytest.raises(DriftCalibrationError) as exc:
        drift_translate(pool, 3.0, Xorshift64Star(0), max_iterations=0)
    assert math.isnan(exc.value.best_ratio) or exc.value.best_ratio > 0


def test_gaussian_calibration_many_seeds():
    for seed in range(20):
        spec = DriftStreamSpec(BaseDataSpec(d=5, n=2000, k_true=5, seed=seed), epsilon=1.0,
                               batch_size=100, drift_period=2, k_cluster=5, seed=seed)
        s = DriftStream(spec)
        s.take(7)
        assert len(s.drifts) == 3
        for r in s.drifts:
            assert 0.95 * 2 <= r.ratio <= 1.05 * 2
            assert r.iterations <= 50


def test_concept_ids_follow_period():
    spec = DriftStreamSpec(BaseDataSpec(n=600, k_true=3), batch_size=50, drift_period=4, k_cluster=3)
    ids = [c for _, c in DriftStream(spec).take(13)]
    assert ids == [0] * 4 + [1] * 4 + [2] * 4 + [3]


def test_streams_are_deterministic():
    spec = DriftStreamSpec(BaseDataSpec(n=600, k_true=3), batch_size=50, drift_period=3, k_cluster=3, seed=4)
    a, b = DriftStream(spec).take(7), DriftStream(spec).take(7)
    for (x, cx), (y, cy) in zip(a, b):
        np.testing.assert_array_equal(x, y)
        assert cx == cy


def test_spec_validation_lists_every_error():
    spec = DriftStreamSpec(BaseDataSpec(n=10), epsilon=0, batch_size=30, k_cluster=50)
    errs = spec.validate()
    assert len(errs) >= 3
    with pytest.raises(InvalidInputError):
        DriftStream(spec)


def test_stream_dump_round_trip(tmp_path):
    spec = DriftStreamSpec(BaseDataSpec(n=300, k_true=2), batch_size=20, drift_period=2, k_cluster=2)
    batches = DriftStream(spec).take(5)
    p = tmp_path / "s.csv"
    write_stream(p, batches, d=2, N=20, period=2, epsilon=1.0, seed=0)
    meta, back = read_stream(p)
    assert meta == {"d": 2, "N": 20, "period": 2, "epsilon": 1.0, "seed": 0}
    for (x, cx), (y, cy) in zip(batches, back):
        np.testing.assert_array_equal(x, y)
        assert cx == cy


def test_read_stream_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("hello\n")
    with pytest.raises(InvalidInputError, match=":1:"):
        read_stream(p)
    p.write_text("# skm-stream v1, d=2, N=1, period=1, epsilon=1, seed=0\n0,0,1.0\n")
    with pytest.raises(InvalidInputError, match=":2:"):
        read_stream(p)
