"""Dense network construction, replay, and the RNM1 container."""

import numpy as np
import pytest

from redunet import (
    BadMagicError,
    DataError,
    Membership,
    NumericError,
    TruncatedFileError,
    VersionError,
    construct,
    estimate_membership,
    forward,
    layer_increment,
    load_model,
    save_model,
    sphere_project,
)


def _toy_problem(seed=0, n=4, k=3, per_class=5):
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, k * per_class))
    Z /= np.linalg.norm(Z, axis=0)
    labels = np.repeat(np.arange(k), per_class)
    return Z, Membership.from_labels(labels, k=k)


def test_construct_reports_loss_curve_per_layer():
    Z, Pi = _toy_problem()
    model, Z_out, curve = construct(Z, Pi, L=4, eta=0.5, eps=0.3)
    assert model.depth == 4
    assert len(curve) == 4
    for R, Rc, dR in curve:
        assert dR == pytest.approx(R - Rc)
    # entry 0 describes the raw input, before any update
    from redunet import rate_reduction

    assert curve[0] == pytest.approx(rate_reduction(Z, Pi, 0.3))


def test_forward_replays_construction_exactly():
    Z, Pi = _toy_problem(seed=1)
    model, Z_out, _ = construct(Z, Pi, L=6, eta=0.5, eps=0.3)
    np.testing.assert_array_equal(forward(model, Z), Z_out)


def test_construct_gradient_diagnostic_passes():
    Z, Pi = _toy_problem(seed=2)
    construct(Z, Pi, L=3, eta=0.1, eps=0.5, check_gradient=True)


def test_output_columns_stay_on_sphere():
    Z, Pi = _toy_problem(seed=3)
    _, Z_out, _ = construct(Z, Pi, L=5, eta=1.0, eps=0.2)
    np.testing.assert_allclose(np.linalg.norm(Z_out, axis=0), 1.0, atol=1e-12)


def test_construct_rejects_unnormalized_input():
    Z, Pi = _toy_problem()
    with pytest.raises(DataError):
        construct(2.0 * Z, Pi, L=1, eta=0.5, eps=0.3)


def test_construct_requires_at_least_one_layer():
    Z, Pi = _toy_problem()
    with pytest.raises(DataError):
        construct(Z, Pi, L=0, eta=0.5, eps=0.3)


def test_estimated_membership_is_a_distribution():
    Z, Pi = _toy_problem(seed=4)
    model, _, _ = construct(Z, Pi, L=1, eta=0.5, eps=0.3)
    pi = estimate_membership(Z[:, 0], model.layers[0], model.lam)
    assert pi.shape == (Pi.k,)
    assert pi.min() >= 0
    assert pi.sum() == pytest.approx(1.0)


def test_zero_temperature_membership_is_uniform():
    Z, Pi = _toy_problem(seed=5)
    model, _, _ = construct(Z, Pi, L=1, eta=0.5, eps=0.3)
    pi = estimate_membership(Z[:, 0], model.layers[0], 0.0)
    np.testing.assert_allclose(pi, 1.0 / Pi.k)


def test_single_vector_increment_matches_batch():
    Z, Pi = _toy_problem(seed=6)
    model, _, _ = construct(Z, Pi, L=1, eta=0.5, eps=0.3)
    inc = layer_increment(Z[:, 2], model.layers[0], model.lam)
    assert inc.shape == (Z.shape[0],)


def test_sphere_project():
    v = sphere_project(np.array([3.0, 4.0]))
    np.testing.assert_allclose(v, [0.6, 0.8])
    with pytest.raises(NumericError):
        sphere_project(np.zeros(2))


def test_forward_rejects_wrong_width():
    Z, Pi = _toy_problem()
    model, _, _ = construct(Z, Pi, L=1, eta=0.5, eps=0.3)
    from redunet import ShapeError

    with pytest.raises(ShapeError):
        forward(model, np.ones((Z.shape[0] + 1, 2)))


def test_model_round_trip_is_exact(tmp_path):
    Z, Pi = _toy_problem(seed=7)
    model, _, _ = construct(Z, Pi, L=3, eta=0.5, eps=0.3)
    path = tmp_path / "model.rnm"
    save_model(path, model)
    back = load_model(path)
    assert back.depth == model.depth
    assert (back.eta, back.lam, back.eps) == (model.eta, model.lam, model.eps)
    for la, lb in zip(model.layers, back.layers):
        np.testing.assert_array_equal(la.E, lb.E)
        np.testing.assert_array_equal(la.gamma_j, lb.gamma_j)
        for Ca, Cb in zip(la.C, lb.C):
            np.testing.assert_array_equal(Ca, Cb)
    # saving the loaded model again is byte-identical
    path2 = tmp_path / "model2.rnm"
    save_model(path2, back)
    assert path.read_bytes() == path2.read_bytes()


def test_model_file_size_is_predictable(tmp_path):
    # header 44 bytes + k gammas + L * (1 + k) * n * n doubles
    Z, Pi = _toy_problem(seed=8, n=3, k=3, per_class=4)
    model, _, _ = construct(Z, Pi, L=2, eta=0.5, eps=0.3)
    path = tmp_path / "model.rnm"
    save_model(path, model)
    assert path.stat().st_size == 44 + 8 * 3 + 2 * (1 + 3) * 3 * 3 * 8 == 644


def test_model_load_failures(tmp_path):
    Z, Pi = _toy_problem(seed=9)
    model, _, _ = construct(Z, Pi, L=1, eta=0.5, eps=0.3)
    path = tmp_path / "model.rnm"
    save_model(path, model)
    blob = path.read_bytes()

    bad = tmp_path / "bad.rnm"
    bad.write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(BadMagicError):
        load_model(bad)

    bad.write_bytes(blob[:4] + b"\x09\x00\x00\x00" + blob[8:])
    with pytest.raises(VersionError):
        load_model(bad)

    bad.write_bytes(blob[:-16])
    with pytest.raises(TruncatedFileError):
        load_model(bad)
