"""End-to-end invariant classification pipelines on synthetic data.

These mirror the image experiments that normally run on scanned digits:
lift, construct an invariant network, build the shifted feature bank, and
classify with nearest subspaces. Class templates are random patterns and
every sample is a randomly shifted noisy copy, so success requires genuine
shift invariance, not memorized alignment.
"""

import numpy as np

from redunet import (
    Membership,
    accuracy,
    augment_shifts,
    construct_inv1d,
    construct_inv2d,
    fit_nsc,
    forward_inv1d,
    forward_inv2d,
    lift_random_filters_1d,
    lift_random_filters_2d,
    normalize_samples_time,
    polar_resample,
    predict_nsc,
)


def _shifted_class_samples_1d(rng, templates, per_class, noise):
    X, labels = [], []
    k, T = templates.shape
    for j in range(k):
        for _ in range(per_class):
            shift = int(rng.integers(T))
            X.append(np.roll(templates[j] + noise * rng.standard_normal(T), shift))
            labels.append(j)
    return np.array(X), np.array(labels)


def test_shift_invariant_classification_1d():
    rng = np.random.default_rng(0)
    k, T = 3, 32
    templates = rng.standard_normal((k, T))
    X, labels = _shifted_class_samples_1d(rng, templates, per_class=10, noise=0.05)
    Pi = Membership.from_labels(labels, k=k)

    lifted = normalize_samples_time(lift_random_filters_1d(X, C=6, K=5, seed=1))
    model, Z_out, curve = construct_inv1d(lifted, Pi, L=10, eta=0.5, eps=0.1)
    assert curve[-1][2] > curve[0][2]  # the objective actually moved

    bank, _ = augment_shifts(Z_out, labels, stride=8, kind="1d")
    flat = bank.reshape(bank.shape[0], -1).T
    copies = bank.shape[0] // Z_out.shape[0]
    bank_labels = np.repeat(labels, copies)
    clf = fit_nsc(flat, bank_labels, r=10)
    assert accuracy(predict_nsc(clf, flat), bank_labels) >= 0.95

    # fresh shifted samples classify correctly through the stored network
    X_new, labels_new = _shifted_class_samples_1d(rng, templates, per_class=5,
                                                  noise=0.05)
    lifted_new = normalize_samples_time(lift_random_filters_1d(X_new, C=6, K=5, seed=1))
    Z_new = forward_inv1d(model, lifted_new)
    pred = predict_nsc(clf, Z_new.reshape(Z_new.shape[0], -1).T)
    assert accuracy(pred, labels_new) >= 0.9


def test_translation_invariant_classification_2d():
    rng = np.random.default_rng(1)
    k, H, W = 3, 8, 8
    templates = rng.standard_normal((k, H, W))
    X, labels = [], []
    for j in range(k):
        for _ in range(8):
            p, q = rng.integers(H), rng.integers(W)
            noisy = templates[j] + 0.05 * rng.standard_normal((H, W))
            X.append(np.roll(noisy, (p, q), axis=(0, 1)))
            labels.append(j)
    X, labels = np.array(X), np.array(labels)
    Pi = Membership.from_labels(labels, k=k)

    lifted = normalize_samples_time(lift_random_filters_2d(X, C=12, K=3, seed=2))
    model, Z_out, _ = construct_inv2d(lifted, Pi, L=15, eta=0.5, eps=0.1)

    bank, _ = augment_shifts(Z_out, labels, stride=2, kind="2d")
    flat = bank.reshape(bank.shape[0], -1).T
    copies = bank.shape[0] // Z_out.shape[0]
    bank_labels = np.repeat(labels, copies)
    clf = fit_nsc(flat, bank_labels, r=15)
    assert accuracy(predict_nsc(clf, flat), bank_labels) >= 0.95

    X_new, labels_new = [], []
    for j in range(k):
        for _ in range(4):
            p, q = rng.integers(H), rng.integers(W)
            noisy = templates[j] + 0.05 * rng.standard_normal((H, W))
            X_new.append(np.roll(noisy, (p, q), axis=(0, 1)))
            labels_new.append(j)
    lifted_new = normalize_samples_time(
        lift_random_filters_2d(np.array(X_new), C=12, K=3, seed=2)
    )
    Z_new = forward_inv2d(model, lifted_new)
    pred = predict_nsc(clf, Z_new.reshape(Z_new.shape[0], -1).T)
    assert accuracy(pred, np.array(labels_new)) >= 0.9


def test_rotation_invariant_pipeline_via_polar_resampling():
    # rotations about the image center become cyclic shifts after polar
    # resampling, so the 1D invariant network handles rotated inputs
    rng = np.random.default_rng(2)
    H = W = 33
    cy = cx = (H - 1) / 2
    yy, xx = np.mgrid[0:H, 0:W]
    radius = np.hypot(yy - cy, xx - cx)
    theta = np.arctan2(yy - cy, xx - cx)
    Gamma, C = 24, 4

    def make_image(freq, phase):
        return np.exp(-radius / 8) * np.cos(freq * theta + phase)

    X, labels = [], []
    freqs = [2, 3, 5]
    for j, freq in enumerate(freqs):
        for _ in range(6):
            phase = rng.uniform(0, 2 * np.pi)  # a random rotation of the class
            X.append(polar_resample(make_image(freq, phase), Gamma, C))
            labels.append(j)
    X, labels = np.array(X), np.array(labels)
    Pi = Membership.from_labels(labels, k=3)

    lifted = normalize_samples_time(lift_random_filters_1d(X, C=6, K=5, seed=3))
    model, Z_out, _ = construct_inv1d(lifted, Pi, L=10, eta=0.5, eps=0.1)

    bank, _ = augment_shifts(Z_out, labels, stride=6, kind="1d")
    flat = bank.reshape(bank.shape[0], -1).T
    copies = bank.shape[0] // Z_out.shape[0]
    bank_labels = np.repeat(labels, copies)
    clf = fit_nsc(flat, bank_labels, r=8)
    assert accuracy(predict_nsc(clf, flat), bank_labels) >= 0.9
