"""Shared fixtures: hand-built models with known outputs and tiny oracles."""

import numpy as np
import pytest

from ikdlab.mlp import MlpParams, _SHAPES


def build_identity_model() -> MlpParams:
    """Network computing exactly av for any (v, av) input.

    Layer 1 splits av into relu(av) and relu(-av); layer 2 passes both
    through (they are non-negative, so ReLU is the identity on them); the
    head recombines them as relu(av) - relu(-av) = av.  Exact in floats.
    """
    W1 = np.zeros(_SHAPES["W1"])
    W1[0, 1] = 1.0
    W1[1, 1] = -1.0
    W2 = np.zeros(_SHAPES["W2"])
    W2[0, 0] = 1.0
    W2[1, 1] = 1.0
    W3 = np.zeros(_SHAPES["W3"])
    W3[0, 0] = 1.0
    W3[0, 1] = -1.0
    return MlpParams(W1=W1, b1=np.zeros(_SHAPES["b1"]),
                     W2=W2, b2=np.zeros(_SHAPES["b2"]),
                     W3=W3, b3=np.zeros(_SHAPES["b3"]))


def build_gain_model(gain: float) -> MlpParams:
    """Network computing gain * av (identity model with a scaled head)."""
    p = build_identity_model()
    return MlpParams(W1=p.W1, b1=p.b1, W2=p.W2, b2=p.b2,
                     W3=gain * p.W3, b3=p.b3)


def build_constant_model(value: float) -> MlpParams:
    """Network whose output is a constant, independent of the input."""
    vals = {n: np.zeros(_SHAPES[n]) for n in _SHAPES}
    vals["b3"] = np.array([float(value)])
    return MlpParams(**vals)


def kasa_radius(points) -> float:
    """Independent algebraic circle fit used as a test oracle."""
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    A = np.column_stack([2.0 * x, 2.0 * y, np.ones_like(x)])
    sol, *_ = np.linalg.lstsq(A, x * x + y * y, rcond=None)
    a, b, k = sol
    return float(np.sqrt(k + a * a + b * b))


@pytest.fixture
def identity_model() -> MlpParams:
    return build_identity_model()
