import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geomlab.sigma import (
    ProjectorField, builtin_fixtures, cubic_identity_residual, decomposition_residual, energy,
    harmonic_residual, holomorphy_classify, nilpotency_order, sigma_report, stress_holomorphy,
    topological_charge, veronese_frame,
)
from geomlab.tensor_core import GridField

BOX = ((-1.0, 1.0), (-1.0, 1.0))


def chart(fn, m=32, box=BOX, **kw):
    return ProjectorField.from_chart(lambda z, w: np.asarray(fn(np.asarray(z), np.asarray(w)))[..., None, None],
                                     box, (m, m), **kw)


def gridded(f):
    # same samples, no closure: finite-difference derivatives
    return ProjectorField(f.box, f.shape, f.values)


def random_unitary(rng, N):
    Q, R = np.linalg.qr(rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def test_field_validation():
    with pytest.raises(ValueError):
        ProjectorField(BOX, (8, 8), np.zeros((8, 8, 2, 2)) + np.eye(2) * 0.5)
    with pytest.raises(ValueError):
        ProjectorField.constant(np.diag([1.0, 0.0]), shape=(3, 3))
    # a jump between neighbours is rejected
    V = np.broadcast_to(np.diag([1.0, 0.0]), (8, 8, 2, 2)).copy()
    V[4:] = np.diag([0.0, 1.0])
    with pytest.raises(ValueError):
        ProjectorField(BOX, (8, 8), V)


def test_constant_field():
    f = ProjectorField.constant(np.diag([1.0, 0.0, 0.0]))
    assert harmonic_residual(f) == 0
    c = holomorphy_classify(f)
    assert c.label == "holomorphic" and c.degenerate
    assert stress_holomorphy(f).value == 0
    assert topological_charge(f).value == 0


def test_holomorphic_cp1_harmonic():
    f = chart(lambda z, w: z, m=128)
    assert harmonic_residual(f) < 1e-10
    res = [harmonic_residual(gridded(chart(lambda z, w: z, m=m))) for m in (64, 128)]
    assert res[1] < 1e-3
    assert res[0] / res[1] > 3.5


def test_nonharmonic_witness():
    f = chart(lambda z, w: z + 0.3 * w ** 2, m=64)
    assert harmonic_residual(f) > 0.01
    assert holomorphy_classify(f).label == "neither"
    assert stress_holomorphy(f).value > 1e-2
    assert not stress_holomorphy(f).precondition_ok


@pytest.mark.parametrize("analytic", [True, False])
def test_classification(analytic):
    conv = (lambda f: f) if analytic else gridded
    assert holomorphy_classify(conv(chart(lambda z, w: z, m=64))).label == "holomorphic"
    assert holomorphy_classify(conv(chart(lambda z, w: w, m=64))).label == "antiholomorphic"
    v = conv(ProjectorField.from_frame(veronese_frame(1), BOX, (64, 64)))
    assert holomorphy_classify(v).label == "neither"


def test_veronese_sequence_ends():
    assert holomorphy_classify(ProjectorField.from_frame(veronese_frame(0), BOX, (32, 32))).label == "holomorphic"
    assert holomorphy_classify(ProjectorField.from_frame(veronese_frame(2), BOX, (32, 32))).label == "antiholomorphic"


def test_cp2_middle_map_is_harmonic():
    v = ProjectorField.from_frame(veronese_frame(1), BOX, (64, 64))
    assert harmonic_residual(v) < 1e-10
    assert harmonic_residual(gridded(ProjectorField.from_frame(veronese_frame(1), BOX, (128, 128)))) < 1e-3


def test_stress_holomorphy():
    v = ProjectorField.from_frame(veronese_frame(1), BOX, (128, 128))
    assert stress_holomorphy(v).value < 1e-10
    assert stress_holomorphy(v, trace_differences=True).value < 1e-3
    h = chart(lambda z, w: z, m=128)
    assert stress_holomorphy(h, trace_differences=True).value < 1e-3


@pytest.mark.parametrize("direction", [(0.5, -0.5j), (1.0, 0.0), (0.3 + 0.1j, -0.7)])
@pytest.mark.parametrize("fn", [lambda z, w: z, lambda z, w: z + 0.3 * w ** 2, lambda z, w: np.sin(z) * w])
def test_cubic_identity(direction, fn):
    assert cubic_identity_residual(chart(fn, m=24), direction) < 1e-9


def test_cubic_identity_on_cp2():
    v = ProjectorField.from_frame(veronese_frame(1), BOX, (24, 24))
    assert cubic_identity_residual(v) < 1e-9


def test_cubic_identity_rejects_rank_two():
    Z = lambda z, w: np.stack([np.stack([np.asarray(z), 0 * np.asarray(z)], -1),
                               np.stack([0 * np.asarray(w), np.asarray(w)], -1)], -2)
    f = ProjectorField.from_chart(Z, BOX, (16, 16))
    assert f.p == 2
    with pytest.raises(ValueError):
        cubic_identity_residual(f)


def test_nilpotency_orders():
    assert nilpotency_order(chart(lambda z, w: z, m=32)) == 2
    assert nilpotency_order(ProjectorField.from_frame(veronese_frame(1), BOX, (32, 32))) == 3
    # generic non-harmonic rank-one field in CP^2
    def frame(z, w):
        z, w = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex))
        return np.stack([np.ones_like(z), z + w ** 2, np.sin(w) + 0.5 * z ** 2], -1)[..., None]
    assert nilpotency_order(ProjectorField.from_frame(frame, BOX, (32, 32))) == 4


def test_rank_two_holomorphic_field():
    Z = lambda z, w: np.stack([np.stack([np.asarray(z), np.asarray(z) ** 2], -1),
                               np.stack([1 + 0 * np.asarray(z), np.asarray(z) ** 3], -1)], -2)
    f = ProjectorField.from_chart(Z, BOX, (24, 24))
    assert holomorphy_classify(f).label == "holomorphic"
    assert harmonic_residual(f) < 1e-10
    assert nilpotency_order(f) <= 2 * f.p + 1


@pytest.mark.parametrize("k,R", [(1, 16.0), (2, 8.0)])
def test_topological_charge_degree(k, R):
    f = chart(lambda z, w: z ** k, m=128, box=((-R, R), (-R, R)))
    q = topological_charge(f)
    assert abs(q.value - k) < 0.02
    # Bogomolny bound saturated for holomorphic maps
    assert np.isclose(energy(f), 2 * np.pi * abs(q.value), rtol=1e-9)


def test_topological_charge_converges_with_radius():
    q8 = topological_charge(chart(lambda z, w: z, m=96, box=((-8, 8), (-8, 8))))
    q16 = topological_charge(chart(lambda z, w: z, m=192, box=((-16, 16), (-16, 16))))
    assert abs(q16.value - 1) < abs(q8.value - 1)
    assert not q8.boundary_ok and q16.boundary_ok


def test_energy_bounds_charge_for_nonholomorphic():
    f = chart(lambda z, w: z + 0.3 * w ** 2, m=64, box=((-2, 2), (-2, 2)))
    assert energy(f) > 2 * np.pi * abs(topological_charge(f).value)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    U = random_unitary(rng, 3)
    for f in (ProjectorField.from_frame(veronese_frame(1), BOX, (16, 16)),
              gridded(ProjectorField.from_frame(veronese_frame(0), BOX, (16, 16)))):
        g = f.conjugated(U)
        c1, c2 = holomorphy_classify(f), holomorphy_classify(g)
        assert c1.label == c2.label
        assert abs(c1.holomorphic_residual - c2.holomorphic_residual) < 1e-12
        assert abs(harmonic_residual(f) - harmonic_residual(g)) < 1e-12


def test_conjugation_duality():
    for f in (chart(lambda z, w: z ** 2), gridded(chart(lambda z, w: z ** 2))):
        assert holomorphy_classify(f).label == "holomorphic"
        assert holomorphy_classify(f.complex_conjugate()).label == "antiholomorphic"
        assert holomorphy_classify(f.complex_conjugate().complex_conjugate()).label == "holomorphic"


@pytest.mark.parametrize("fn", [lambda z, w: z, lambda z, w: z + 0.3 * w ** 2, lambda z, w: np.exp(z) * w])
def test_derivative_splits_off_diagonal(fn):
    assert decomposition_residual(chart(fn, m=24)) < 1e-9


def test_json_roundtrip_and_report():
    f = chart(lambda z, w: z, m=16)
    g = ProjectorField.from_grid_field(GridField.from_json(f.to_grid_field().to_json()))
    assert np.array_equal(g.values, f.values)
    rep = sigma_report(f, "cp1").to_dict()
    assert rep["classification"] == "holomorphic" and rep["nilpotency_order"] == 2
    assert list(rep) == ["name", "harmonic_residual", "classification", "degenerate", "energy",
                         "topological_charge", "boundary_ok", "nilpotency_order", "stress"]


def test_builtin_fixture_labels():
    fx = builtin_fixtures(32)
    labels = {k: holomorphy_classify(f).label for k, f in fx.items()}
    assert labels["cp1-holomorphic"] == "holomorphic"
    assert labels["cp1-antiholomorphic"] == "antiholomorphic"
    assert labels["cp1-nonharmonic"] == "neither"
    assert labels["cp2-veronese-middle"] == "neither"
