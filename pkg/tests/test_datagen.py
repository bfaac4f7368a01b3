import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sapg.datagen import InstanceSpec, gen_instance, load_instance, objective_for, save_instance
from sapg.smoothing import CensoredAffineLoss, L1AffineLoss


def test_table_cell_sparsity():
    inst = gen_instance(InstanceSpec(150, 300, 0.2, seed=1))
    assert np.sum(inst.x_true == 0) == 240
    assert np.sum(inst.x_true != 0) == 60
    nz = inst.x_true[inst.x_true != 0]
    assert nz.min() > 0 and nz.max() < 1


def test_same_seed_bit_identical():
    a = gen_instance(InstanceSpec(20, 50, 0.3, seed=99))
    b = gen_instance(InstanceSpec(20, 50, 0.3, seed=99))
    assert a.A.tobytes() == b.A.tobytes() and a.b.tobytes() == b.b.tobytes()
    assert a.x_true.tobytes() == b.x_true.tobytes()
    c = gen_instance(InstanceSpec(20, 50, 0.3, seed=100))
    assert c.A.tobytes() != a.A.tobytes()


def test_linear_reconstruction_identity():
    inst = gen_instance(InstanceSpec(30, 60, 0.5, seed=2))
    assert np.abs(inst.A @ inst.x_true - (inst.b - inst.noise)).max() <= 1e-14
    assert inst.noise.min() >= 0 and inst.noise.max() < 0.01


def test_orthonormal_rows():
    inst = gen_instance(InstanceSpec(30, 60, 0.5, seed=2))
    assert np.abs(inst.A @ inst.A.T - np.eye(30)).max() <= 1e-10


def test_censored_orthonormal_columns_and_clipping():
    inst = gen_instance(InstanceSpec(100, 20, 0.3, seed=4, kind="censored"))
    assert inst.A.shape == (100, 20)
    assert np.abs(inst.A.T @ inst.A - np.eye(20)).max() <= 1e-10
    assert inst.b.min() >= 0
    assert np.array_equal(inst.b, np.maximum(inst.A @ inst.x_true + inst.noise, 0))


@pytest.mark.parametrize("spec", [
    InstanceSpec(0, 5, 0.2),
    InstanceSpec(5, 10, 0.0),
    InstanceSpec(5, 10, 1.5),
    InstanceSpec(5, 10, 0.01),
    InstanceSpec(20, 10, 0.2),
    InstanceSpec(5, 10, 0.2, kind="quantile"),
])
def test_invalid_specs(spec):
    with pytest.raises(ValueError):
        gen_instance(spec)


@given(n=st.integers(1, 400), spar=st.floats(0.01, 1.0), seed=st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_sparsity_exact_and_shuffle_is_permutation(n, spar, seed):
    spec = InstanceSpec(1, n, spar, seed)
    if spec.s < 1:
        return
    inst = gen_instance(spec)
    assert np.count_nonzero(inst.x_true) == spec.s
    # replay the draws up to the shuffle
    r = np.random.default_rng(seed)
    r.standard_normal((1, n))
    before = r.uniform(0.0, 1.0, n)
    before[: n - spec.s] = 0.0
    assert np.array_equal(np.sort(before), np.sort(inst.x_true))


def test_rounding_ties_up():
    assert InstanceSpec(1, 10, 0.25).s == 3
    assert InstanceSpec(1, 300, 0.3).s == 90


def test_objective_binding():
    lin = objective_for(gen_instance(InstanceSpec(10, 20, 0.2)))
    assert isinstance(lin.loss, L1AffineLoss)
    assert lin.reg.lam == 0.01 and lin.reg.variant == "scaled_l1"
    assert np.all(lin.reg.box.lower == 0.0) and np.all(lin.reg.box.upper == 1.0)
    cen = objective_for(gen_instance(InstanceSpec(30, 10, 0.2, kind="censored")))
    assert isinstance(cen.loss, CensoredAffineLoss)


def test_save_load_roundtrip(tmp_path):
    inst = gen_instance(InstanceSpec(8, 12, 0.5, seed=3))
    save_instance(inst, tmp_path)
    assert {p.name for p in tmp_path.iterdir()} >= {"A.csv", "b.csv", "x_true.csv", "spec.json"}
    back = load_instance(tmp_path)
    assert back.spec == inst.spec
    assert np.array_equal(back.A, inst.A) and np.array_equal(back.b, inst.b)
    assert np.array_equal(back.x_true, inst.x_true)
