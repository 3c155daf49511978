import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlinsrm import ansatz as ans
from qlinsrm.errors import InvalidInputError, SchemaError
from qlinsrm.qcore import pauli_matrix
from scipy.linalg import expm

seeds = st.integers(0, 2**32 - 1)

SPECS = [
    ans.BlockControlled(1, 1),
    ans.BlockControlled(2, 1),
    ans.BlockControlled(1, 2, blocks=(1,)),
    ans.PauliProduct(("ZZ",)),
    ans.PauliProduct(("XY", "ZI")),
    ans.PauliProduct(("XIZ", "YYI")),
    ans.PermSymmetric.alternating((2,), 2),
    ans.PermSymmetric.alternating((1, 2), 3),
    ans.PermSymmetric.alternating((2, 2), 2),
    ans.HardwareEfficient(2, 2),
    ans.HardwareEfficient(3, 1),
]


def _theta(spec, seed):
    return np.random.default_rng(seed).uniform(0, 2 * np.pi, spec.parameter_count)


class TestUnitary:
    def test_pauli_identity_at_zero(self):
        assert np.allclose(ans.unitary(ans.PauliProduct(("Z",)), [0.0]), np.eye(2))

    def test_pauli_x_quarter_turn(self):
        w = ans.unitary(ans.PauliProduct(("X",)), [np.pi / 2])
        assert np.allclose(w, expm(1j * np.pi / 2 * pauli_matrix("X")), atol=1e-12)
        assert np.allclose(w, 1j * pauli_matrix("X"), atol=1e-12)

    @given(seeds)
    def test_pauli_product_matches_expm(self, seed):
        spec = ans.PauliProduct(("XIZ", "YYI", "ZXY"))
        th = _theta(spec, seed)
        ref = np.eye(8)
        for t, p in zip(th, spec.paulis):
            ref = expm(1j * t * pauli_matrix(p)) @ ref
        assert np.allclose(ans.unitary(spec, th), ref, atol=1e-12)

    def test_block_identity_blocks(self):
        # with no active block every theta gives the identity
        spec = ans.BlockControlled(1, 1, blocks=())
        assert spec.parameter_count == 0
        assert np.allclose(ans.unitary(spec, []), np.eye(4))

    @given(seeds)
    def test_block_structure(self, seed):
        spec = ans.BlockControlled(2, 1)
        w = ans.unitary(spec, _theta(spec, seed))
        mask = np.kron(np.eye(4), np.ones((2, 2)))
        assert np.allclose(w * (1 - mask), 0)

    @given(seeds)
    def test_perm_symmetric_commutes_with_swaps(self, seed):
        # a 2-qubit partition is invariant under swapping its qubits
        spec = ans.PermSymmetric.alternating((2, 1), 3)
        w = ans.unitary(spec, _theta(spec, seed))
        swap = np.zeros((4, 4))
        for i in range(2):
            for j in range(2):
                swap[2 * j + i, 2 * i + j] = 1
        s = np.kron(swap, np.eye(2))
        assert np.allclose(s @ w @ s.T, w, atol=1e-12)

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.variant)
    def test_is_unitary(self, spec):
        for seed in range(5):
            w = ans.unitary(spec, _theta(spec, seed))
            assert np.linalg.norm(w.conj().T @ w - np.eye(w.shape[0])) <= 1e-10

    def test_parameter_count_checked(self):
        with pytest.raises(InvalidInputError):
            ans.unitary(ans.PauliProduct(("Z",)), [0.1, 0.2])


class TestRBound:
    def test_examples(self):
        assert ans.r_bound(ans.BlockControlled(2, 1), 2) == 2
        assert ans.r_bound(ans.PauliProduct(("XZ", "ZY")), 1) == 4  # 16 capped at 2^n
        assert ans.r_bound(ans.PauliProduct(("XZIZY", "ZYIXX")), 1) == 16
        assert ans.r_bound(ans.PermSymmetric.alternating((2, 3), 1), 1) == 12
        assert ans.r_bound(ans.HardwareEfficient(3, 1), 1) == 8

    def test_block_needs_multiple_of_block_size(self):
        with pytest.raises(InvalidInputError):
            ans.r_bound(ans.BlockControlled(2, 1), 3)

    def test_l_range(self):
        with pytest.raises(InvalidInputError):
            ans.r_bound(ans.PauliProduct(("Z",)), 3)


class TestSpanEstimate:
    def test_single_sample_single_column(self):
        for spec in SPECS:
            assert ans.column_span_dim_estimate(spec, 1, 1) == 1

    def test_zz_rotation(self):
        assert ans.column_span_dim_estimate(ans.PauliProduct(("ZZ",)), 1, 50) <= 4

    def test_hardware_efficient_full(self):
        assert ans.column_span_dim_estimate(ans.HardwareEfficient(2, 2), 1, 200) == 4

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.variant)
    def test_never_exceeds_bound(self, spec):
        step = 2**spec.t if isinstance(spec, ans.BlockControlled) else 1
        for l in range(step, 2**spec.n_qubits + 1, step):
            assert ans.column_span_dim_estimate(spec, l, 40, seed=l) <= ans.r_bound(spec, l)

    def test_deterministic_and_monotone(self):
        spec = ans.PermSymmetric.alternating((1, 2), 2)
        a = [ans.column_span_dim_estimate(spec, 1, s, seed=3) for s in (1, 2, 5, 20)]
        assert a == sorted(a)
        assert a == [ans.column_span_dim_estimate(spec, 1, s, seed=3) for s in (1, 2, 5, 20)]
        b = [ans.column_span_dim_estimate(spec, l, 10, seed=3) for l in range(1, 9)]
        assert b == sorted(b)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.variant)
def test_json_roundtrip(spec):
    assert ans.from_json(ans.to_json(spec)) == spec


def test_schema_errors():
    with pytest.raises(SchemaError):
        ans.PauliProduct(("XQ",))
    with pytest.raises(SchemaError):
        ans.from_json({"variant": "nope"})
    with pytest.raises(SchemaError):
        ans.from_json({"variant": "pauli-product"})
