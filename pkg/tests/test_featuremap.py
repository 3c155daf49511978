import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlinsrm.errors import DimensionError, InvalidInputError, SchemaError
from qlinsrm.featuremap import (
    FeatureMapSpec,
    density,
    dump_jsonl_dataset,
    encode,
    kernel,
    kernel_matrix,
    load_jsonl_dataset,
)
from qlinsrm.qcore import frobenius_inner

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
Zm = np.diag([1.0, -1.0])


def _kron(*ms):
    out = np.eye(1)
    for m in ms:
        out = np.kron(out, m)
    return out


def _iqp_reference(x, n, reps=1):
    # explicit dense circuit: (phase . H^n)^reps |0...0>
    xs = np.zeros(n)
    xs[: len(x)] = x
    gen = np.zeros((2**n, 2**n))
    for i in range(n):
        gen += xs[i] * _kron(*[Zm if q == i else np.eye(2) for q in range(n)])
        for j in range(i + 1, n):
            gen += xs[i] * xs[j] * _kron(*[Zm if q in (i, j) else np.eye(2) for q in range(n)])
    ph = np.diag(np.exp(1j * np.diag(gen)))
    hn = _kron(*[H] * n)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    for _ in range(reps):
        psi = ph @ hn @ psi
    return psi


kinds = st.sampled_from(["product-angle", "iqp-phase", "raw-amplitude"])
angles = st.floats(-np.pi, np.pi, allow_nan=False)


@st.composite
def spec_and_points(draw, count=2):
    kind = draw(kinds)
    n = draw(st.integers(1, 3))
    dim = n if kind != "raw-amplitude" else 2**n
    l = draw(st.integers(1, dim))
    spec = FeatureMapSpec(kind, n, l)
    pts = []
    for _ in range(count):
        x = np.array(draw(st.lists(angles, min_size=l, max_size=l)))
        if kind == "raw-amplitude" and np.linalg.norm(x) < 1e-3:
            x[0] = 1.0
        pts.append(x)
    return spec, pts


class TestSpec:
    def test_validation(self):
        with pytest.raises(SchemaError):
            FeatureMapSpec("nope", 1, 1)
        with pytest.raises(SchemaError):
            FeatureMapSpec("product-angle", 1, 2)
        with pytest.raises(SchemaError):
            FeatureMapSpec("raw-amplitude", 1, 3)

    def test_json_roundtrip(self):
        s = FeatureMapSpec("iqp-phase", 2, 2, {"reps": 2, "scale": 0.5})
        assert FeatureMapSpec.from_json(json.loads(json.dumps(s.to_json()))) == s


class TestEncode:
    def test_product_angle_examples(self):
        s = FeatureMapSpec("product-angle", 1, 1)
        assert np.allclose(encode(s, [0.0]).amplitudes, [1, 0])
        assert np.allclose(encode(s, [np.pi]).amplitudes, [0, 1])

    def test_iqp_zero_is_uniform(self):
        s = FeatureMapSpec("iqp-phase", 2, 2)
        assert np.allclose(encode(s, [0, 0]).amplitudes, np.full(4, 0.5))

    @given(st.integers(1, 3), st.integers(1, 3), st.data())
    def test_iqp_matches_dense_circuit(self, n, reps, data):
        x = data.draw(st.lists(angles, min_size=n, max_size=n))
        s = FeatureMapSpec("iqp-phase", n, n, {"reps": reps})
        assert np.allclose(encode(s, x).amplitudes, _iqp_reference(x, n, reps), atol=1e-12)

    def test_raw_amplitude(self):
        s = FeatureMapSpec("raw-amplitude", 2, 3)
        assert np.allclose(encode(s, [3, 0, 4]).amplitudes, [0.6, 0, 0.8, 0])
        with pytest.raises(InvalidInputError):
            encode(s, [0, 0, 0])

    def test_wrong_length(self):
        with pytest.raises(DimensionError):
            encode(FeatureMapSpec("product-angle", 2, 2), [0.1])

    @given(spec_and_points(1))
    def test_unit_norm_and_deterministic(self, sp):
        spec, (x,) = sp
        a = encode(spec, x).amplitudes
        assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-12)
        assert np.array_equal(a, encode(spec, x).amplitudes)


class TestKernel:
    def test_examples(self):
        s = FeatureMapSpec("product-angle", 1, 1)
        assert kernel(s, [0.4], [0.4]) == pytest.approx(1.0)
        assert kernel(s, [0.0], [np.pi]) == pytest.approx(0.0, abs=1e-30)

    @given(spec_and_points(2))
    def test_equals_trace_of_product(self, sp):
        spec, (x, y) = sp
        k = kernel(spec, x, y)
        assert 0.0 <= k <= 1.0
        assert k == pytest.approx(kernel(spec, y, x), abs=1e-15)
        assert k == pytest.approx(frobenius_inner(density(spec, x), density(spec, y)), abs=1e-10)

    def test_matrix_examples(self):
        s = FeatureMapSpec("product-angle", 1, 1)
        assert kernel_matrix(s, [[0.3]]).tolist() == [[1.0]]
        assert np.allclose(kernel_matrix(s, [[0.0], [np.pi]]), np.eye(2))

    @given(spec_and_points(5))
    def test_matrix_psd_unit_diagonal(self, sp):
        spec, pts = sp
        k = kernel_matrix(spec, pts)
        assert np.array_equal(k, k.T)
        assert np.all(np.diag(k) == 1.0)
        assert np.linalg.eigvalsh(k).min() >= -1e-9
        for i in range(5):
            for j in range(5):
                if i != j:
                    assert k[i, j] == pytest.approx(kernel(spec, pts[i], pts[j]), abs=1e-12)


def test_jsonl_roundtrip(tmp_path):
    p = tmp_path / "d.jsonl"
    xs = [np.array([0.1, 0.2]), np.array([1.0, -1.0])]
    dump_jsonl_dataset(p, xs, [1, -1])
    xs2, ys2 = load_jsonl_dataset(p)
    assert ys2 == [1, -1]
    assert all(np.array_equal(a, b) for a, b in zip(xs, xs2))


def test_jsonl_rejects_bad_label(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text('{"x": [1.0], "y": 0}\n')
    with pytest.raises(SchemaError):
        load_jsonl_dataset(p)
