import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparserec import (
    FileFormatError,
    InstanceTooLargeError,
    InvalidArgumentError,
    SensingMatrix,
    dct_matrix,
    estimate_rip,
    exact_rip,
    generate_matrix,
    load_matrix,
    measure,
    measurement_bound,
    mutual_coherence,
    save_matrix,
)
from sparserec import rng
from sparserec.sensing import coherence_rectangular


def test_gaussian_entry_statistics():
    scale = math.sqrt(0.02)
    phi = generate_matrix("gaussian", 512, 2048, 42, scale)
    assert phi.shape == (512, 2048)
    assert abs(phi.entries.mean()) <= 3 * scale / math.sqrt(512 * 2048)
    assert phi.entries.std() == pytest.approx(scale, rel=0.01)


def test_bernoulli_support():
    phi = generate_matrix("bernoulli", 2, 4, 7, 1.0)
    assert set(np.unique(phi.entries)) <= {-1.0, 1.0}
    big = generate_matrix("bernoulli", 64, 256, 3, 0.5)
    assert set(np.unique(big.entries)) == {-0.5, 0.5}


@pytest.mark.parametrize("kind", ["gaussian", "bernoulli", "subsampled_orthobasis"])
def test_generation_is_deterministic(kind):
    a = generate_matrix(kind, 16, 32, 2**64 - 1, 0.3)
    b = generate_matrix(kind, 16, 32, 2**64 - 1, 0.3)
    assert a.entries.tobytes() == b.entries.tobytes()
    c = generate_matrix(kind, 16, 32, 5, 0.3)
    assert a.entries.tobytes() != c.entries.tobytes()


def test_gaussian_stream_is_pinned():
    # regression guard on the Box-Muller / PCG64 stream
    phi = generate_matrix("gaussian", 1, 4, 0, 1.0)
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(0)))
    u = gen.random((2, 2))
    r = np.sqrt(-2 * np.log(1 - u[:, 0]))
    expected = np.column_stack([r * np.cos(2 * np.pi * u[:, 1]), r * np.sin(2 * np.pi * u[:, 1])]).ravel()
    np.testing.assert_array_equal(phi.entries[0], expected)


def test_box_muller_moments():
    z = rng.normal(rng.make_rng(11), 200_001)
    assert abs(z.mean()) < 0.01
    assert z.std() == pytest.approx(1.0, abs=0.01)


def test_derived_seeds_are_distinct_and_stable():
    seeds = {rng.derive_seed(42, m, t) for m in range(6) for t in range(10)}
    assert len(seeds) == 60
    assert rng.derive_seed(42, 3, 1) == rng.derive_seed(42, 3, 1)


def test_subsampled_rows_are_scaled_dct_rows():
    n, m = 32, 8
    phi = generate_matrix("subsampled_orthobasis", m, n, 9)
    rows = phi.entries / math.sqrt(n / m)
    np.testing.assert_allclose(rows @ rows.T, np.eye(m), atol=1e-12)
    dct = dct_matrix(n)
    matches = [int(np.argmin(np.linalg.norm(dct - r, axis=1))) for r in rows]
    assert len(set(matches)) == m
    np.testing.assert_allclose(rows, dct[matches], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_subsampled_operator_norm(seed):
    n, m = 64, 16
    phi = generate_matrix("subsampled_orthobasis", m, n, seed)
    x = np.random.default_rng(seed).standard_normal(n)
    assert np.linalg.norm(phi.entries @ x) <= math.sqrt(n / m) * np.linalg.norm(x) * (1 + 1e-12)


def test_generator_argument_errors():
    with pytest.raises(InvalidArgumentError):
        generate_matrix("gaussian", 5, 4, 0, 1.0)
    with pytest.raises(InvalidArgumentError):
        generate_matrix("gaussian", 2, 4, 0, 0.0)
    with pytest.raises(InvalidArgumentError):
        generate_matrix("cauchy", 2, 4, 0, 1.0)
    with pytest.raises(InvalidArgumentError):
        generate_matrix("gaussian", 2, 4, -1, 1.0)


def test_measure_examples():
    np.testing.assert_array_equal(measure(np.eye(2), [3, -4]).values, [3, -4])
    np.testing.assert_array_equal(measure(np.zeros((1, 3)), [1, 2, 3]).values, [0])
    with pytest.raises(InvalidArgumentError):
        measure(np.eye(2), [1, 2, 3])


def test_measure_linearity():
    gen = np.random.default_rng(0)
    phi = generate_matrix("gaussian", 20, 50, 1, 1.0)
    x1, x2 = gen.standard_normal(50), gen.standard_normal(50)
    a, b = 1.7, -0.3
    lhs = measure(phi, a * x1 + b * x2).values
    rhs = a * measure(phi, x1).values + b * measure(phi, x2).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def _coherence_by_enumeration(phi_rows, psi_cols):
    n = phi_rows.shape[1]
    best = 0.0
    for k in range(phi_rows.shape[0]):
        for j in range(psi_cols.shape[1]):
            best = max(best, abs(sum(phi_rows[k, t] * psi_cols[t, j] for t in range(n))))
    return math.sqrt(n) * best


def test_coherence_spike_vs_dct_matches_enumeration():
    n = 8
    oracle = _coherence_by_enumeration(np.eye(n), dct_matrix(n).T)
    res = mutual_coherence(np.eye(n), dct_matrix(n).T)
    assert res.mu == pytest.approx(oracle, abs=1e-12)
    # the largest DCT-II entry at n = 8 is sqrt(2/n) cos(pi/16), not sqrt(2/n)
    assert res.mu == pytest.approx(math.sqrt(2) * math.cos(math.pi / 16), abs=1e-12)
    assert res.argmax_pair == (3, 7)


def test_coherence_spike_vs_dct_tends_to_sqrt2():
    mu = mutual_coherence(np.eye(512), dct_matrix(512).T).mu
    assert math.sqrt(2) - 1e-5 < mu <= math.sqrt(2)


@pytest.mark.parametrize("n", [2, 8, 33])
def test_coherence_of_basis_with_itself(n):
    psi = dct_matrix(n).T
    res = mutual_coherence(psi.T, psi)
    assert res.mu == pytest.approx(math.sqrt(n), abs=1e-9)
    assert res.argmax_pair[0] == res.argmax_pair[1]


def _random_orthobasis(seed, n):
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))
    return q * np.sign(np.diag(r))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 24), st.integers(0, 2**32))
def test_coherence_bounds(n, seed):
    phi = _random_orthobasis(seed, n)
    psi = _random_orthobasis(seed + 1, n)
    mu = mutual_coherence(phi, psi).mu
    assert 1 - 1e-9 <= mu <= math.sqrt(n) + 1e-9


def test_coherence_rejects_unnormalized():
    bad = np.eye(4)
    bad[2, 2] = 2.0
    with pytest.raises(InvalidArgumentError, match="sensing row 2"):
        mutual_coherence(bad, np.eye(4))
    with pytest.raises(InvalidArgumentError, match="basis column 2"):
        mutual_coherence(np.eye(4), bad)
    with pytest.raises(InvalidArgumentError):
        mutual_coherence(np.eye(3), np.eye(4))


def test_rectangular_coherence_upper_bound():
    phi = generate_matrix("gaussian", 16, 64, 3, 1.0)
    res = coherence_rectangular(phi, dct_matrix(64).T)
    assert 0 < res.mu <= 8 + 1e-9
    # a subset of orthobasis rows is scale-free under the row normalization
    rows = dct_matrix(64)[:16]
    assert coherence_rectangular(rows, dct_matrix(64).T).mu == pytest.approx(8.0)


def test_rip_exact_isometry():
    q = _random_orthobasis(4, 32)
    for k in (1, 5, 32):
        assert estimate_rip(q, k, 50, 0).delta_lower < 1e-10


def test_rip_canonical_trials_equal_column_energy_defect():
    gen = np.random.default_rng(8)
    phi = gen.standard_normal((6, 8))
    unit = phi / np.linalg.norm(phi, axis=0)
    assert estimate_rip(unit, 1, 200, 1, canonical=True).delta_lower < 1e-12
    # enough trials to draw every column of n = 8
    est = estimate_rip(phi, 1, 500, 1, canonical=True)
    oracle = max(abs(np.sum(phi[:, j] ** 2) - 1) for j in range(8))
    assert est.delta_lower == pytest.approx(oracle, rel=1e-12)


def test_rip_gaussian_regression_baseline():
    phi = generate_matrix("gaussian", 512, 2048, 42, 1 / math.sqrt(512))
    est = estimate_rip(phi, 128, 1000, 7)
    assert est.delta_lower < 1
    assert est.delta_lower == pytest.approx(0.22576717500053234, rel=1e-9)


def test_rip_monotone_in_trials():
    phi = generate_matrix("gaussian", 10, 30, 2, 1 / math.sqrt(10))
    values = [estimate_rip(phi, 3, t, 5).delta_lower for t in (1, 5, 20, 80, 200)]
    assert values == sorted(values)


def test_rip_lower_bounds_exact():
    phi = generate_matrix("gaussian", 8, 12, 3, 1 / math.sqrt(8))
    exact = exact_rip(phi, 2)
    assert estimate_rip(phi, 2, 300, 0).delta_lower <= exact + 1e-12
    # exact by brute-force over the 66 column pairs
    brute = 0.0
    for i in range(12):
        for j in range(i + 1, 12):
            s = np.linalg.svd(phi.entries[:, [i, j]], compute_uv=False)
            brute = max(brute, s[0] ** 2 - 1, 1 - s[-1] ** 2)
    assert exact == pytest.approx(brute, rel=1e-12)


def test_rip_errors():
    with pytest.raises(InvalidArgumentError):
        estimate_rip(np.eye(3, 5), 4, 10, 0)
    with pytest.raises(InvalidArgumentError):
        estimate_rip(np.eye(3, 5), 2, 10, 0, canonical=True)
    with pytest.raises(InstanceTooLargeError):
        exact_rip(np.eye(30, 100), 10)


def test_measurement_bound_examples():
    assert math.log(2048) == pytest.approx(7.62462, abs=1e-5)
    assert measurement_bound(1.0, 128, 2048, 1.0) == 976
    assert measurement_bound(1.0, 1, 3, 1.0) == 2
    assert measurement_bound(math.sqrt(2), 10, 1024, 1.0) == 139
    with pytest.raises(InvalidArgumentError):
        measurement_bound(0.5, 1, 10)
    with pytest.raises(InvalidArgumentError):
        measurement_bound(1.0, 11, 10)


def test_matrix_file_round_trip(tmp_path):
    phi = generate_matrix("gaussian", 3, 5, 1, 1.0)
    path = tmp_path / "phi.csmx"
    save_matrix(phi, path)
    raw = path.read_bytes()
    assert raw[:4] == b"CSMX"
    assert struct.unpack("<III", raw[4:16]) == (1, 3, 5)
    assert len(raw) == 16 + 8 * 15
    assert struct.unpack("<d", raw[16:24])[0] == phi.entries[0, 0]
    back = load_matrix(path)
    assert back.entries.tobytes() == phi.entries.tobytes()
    assert back.kind == "external"


@pytest.mark.parametrize(
    "blob",
    [b"CSM", b"XXXX" + struct.pack("<III", 1, 1, 1) + bytes(8), b"CSMX" + struct.pack("<III", 2, 1, 1) + bytes(8),
     b"CSMX" + struct.pack("<III", 1, 2, 2) + bytes(8)],
)
def test_matrix_file_errors(tmp_path, blob):
    path = tmp_path / "bad.csmx"
    path.write_bytes(blob)
    with pytest.raises(FileFormatError):
        load_matrix(path)


def test_sensing_matrix_validation():
    with pytest.raises(ValueError):
        SensingMatrix(np.array([[np.nan]]))
