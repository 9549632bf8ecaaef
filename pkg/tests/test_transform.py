import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_oracle, naive_dft, random_coeffs, scheme
from mrlattice import MultipleRank1Lattice, PeelingPlan, PeelingStage, Rank1Lattice
from mrlattice.transform import (
    UncoveredFrequencyError,
    adjoint,
    dft_arbitrary_length,
    evaluate,
    evaluate_single_lattice,
    reconstruct_direct,
    reconstruct_peeling,
)
from mrlattice.verify import check_reconstruction_property


def rel(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


def test_dft_length_one_and_impulse():
    assert dft_arbitrary_length([3 + 1j]).tolist() == [3 + 1j]
    assert np.allclose(dft_arbitrary_length([1, 0, 0, 0]), np.ones(4))


@pytest.mark.parametrize("M", [2, 3, 5, 16, 97, 101, 1000])
def test_dft_matches_naive(M, rng):
    v = random_coeffs(rng, M)
    assert rel(dft_arbitrary_length(v), naive_dft(v)) < 1e-11


def test_dft_matches_numpy_large_prime_and_batch(rng):
    v = random_coeffs(rng, (3, 10007))
    assert rel(dft_arbitrary_length(v), np.fft.fft(v, axis=-1)) < 1e-11
    assert rel(dft_arbitrary_length(v.T, axis=0), np.fft.fft(v.T, axis=0)) < 1e-11


def test_single_monomial():
    lat = Rank1Lattice((2, 5), 11)
    out = evaluate_single_lattice([1.0], [[3, 4]], lat)
    r = (3 * 2 + 4 * 5) % 11
    assert np.allclose(out, np.exp(2j * np.pi * np.arange(11) * r / 11))
    assert np.allclose(np.abs(out), 1)


def test_single_lattice_naive(rng):
    freqs = rng.integers(-20, 20, (8, 3))
    lat = Rank1Lattice((3, 7, 12), 17)
    coeffs = random_coeffs(rng, 8)
    x = (np.arange(17)[:, None] * np.array(lat.z)[None] % 17) / 17
    naive = np.exp(2j * np.pi * x @ freqs.T) @ coeffs
    assert rel(evaluate_single_lattice(coeffs, freqs, lat), naive) < 1e-12
    assert np.all(evaluate_single_lattice(np.zeros(8), freqs, lat) == 0)


@pytest.fixture
def small_case(rng):
    freqs = np.unique(rng.integers(-6, 7, (12, 2)), axis=0)
    mr = scheme(((1, 5), 41), ((3, 2), 37), ((4, 9), 43))
    return freqs, mr


def test_evaluate_layout_and_dense(small_case, rng):
    freqs, mr = small_case
    coeffs = random_coeffs(rng, len(freqs))
    out = evaluate(coeffs, freqs, mr)
    assert out.shape == (41 + 36 + 42,)
    assert rel(out, dense_oracle(freqs, mr) @ coeffs) < 1e-12
    single = MultipleRank1Lattice((mr[0],))
    assert np.allclose(evaluate(coeffs, freqs, single), evaluate_single_lattice(coeffs, freqs, mr[0]))


def test_adjoint_dense_and_identity(small_case, rng):
    freqs, mr = small_case
    A = dense_oracle(freqs, mr)
    y = random_coeffs(rng, A.shape[0])
    p = random_coeffs(rng, len(freqs))
    assert rel(adjoint(y, freqs, mr), A.conj().T @ y) < 1e-12
    lhs = np.vdot(evaluate(p, freqs, mr), y)
    rhs = np.vdot(p, adjoint(y, freqs, mr))
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)
    assert np.all(adjoint(np.zeros(A.shape[0]), freqs, mr) == 0)


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10), st.integers(0, 2**32 - 1))
def test_linearity(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    freqs = np.unique(rng.integers(-9, 9, (10, 3)), axis=0)
    mr = scheme(((1, 4, 9), 23), ((2, 7, 5), 19))
    p, q = random_coeffs(rng, (2, len(freqs)))
    lhs = evaluate(alpha * p + beta * q, freqs, mr)
    rhs = alpha * evaluate(p, freqs, mr) + beta * evaluate(q, freqs, mr)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))


def test_batch_matches_rows(small_case, rng):
    freqs, mr = small_case
    P = random_coeffs(rng, (4, len(freqs)))
    batch = evaluate(P, freqs, mr)
    for i in range(4):
        assert np.array_equal(batch[i], evaluate(P[i], freqs, mr))


def test_reconstruct_direct_roundtrip_and_least_squares(small_case, rng):
    freqs, mr = small_case
    cert = check_reconstruction_property(freqs, mr)
    assert cert.covered
    p = random_coeffs(rng, len(freqs))
    samples = evaluate(p, freqs, mr)
    back = reconstruct_direct(samples, freqs, mr, cert.per_lattice)
    assert rel(back, p) < 1e-10
    lsq = np.linalg.lstsq(dense_oracle(freqs, mr), samples, rcond=None)[0]
    assert np.max(np.abs(back - lsq)) < 1e-8


def test_reconstruct_direct_uncovered():
    freqs = np.array([[0], [1], [4]])
    mr = scheme(((1,), 3),)
    with pytest.raises(UncoveredFrequencyError, match="index 0"):
        reconstruct_direct(np.zeros(3), freqs, mr, [np.array([2])])


def test_degenerate_single_frequency():
    freqs = np.array([[5, -2]])
    mr = scheme(((0, 0), 1))
    samples = evaluate([2 - 1j], freqs, mr)
    assert samples.tolist() == [2 - 1j]
    assert reconstruct_direct(samples, freqs, mr, [np.array([0])]).tolist() == [2 - 1j]


def test_peeling_five_set(five_set, rng):
    mr = scheme(((4, 3), 5), ((1, 2), 3))
    plan = PeelingPlan((PeelingStage(5, (0, 1), np.array([0, 1, 3])), PeelingStage(3, (1, 2), np.array([2, 4]))))
    p = random_coeffs(rng, 5)
    back = reconstruct_peeling(evaluate(p, five_set, mr), five_set, mr, plan)
    assert rel(back, p) < 1e-10


def test_peeling_single_stage_equals_direct(small_case, rng):
    freqs, mr = small_case
    cert = check_reconstruction_property(freqs, mr)
    # a single stage whose lattices each resolve distinct frequencies
    plan = PeelingPlan((PeelingStage(None, (0, 3), np.arange(len(freqs))),))
    samples = evaluate(random_coeffs(rng, len(freqs)), freqs, mr)
    assert np.allclose(
        reconstruct_peeling(samples, freqs, mr, plan), reconstruct_direct(samples, freqs, mr, cert.per_lattice),
        atol=1e-12,
    )


def test_peeling_three_stages_vs_least_squares(rng):
    # frequencies separated in three rounds, each round on its own lattice
    freqs = np.array([[k] for k in (0, 1, 2, 3, 7, 8, 12, 14, 21, 22, 29, 35)])
    lats, stages, remaining = [], [], list(range(len(freqs)))
    from mrlattice.lattice import aliasing_free_mask

    for M in (7, 5, 11, 13):
        if not remaining:
            break
        mask = aliasing_free_mask(freqs[remaining], (1,), M)
        if not mask.any():
            continue
        idx = np.array(remaining)[mask]
        stages.append(PeelingStage(M, (len(lats), len(lats) + 1), idx))
        lats.append(Rank1Lattice((1,), M))
        remaining = [i for i in remaining if i not in set(idx.tolist())]
    assert not remaining and len(stages) >= 3
    mr = MultipleRank1Lattice(tuple(lats))
    plan = PeelingPlan(tuple(stages))
    p = random_coeffs(rng, len(freqs))
    samples = evaluate(p, freqs, mr)
    back = reconstruct_peeling(samples, freqs, mr, plan)
    lsq = np.linalg.lstsq(dense_oracle(freqs, mr), samples, rcond=None)[0]
    assert np.max(np.abs(back - lsq)) < 1e-8
    assert rel(back, p) < 1e-10


def test_peeling_leftover(rng):
    freqs = np.array([[0], [1], [3]])
    # the last frequency is recovered from the residual value at the origin
    mr = scheme(((1,), 5),)
    plan = PeelingPlan((PeelingStage(5, (0, 1), np.array([0, 1])),), leftover_idx=2)
    p = random_coeffs(rng, 3)
    assert rel(reconstruct_peeling(evaluate(p, freqs, mr), freqs, mr, plan), p) < 1e-12


def test_peeling_plan_mismatch():
    freqs = np.array([[0], [1], [6]])
    mr = scheme(((1,), 5),)
    with pytest.raises(ValueError, match="partition"):
        reconstruct_peeling(np.zeros(5), freqs, mr, PeelingPlan((PeelingStage(5, (0, 1), np.array([0])),)))
    with pytest.raises(ValueError, match="outside"):
        reconstruct_peeling(np.zeros(5), freqs, mr, PeelingPlan((PeelingStage(5, (0, 2), np.arange(3)),)))
    with pytest.raises(UncoveredFrequencyError):
        reconstruct_peeling(np.zeros(5), freqs, mr, PeelingPlan((PeelingStage(5, (0, 1), np.arange(3)),)))


def test_bad_sample_length(small_case):
    freqs, mr = small_case
    with pytest.raises(ValueError, match="trailing length"):
        adjoint(np.zeros(5), freqs, mr)


def test_shift_covariance(rng):
    # shifting the frequency set multiplies rows by the phase of the shift
    freqs = np.unique(rng.integers(-5, 6, (9, 2)), axis=0)
    mr = scheme(((1, 3), 11), ((2, 5), 7))
    a = np.array([4, -3])
    A = dense_oracle(freqs, mr)
    A0 = dense_oracle(freqs + a, mr)
    nodes = [np.array([(j * zc) % lat.M for zc in lat.z]) / lat.M
             for i, lat in enumerate(mr) for j in range(0 if i == 0 else 1, lat.M)]
    D = np.exp(2j * np.pi * np.array(nodes) @ a)
    assert np.max(np.abs(A0 - D[:, None] * A)) <= 1e-12
