"""Tests for app/utils/dual.py."""
import numpy as np
import pytest


# ---------------------------------------------------------------------------
# Arithmetic and elementary functions
# ---------------------------------------------------------------------------

def test_lift_seeds_one_tangent_component():
    from app.utils import dual

    x = dual.lift(3.0, 1)
    assert float(x) == 3.0
    assert x.gradient.tolist() == [0.0, 1.0]
    assert dual.lift(3.0).is_constant


def test_lift_rejects_unknown_index():
    from app.utils import dual

    with pytest.raises(ValueError):
        dual.lift(1.0, 2)


def test_product_rule_and_quotient():
    from app.utils import dual

    a = dual.lift(2.0, 0)
    b = dual.lift(5.0, 1)
    p = a * b
    assert p.gradient.tolist() == pytest.approx([5.0, 2.0])
    q = a / b
    assert float(q) == pytest.approx(0.4)
    assert q.gradient.tolist() == pytest.approx([1 / 5.0, -2.0 / 25.0])


def test_reflected_operators_with_numpy_arrays():
    from app.utils import dual
    from app.utils.dual import Dual

    a = dual.lift(2.0, 0)
    out = np.array([1.0, 2.0, 3.0]) * a
    assert isinstance(out, Dual)
    assert out.value.tolist() == [2.0, 4.0, 6.0]
    assert out.tangent[0].tolist() == [1.0, 2.0, 3.0]
    assert not np.any(out.tangent[1])


def test_elementary_functions_match_finite_differences():
    from app.utils import dual

    def f(theta):
        a, b = theta
        return dual.sin(a * b) + dual.exp(-a) * dual.cos(b) + dual.pow2(a / b) + dual.log(b) + dual.sqrt(a)

    theta = np.array([0.7, 1.3])
    out = f((dual.lift(theta[0], 0), dual.lift(theta[1], 1)))
    expected = dual.fd_oracle(lambda t: float(f((dual.lift(t[0]), dual.lift(t[1])))), theta, h=1e-6)
    assert out.gradient == pytest.approx(expected, rel=1e-6)


UNARY = (
    lambda x, d: d.sin(x),
    lambda x, d: d.cos(x),
    lambda x, d: d.exp(d.sin(x)),
    lambda x, d: d.sqrt(d.square(x) + 1.0),
    lambda x, d: d.log(d.square(x) + 1.0),
    lambda x, d: d.pow2(d.cos(x)),
    lambda x, d: x ** 3,
)

RAMP = np.linspace(-1.0, 1.0, 16)

BINARY = (
    lambda x, y, d: x + y,
    lambda x, y, d: x - 2.0 * y,
    lambda x, y, d: x * y,
    lambda x, y, d: x / (d.square(y) + 1.0),
    lambda x, y, d: d.DualComplex.from_parts(x, d.square(y) + 0.5).modulus(),
    lambda x, y, d: d.fft(d.cos(RAMP * x) + y).modulus().mean(),
)


def random_expression(seed):
    """A random composite of the elementary operations on theta = (a, b)."""
    rng = np.random.default_rng(seed)
    plan = [
        (int(rng.integers(len(BINARY))), int(rng.integers(len(UNARY))), bool(rng.integers(2)))
        for _ in range(4)
    ]

    def f(theta, d):
        a, b = theta
        acc = a
        for binary, unary, swap in plan:
            other = UNARY[unary](b if swap else acc, d)
            acc = BINARY[binary](acc, other, d)
            acc = d.sin(acc) + 0.5 * d.cos(2.0 * acc)
        return acc

    return f


@pytest.mark.parametrize("seed", range(24))
def test_random_composites_match_finite_differences(seed):
    from app.utils import dual

    f = random_expression(seed)
    theta = np.random.default_rng(100 + seed).uniform(0.3, 1.5, size=2)
    out = f((dual.lift(theta[0], 0), dual.lift(theta[1], 1)), dual)
    expected = dual.fd_oracle(lambda t: float(f((dual.lift(t[0]), dual.lift(t[1])), dual)), theta, h=1e-6)
    assert np.all(np.isfinite(out.gradient))
    assert out.gradient == pytest.approx(expected, rel=1e-5, abs=1e-8)


@pytest.mark.parametrize("fn, arg", [("log", 0.0), ("log", -1.0), ("sqrt", -1.0)])
def test_domain_errors(fn, arg):
    from app.schemas.error import NumericDomainError
    from app.utils import dual

    with pytest.raises(NumericDomainError):
        getattr(dual, fn)(dual.lift(arg, 0))


def test_division_by_zero_raises():
    from app.schemas.error import NumericDomainError
    from app.utils import dual

    with pytest.raises(NumericDomainError):
        dual.lift(1.0, 0) / 0.0
    with pytest.raises(NumericDomainError):
        dual.lift(1.0, 0) / dual.lift(0.0, 1)


def test_real_abs_derivative_is_zero_at_zero():
    from app.utils import dual

    x = dual.lift(0.0, 0)
    assert abs(x).gradient.tolist() == [0.0, 0.0]
    assert abs(dual.lift(-2.0, 0)).gradient.tolist() == [-1.0, 0.0]


# ---------------------------------------------------------------------------
# Complex modulus
# ---------------------------------------------------------------------------

def test_modulus_is_finite_at_exact_zero():
    from app.utils import dual
    from app.utils.dual import DualComplex

    z = DualComplex(np.zeros(4, dtype=complex), np.ones((2, 4), dtype=complex))
    m = z.modulus()
    assert np.all(np.isfinite(m.value))
    assert np.all(np.isfinite(m.tangent))
    assert np.all(m.value > 0)


def test_modulus_matches_abs_away_from_zero():
    from app.utils import dual

    a = dual.lift(3.0, 0)
    b = dual.lift(4.0, 1)
    z = dual.DualComplex.from_parts(a, b)
    m = dual.modulus(z)
    assert float(m) == pytest.approx(5.0)
    assert m.gradient.tolist() == pytest.approx([3 / 5, 4 / 5])


def test_modulus_is_positively_homogeneous():
    from app.utils.dual import DualComplex

    rng = np.random.default_rng(0)
    values = rng.normal(size=16) + 1j * rng.normal(size=16)
    z = DualComplex(values, np.zeros((2, 16), dtype=complex))
    scaled = DualComplex(7.0 * values, np.zeros((2, 16), dtype=complex))
    assert scaled.modulus().value == pytest.approx(7.0 * z.modulus().value)


# ---------------------------------------------------------------------------
# Linear maps
# ---------------------------------------------------------------------------

def test_fft_is_linear_in_tangents():
    from app.utils import dual

    a = dual.lift(1.5, 0)
    x = a * np.arange(8.0)
    X = dual.fft(x)
    assert X.value == pytest.approx(np.fft.fft(1.5 * np.arange(8.0)))
    assert X.tangent[0] == pytest.approx(np.fft.fft(np.arange(8.0)))
    back = dual.ifft(X).re
    assert back.value == pytest.approx(x.value)


def test_sum_mean_and_indexing_keep_tangent_layout():
    from app.utils import dual

    a = dual.lift(2.0, 1)
    x = a * np.ones((3, 4))
    assert x.tangent.shape == (2, 3, 4)
    assert x[1].tangent.shape == (2, 4)
    assert x[:, 2].shape == (3,)
    assert x.sum(axis=-1).shape == (3,)
    assert x.mean().gradient.tolist() == pytest.approx([0.0, 1.0])


def test_peak_abs_picks_largest_sample():
    from app.utils import dual

    a = dual.lift(1.0, 0)
    x = a * np.array([0.5, -3.0, 2.0])
    peak = dual.peak_abs(x)
    assert float(peak) == 3.0
    assert peak.gradient.tolist() == [3.0, 0.0]


def test_fd_oracle_rejects_nonpositive_step():
    from app.utils import dual

    with pytest.raises(ValueError):
        dual.fd_oracle(lambda t: 0.0, [1.0, 1.0], h=0.0)
