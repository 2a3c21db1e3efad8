"""Forward-mode dual numbers with a fixed two-component tangent (d/df_m, d/dgamma).

A ``Dual`` holds a primal numpy array and a tangent array of shape
``(2, *value.shape)``. A 0-d ``Dual`` is a dual scalar; larger shapes are
arrays of dual scalars sharing storage. Array axes are always addressed with
negative indices inside linear maps so the leading tangent axis never has to
be special-cased.
"""
import logging
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from app.schemas.error import NumericDomainError

logger = logging.getLogger(__name__)

N_TANGENTS = 2

# sqrt(tiny) so that its square stays a normal number
_MODULUS_FLOOR = float(np.sqrt(np.finfo(np.float64).tiny))

Operand = Union["Dual", float, int, complex, np.ndarray]


def _neg_axis(axis: int, ndim: int) -> int:
    if axis >= 0:
        axis -= ndim
    if not -ndim <= axis < 0:
        raise ValueError(f"axis {axis} out of range for {ndim}-d dual")
    return axis


def _wrap(value: np.ndarray, tangent: np.ndarray) -> "Dual":
    if np.iscomplexobj(value) or np.iscomplexobj(tangent):
        return DualComplex(value, tangent)
    return Dual(value, tangent)


def _tangent_for(d: "Dual", shape: tuple) -> np.ndarray:
    """Tangent of ``d`` broadcast against a primal of ``shape``."""
    t = d.tangent
    pad = len(shape) - d.value.ndim
    if pad > 0:
        t = t.reshape((N_TANGENTS,) + (1,) * pad + d.value.shape)
    return np.broadcast_to(t, (N_TANGENTS,) + shape)


class Dual:
    """Real dual number (or array of them)."""

    __slots__ = ("value", "tangent")
    # numpy must defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, value, tangent: Optional[np.ndarray] = None):
        value = np.asarray(value)
        if not np.issubdtype(value.dtype, np.inexact):
            value = value.astype(np.float64)
        if tangent is None:
            tangent = np.zeros((N_TANGENTS,) + value.shape, dtype=value.dtype)
        else:
            tangent = np.asarray(tangent)
            if tangent.shape != (N_TANGENTS,) + value.shape:
                tangent = np.broadcast_to(tangent, (N_TANGENTS,) + value.shape)
        self.value = value
        self.tangent = tangent

    # --- array protocol -------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    @property
    def gradient(self) -> np.ndarray:
        """Tangent of a 0-d dual, i.e. its gradient with respect to (f_m, gamma)."""
        if self.ndim != 0:
            raise ValueError("gradient is only defined for 0-d duals")
        return np.asarray(self.tangent, dtype=np.float64)

    @property
    def is_constant(self) -> bool:
        return not np.any(self.tangent)

    def __len__(self) -> int:
        return len(self.value)

    def __float__(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        if self.ndim == 0:
            return f"{type(self).__name__}({self.value!r}, tangent={self.tangent.tolist()!r})"
        return f"{type(self).__name__}(shape={self.shape}, dtype={self.value.dtype})"

    def __getitem__(self, key) -> "Dual":
        tkey = (slice(None),) + (key if isinstance(key, tuple) else (key,))
        return _wrap(self.value[key], self.tangent[tkey])

    def apply_linear(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Dual":
        """Apply a linear map to primal and tangent alike.

        ``fn`` must address axes with negative indices.
        """
        return _wrap(fn(self.value), fn(self.tangent))

    def reshape(self, *shape) -> "Dual":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        value = self.value.reshape(shape)
        return _wrap(value, self.tangent.reshape((N_TANGENTS,) + value.shape))

    def sum(self, axis: Optional[int] = None) -> "Dual":
        if axis is None:
            axes = tuple(range(1, self.ndim + 1))
            return _wrap(self.value.sum(), self.tangent.sum(axis=axes))
        axis = _neg_axis(axis, self.ndim)
        return _wrap(self.value.sum(axis=axis), self.tangent.sum(axis=axis))

    def mean(self, axis: Optional[int] = None) -> "Dual":
        count = self.size if axis is None else self.shape[axis]
        return self.sum(axis) / count

    def copy(self) -> "Dual":
        return _wrap(self.value.copy(), np.array(self.tangent))

    # --- arithmetic -----------------------------------------------------

    def __add__(self, other: Operand) -> "Dual":
        if isinstance(other, Dual):
            value = self.value + other.value
            return _wrap(value, _tangent_for(self, value.shape) + _tangent_for(other, value.shape))
        value = self.value + other
        return _wrap(value, _tangent_for(self, value.shape))

    __radd__ = __add__

    def __neg__(self) -> "Dual":
        return _wrap(-self.value, -self.tangent)

    def __pos__(self) -> "Dual":
        return self

    def __sub__(self, other: Operand) -> "Dual":
        return self + (-other)

    def __rsub__(self, other: Operand) -> "Dual":
        return (-self) + other

    def __mul__(self, other: Operand) -> "Dual":
        if isinstance(other, Dual):
            value = self.value * other.value
            tangent = (_tangent_for(self, value.shape) * other.value
                       + self.value * _tangent_for(other, value.shape))
            return _wrap(value, tangent)
        other = np.asarray(other)
        value = self.value * other
        return _wrap(value, _tangent_for(self, value.shape) * other)

    __rmul__ = __mul__

    def __truediv__(self, other: Operand) -> "Dual":
        if isinstance(other, Dual):
            if np.any(other.value == 0):
                raise NumericDomainError("div", "division by a dual with zero primal value")
            return self * other.reciprocal()
        other = np.asarray(other)
        if np.any(other == 0):
            raise NumericDomainError("div", "division by zero constant")
        value = self.value / other
        return _wrap(value, _tangent_for(self, value.shape) / other)

    def __rtruediv__(self, other: Operand) -> "Dual":
        return self.reciprocal() * other

    def reciprocal(self) -> "Dual":
        if np.any(self.value == 0):
            raise NumericDomainError("div", "reciprocal of zero")
        inv = 1.0 / self.value
        return _wrap(inv, -self.tangent * inv ** 2)

    def __pow__(self, power: float) -> "Dual":
        if isinstance(power, Dual):
            return exp(log(self) * power)
        if power == 2:
            return self * self
        if not float(power).is_integer() and np.any(self.value < 0):
            raise NumericDomainError("pow", "fractional power of a negative value")
        if power < 1 and np.any(self.value == 0):
            raise NumericDomainError("pow", "power below one at zero")
        value = self.value ** power
        return _wrap(value, self.tangent * (power * self.value ** (power - 1)))

    def __rpow__(self, base: float) -> "Dual":
        if base <= 0:
            raise NumericDomainError("pow", f"base must be positive, got {base}")
        value = np.power(float(base), self.value)
        return _wrap(value, self.tangent * (value * np.log(base)))

    def __abs__(self) -> "Dual":
        # d|u| at u = 0 is taken as 0
        return _wrap(np.abs(self.value), self.tangent * np.sign(self.value))


class DualComplex(Dual):
    """Complex dual number: primal and tangent are complex arrays."""

    __slots__ = ()

    @classmethod
    def from_parts(cls, re: Dual, im: Dual) -> "DualComplex":
        value = re.value + 1j * im.value
        tangent = _tangent_for(re, value.shape) + 1j * _tangent_for(im, value.shape)
        return cls(value, tangent)

    @property
    def re(self) -> Dual:
        return Dual(self.value.real, self.tangent.real)

    @property
    def im(self) -> Dual:
        return Dual(self.value.imag, self.tangent.imag)

    def conj(self) -> "DualComplex":
        return DualComplex(np.conj(self.value), np.conj(self.tangent))

    def modulus(self, eps: float = 1e-12) -> Dual:
        """Smoothed complex modulus sqrt(re^2 + im^2 + floor^2).

        The floor is ``eps`` times the largest modulus in the array, so the
        operation stays positively 1-homogeneous and its tangent is finite at
        exact zeros.
        """
        re, im = self.value.real, self.value.imag
        scale = float(np.max(np.abs(self.value))) if self.size else 0.0
        floor = max(eps * scale, _MODULUS_FLOOR)
        mag = np.sqrt(re * re + im * im + floor * floor)
        tangent = (re * self.tangent.real + im * self.tangent.imag) / mag
        return Dual(mag, tangent)

    def __abs__(self) -> Dual:
        return self.modulus()


DualScalar = Dual


# --- construction ----------------------------------------------------------

def lift(value: float, index: Optional[int] = None) -> Dual:
    """Seed a dual scalar; ``index`` picks the parameter it differentiates."""
    tangent = np.zeros(N_TANGENTS)
    if index is not None:
        if index not in (0, 1):
            raise ValueError(f"tangent index must be 0 or 1, got {index}")
        tangent[index] = 1.0
    return Dual(np.float64(value), tangent)


def constant(value) -> Dual:
    return Dual(value)


def as_dual(x: Operand) -> Dual:
    return x if isinstance(x, Dual) else Dual(x)


# --- elementary functions -------------------------------------------------

def sin(x: Dual) -> Dual:
    return _wrap(np.sin(x.value), x.tangent * np.cos(x.value))


def cos(x: Dual) -> Dual:
    return _wrap(np.cos(x.value), -x.tangent * np.sin(x.value))


def exp(x: Dual) -> Dual:
    value = np.exp(x.value)
    return _wrap(value, x.tangent * value)


def pow2(x: Dual) -> Dual:
    return 2.0 ** x


def log(x: Dual) -> Dual:
    if np.any(np.real(x.value) <= 0):
        raise NumericDomainError("log", "argument must be positive")
    return _wrap(np.log(x.value), x.tangent / x.value)


def sqrt(x: Dual) -> Dual:
    if np.any(x.value < 0):
        raise NumericDomainError("sqrt", "argument must be non-negative")
    if np.any(x.value == 0):
        raise NumericDomainError("sqrt", "derivative undefined at zero")
    value = np.sqrt(x.value)
    return _wrap(value, x.tangent * (0.5 / value))


def square(x: Dual) -> Dual:
    return x * x


def modulus(z: Dual, eps: float = 1e-12) -> Dual:
    """Modulus of a complex dual (smoothed) or of a real dual."""
    if isinstance(z, DualComplex):
        return z.modulus(eps)
    return abs(z)


def where(mask: np.ndarray, a: Operand, b: Operand) -> Dual:
    a, b = as_dual(a), as_dual(b)
    value = np.where(mask, a.value, b.value)
    tangent = np.where(mask, _tangent_for(a, value.shape), _tangent_for(b, value.shape))
    return _wrap(value, tangent)


def peak_abs(x: Dual) -> Dual:
    """Largest absolute sample as a dual scalar (tangent of the selected sample)."""
    i = int(np.argmax(np.abs(x.value)))
    idx = np.unravel_index(i, x.shape)
    return abs(x[idx])


def concatenate(parts: Sequence[Dual], axis: int = -1) -> Dual:
    ndim = parts[0].ndim
    axis = _neg_axis(axis, ndim)
    return _wrap(np.concatenate([p.value for p in parts], axis=axis),
                 np.concatenate([p.tangent for p in parts], axis=axis))


def stack(parts: Sequence[Dual], axis: int = 0) -> Dual:
    ndim = parts[0].ndim + 1
    axis = _neg_axis(axis, ndim)
    return _wrap(np.stack([p.value for p in parts], axis=axis),
                 np.stack([p.tangent for p in parts], axis=axis))


# --- Fourier transforms (linearity: transform primal and tangents separately) ---

def fft(x: Dual, n: Optional[int] = None, axis: int = -1) -> DualComplex:
    axis = _neg_axis(axis, x.ndim)
    return x.apply_linear(lambda a: np.fft.fft(a, n=n, axis=axis))


def ifft(x: Dual, n: Optional[int] = None, axis: int = -1) -> DualComplex:
    axis = _neg_axis(axis, x.ndim)
    return x.apply_linear(lambda a: np.fft.ifft(a, n=n, axis=axis))


def rfft(x: Dual, n: Optional[int] = None, axis: int = -1) -> DualComplex:
    axis = _neg_axis(axis, x.ndim)
    return x.apply_linear(lambda a: np.fft.rfft(a, n=n, axis=axis))


def irfft(x: Dual, n: Optional[int] = None, axis: int = -1) -> Dual:
    axis = _neg_axis(axis, x.ndim)
    return x.apply_linear(lambda a: np.fft.irfft(a, n=n, axis=axis))


# --- finite-difference oracle ---------------------------------------------

def fd_oracle(f: Callable[[np.ndarray], float], theta: Iterable[float], h: float = 1e-4) -> np.ndarray:
    """Central finite-difference gradient of a scalar function of theta.

    Args:
        f: function of a length-2 float array returning a float
        theta: evaluation point
        h: step, must be positive

    Returns:
        np.ndarray: ``(f(theta + h e_i) - f(theta - h e_i)) / (2h)`` per coordinate
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    theta = np.asarray(list(theta), dtype=np.float64)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        step = np.zeros_like(theta)
        step[i] = h
        grad[i] = (float(f(theta + step)) - float(f(theta - step))) / (2.0 * h)
    return grad
