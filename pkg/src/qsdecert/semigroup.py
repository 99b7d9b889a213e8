"""Interaction-picture contraction semigroups over piecewise-constant drives.

For a model (S, L, H) and constant channel amplitudes alpha, beta the matrix

    G = sum_ij conj(a_i) S_ji^* b_j  - sum_ij conj(a_i) S_ji^* L_j
        + sum_j L_j^* b_j + iH - (1/2) sum_i L_i^* L_i
        - (|a|^2 + |b|^2)/2 * I

generates a contraction semigroup t -> exp(t G). Matrix elements of the
two-sided field displacement of the unitary cocycle factor over a common
partition of piecewise-constant amplitudes as an ordered product of these
semigroups; see :func:`chain`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidAmplitudeError,
    ModelIntegrityError,
    PartitionError,
)
from .models import SlhModel
from .operators import adjoint, matexp, opnorm

__all__ = [
    "SimpleFunction",
    "Generator",
    "generator",
    "propagate",
    "chain",
    "refine_common",
]

CONTRACTION_TOL = 1e-9
# Breakpoints closer than this are merged when building a union partition.
BREAKPOINT_MERGE_TOL = 1e-12


class SimpleFunction:
    """Piecewise-constant amplitude t -> C^m on [0, t_final).

    breakpoints: strictly increasing, breakpoints[0] == 0.
    values: shape (n_intervals, m), value on [breakpoints[i], breakpoints[i+1]).
    """

    def __init__(self, breakpoints, values):
        bp = np.asarray(breakpoints, dtype=float)
        vals = np.atleast_2d(np.asarray(values, dtype=complex))
        if bp.ndim != 1 or bp.size < 2:
            raise InvalidAmplitudeError("need at least two breakpoints")
        if bp[0] != 0.0:
            raise InvalidAmplitudeError("first breakpoint must be 0")
        if not np.all(np.diff(bp) > 0):
            raise InvalidAmplitudeError("breakpoints must be strictly increasing")
        if vals.shape[0] != bp.size - 1:
            raise InvalidAmplitudeError(
                f"{bp.size - 1} intervals but {vals.shape[0]} value rows"
            )
        if not np.all(np.isfinite(vals.view(float))):
            raise InvalidAmplitudeError("amplitudes must be finite")
        self.breakpoints = bp
        self.values = vals
        self.breakpoints.setflags(write=False)
        self.values.setflags(write=False)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def n_intervals(self) -> int:
        return self.values.shape[0]

    @property
    def t_final(self) -> float:
        return float(self.breakpoints[-1])

    @classmethod
    def constant(cls, value, t_final: float, m: int | None = None):
        v = np.atleast_1d(np.asarray(value, dtype=complex))
        if m is not None and v.size != m:
            raise InvalidAmplitudeError(f"expected {m} channels, got {v.size}")
        return cls([0.0, t_final], v[None, :])

    @classmethod
    def zero(cls, m: int, t_final: float):
        return cls.constant(np.zeros(m, dtype=complex), t_final)

    def value_at(self, t: float) -> np.ndarray:
        if t < 0 or t >= self.t_final:
            raise InvalidAmplitudeError(f"time {t} outside [0, {self.t_final})")
        i = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.values[i]

    def durations(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def norm_sq(self) -> float:
        """Integral of |f(s)|^2 over [0, t_final]."""
        return float(np.sum(self.durations() * np.sum(np.abs(self.values) ** 2, axis=1)))

    def inner(self, other: "SimpleFunction") -> complex:
        """Integral of <f(s), g(s)> ds, conjugate-linear in self."""
        f, g = refine_common(self, other)
        dt = f.durations()
        return complex(np.sum(dt * np.sum(np.conj(f.values) * g.values, axis=1)))

    def with_breakpoints(self, breakpoints) -> "SimpleFunction":
        """Re-express on a finer partition containing all original points."""
        bp = np.asarray(breakpoints, dtype=float)
        mids = 0.5 * (bp[:-1] + bp[1:])
        vals = np.stack([self.value_at(t) for t in mids])
        return SimpleFunction(bp, vals)

    def __eq__(self, other):
        return (
            isinstance(other, SimpleFunction)
            and self.breakpoints.shape == other.breakpoints.shape
            and np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.breakpoints.tobytes(), self.values.tobytes()))

    def __repr__(self):  # pragma: no cover - cosmetic
        return (
            f"SimpleFunction(m={self.m}, intervals={self.n_intervals}, "
            f"t_final={self.t_final})"
        )


def refine_common(f: SimpleFunction, g: SimpleFunction):
    """Return (f, g) re-expressed on the union of their partitions."""
    if abs(f.t_final - g.t_final) > BREAKPOINT_MERGE_TOL:
        raise PartitionError(
            f"final times differ: {f.t_final} vs {g.t_final}"
        )
    merged = np.union1d(f.breakpoints, g.breakpoints)
    # Collapse points that differ only by roundoff.
    keep = [merged[0]]
    for t in merged[1:]:
        if t - keep[-1] > BREAKPOINT_MERGE_TOL:
            keep.append(t)
    bp = np.asarray(keep)
    bp[-1] = min(f.t_final, g.t_final)
    return f.with_breakpoints(bp), g.with_breakpoints(bp)


@dataclass
class Generator:
    """Generator of one (alpha, beta)-displaced contraction semigroup."""

    matrix: np.ndarray
    k: int | None
    alpha: np.ndarray
    beta: np.ndarray
    _exp_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def numerical_abscissa(self) -> float:
        herm = 0.5 * (self.matrix + adjoint(self.matrix))
        return float(np.linalg.eigvalsh(herm).max())


def generator(model: SlhModel, alpha, beta) -> Generator:
    """Assemble the semigroup generator for constant amplitudes."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))
    if alpha.shape != (model.m,) or beta.shape != (model.m,):
        raise InvalidAmplitudeError(
            f"amplitudes must have length {model.m}, "
            f"got {alpha.shape} and {beta.shape}"
        )
    key = (alpha.tobytes(), beta.tobytes())
    cached = model._generator_cache.get(key)
    if cached is not None:
        return cached

    dim = model.dim
    G = np.zeros((dim, dim), dtype=complex)
    for j in range(model.m):
        Sd = [adjoint(model.S[j][i]) for i in range(model.m)]
        for i in range(model.m):
            G += np.conj(alpha[i]) * beta[j] * Sd[i]
            G -= np.conj(alpha[i]) * (Sd[i] @ model.L[j])
        G += beta[j] * adjoint(model.L[j])
    G += 1j * model.H
    for Li in model.L:
        G -= 0.5 * (adjoint(Li) @ Li)
    shift = 0.5 * (np.vdot(alpha, alpha).real + np.vdot(beta, beta).real)
    G -= shift * np.eye(dim, dtype=complex)

    gen = Generator(
        matrix=G, k=model.params.get("k"), alpha=alpha.copy(), beta=beta.copy()
    )
    gen.matrix.setflags(write=False)
    model._generator_cache[key] = gen
    return gen


def propagate(gen: Generator, t: float) -> np.ndarray:
    """exp(t * G); checked to be a contraction up to roundoff."""
    if t < 0:
        raise InvalidAmplitudeError(f"time must be nonnegative, got {t}")
    cached = gen._exp_cache.get(t)
    if cached is not None:
        return cached
    T = matexp(gen.matrix, t)
    nrm = opnorm(T)
    if nrm > 1.0 + CONTRACTION_TOL:
        raise ModelIntegrityError(
            f"semigroup norm {nrm:.3e} exceeds 1 at t={t}; "
            "generator assembly or the model itself is inconsistent"
        )
    T.setflags(write=False)
    gen._exp_cache[t] = T
    return T


def chain(model: SlhModel, f: SimpleFunction, g: SimpleFunction, u) -> np.ndarray:
    """Ordered product of interval semigroups applied to u.

    With common breakpoints 0 = t_0 < ... < t_{l+1}, returns

        T^(f(0) g(0))_{t_1 - t_0} ... T^(f(l) g(l))_{t_{l+1} - t_l} u,

    i.e. the final interval's semigroup acts on u first. The drive f sits on
    the conjugated (bra) side, g on the ket side.
    """
    if f.m != model.m or g.m != model.m:
        raise InvalidAmplitudeError("channel count mismatch with model")
    f, g = refine_common(f, g)
    u = np.asarray(u, dtype=complex)
    if u.shape != (model.dim,):
        raise InvalidAmplitudeError(
            f"state must have dimension {model.dim}, got {u.shape}"
        )
    dt = f.durations()
    for i in range(f.n_intervals - 1, -1, -1):
        gen = generator(model, f.values[i], g.values[i])
        u = propagate(gen, float(dt[i])) @ u
    return u
