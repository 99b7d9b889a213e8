"""Coherent-superposition approximants and residual-norm minimization.

An :class:`ApproxState` is a finite sum psi' = sum_j u_j (x) e(g_j) of system
vectors tensored with exponential field vectors over piecewise-constant
amplitudes. Squared norms and overlaps against the truncated propagator reduce
to ordinary matrix algebra through exp_inner and the interval semigroup chain,
so no Fock expansion of the field is ever needed here.

The search treats only the amplitude values as free simplex parameters: for
fixed amplitudes the cost is a nonnegative quadratic in the system-vector
coefficients, so the optimal u_j are recovered exactly from the terms' Gram
system at every evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import (
    InvalidApproximantError,
    InvalidParameterError,
    PartitionError,
)
from .models import SlhModel, decode_vector, encode_vector
from .operators import adjoint
from .semigroup import SimpleFunction, chain, refine_common

__all__ = [
    "ApproxState",
    "exp_inner",
    "exp_norm",
    "approx_norm",
    "residual_norm",
    "cost",
    "OptimizeSchedule",
    "OptimizeResult",
    "optimize",
]

# Penalty returned to the simplex when a candidate produces a non-finite cost.
SEARCH_PENALTY = 1e6


def exp_inner(f: SimpleFunction, g: SimpleFunction) -> complex:
    """<e(f), e(g)> = exp(<f, g>_L2), conjugate-linear in f."""
    return complex(np.exp(f.inner(g)))


def exp_norm(f: SimpleFunction) -> float:
    """||e(f)|| = exp(||f||^2 / 2)."""
    return float(np.exp(0.5 * f.norm_sq()))


class ApproxState:
    """psi' = sum_j u_j (x) e(g_j) with a shared final time."""

    def __init__(self, terms, label: str = ""):
        terms = [(np.asarray(u, dtype=complex), g) for u, g in terms]
        if not terms:
            raise InvalidApproximantError("approximant needs at least one term")
        for _, g in terms:
            if not isinstance(g, SimpleFunction):
                raise InvalidApproximantError("amplitudes must be SimpleFunction")
        t = terms[0][1].t_final
        for u, g in terms:
            if abs(g.t_final - t) > 1e-12:
                raise PartitionError("terms do not share a final time")
            if u.ndim != 1 or not np.all(np.isfinite(u.view(float))):
                raise InvalidApproximantError("system vectors must be finite 1-d")
            if np.linalg.norm(u) == 0.0:
                raise InvalidApproximantError("system vectors must be nonzero")
        self.terms = [(u.copy(), g) for u, g in terms]
        for u, _ in self.terms:
            u.setflags(write=False)
        self.label = label

    @property
    def t_final(self) -> float:
        return self.terms[0][1].t_final

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def norm(self) -> float:
        return approx_norm(self)

    def to_json(self) -> dict:
        return {
            "t": self.t_final,
            "label": self.label,
            "terms": [
                {
                    "u": encode_vector(u),
                    "g": {
                        "breakpoints": [float(b) for b in g.breakpoints],
                        "values": [encode_vector(row) for row in g.values],
                    },
                }
                for u, g in self.terms
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ApproxState":
        terms = []
        for term in data["terms"]:
            u = decode_vector(term["u"])
            g = SimpleFunction(
                term["g"]["breakpoints"],
                [decode_vector(row) for row in term["g"]["values"]],
            )
            terms.append((u, g))
        return cls(terms, label=data.get("label", ""))

    def __repr__(self):  # pragma: no cover - cosmetic
        return f"ApproxState(terms={self.n_terms}, t={self.t_final})"


def approx_norm(state: ApproxState) -> float:
    """|| sum_j u_j (x) e(g_j) || via the Gram matrix of the terms."""
    total = 0.0 + 0.0j
    for ui, gi in state.terms:
        for uj, gj in state.terms:
            total += np.vdot(ui, uj) * exp_inner(gi, gj)
    return math.sqrt(max(total.real, 0.0))


def _overlap_sum(model: SlhModel, u, f: SimpleFunction, state: ApproxState) -> float:
    """sum_j ||e(g_j)|| Re <u, chain(f, g_j) u_j>."""
    acc = 0.0
    for uj, gj in state.terms:
        acc += exp_norm(gj) * np.vdot(u, chain(model, f, gj, uj)).real
    return acc


def residual_norm(model: SlhModel, psi, state: ApproxState) -> float:
    """||U^* (u (x) |f>) - psi'|| evaluated through interval semigroups.

    psi is the pair (u, f); |f> is the normalized coherent state, so
    ||psi|| = ||u||. The cross term against each psi'_j collapses to a
    semigroup chain matrix element.
    """
    u, f = psi
    u = np.asarray(u, dtype=complex)
    sq = (
        float(np.vdot(u, u).real)
        - 2.0 * _overlap_sum(model, u, f, state)
        + approx_norm(state) ** 2
    )
    return math.sqrt(max(sq, 0.0))


def cost(model: SlhModel, psi, state: ApproxState) -> float:
    """Residual with the reference state norm fixed at one."""
    u, f = psi
    u = np.asarray(u, dtype=complex)
    sq = 1.0 - 2.0 * _overlap_sum(model, u, f, state) + approx_norm(state) ** 2
    value = math.sqrt(max(sq, 0.0))
    assert value >= 0.0
    return value


# ---------------------------------------------------------------------------
# Optimization
# ---------------------------------------------------------------------------

@dataclass
class OptimizeSchedule:
    """Search configuration for :func:`optimize`.

    block_size=None runs one joint simplex search over all free amplitude
    values; a positive block_size sweeps the partition block by block,
    minimizing the full-horizon cost over one block at a time. With
    optimize_u the system vectors are not searched: they are solved exactly
    from the terms' Gram system (restricted to the first u_support
    components when set, frozen tails handled exactly). u_penalty > 0
    damps that solve toward small coefficients -- the exact minimizer of an
    ill-conditioned Gram system cancels huge terms against each other, which
    is poison for certificates whose rate sums are weighted by sum_j ||u_j||.
    The reported cost is always the true undamped residual.
    """

    seed: int = 0
    restarts: int = 3
    max_iter: int | None = None
    fatol: float = 1e-10
    xatol: float = 1e-7
    u_support: int | None = None
    restart_scale: float = 0.05
    block_size: int | None = None
    optimize_u: bool = True
    u_penalty: float = 0.0


@dataclass
class OptimizeResult:
    state: ApproxState
    cost: float
    nfev: int
    search_failure: bool = False


def _expm2(M: np.ndarray) -> np.ndarray:
    """Closed-form exponential of a 2x2 complex matrix."""
    mu = 0.5 * (M[0, 0] + M[1, 1])
    a = M[0, 0] - mu
    b = M[0, 1]
    c = M[1, 0]
    d2 = a * a + b * c
    d = np.sqrt(d2)
    if abs(d) < 1e-6:
        ch = 1.0 + d2 / 2.0 + d2 * d2 / 24.0
        sh = 1.0 + d2 / 6.0 + d2 * d2 / 120.0
    else:
        ch = np.cosh(d)
        sh = np.sinh(d) / d
    return np.exp(mu) * np.array(
        [[ch + sh * a, sh * b], [sh * c, ch - sh * a]], dtype=complex
    )


def _expm(M: np.ndarray) -> np.ndarray:
    if M.shape == (2, 2):
        return _expm2(M)
    return scipy.linalg.expm(M)


def _solve_coefficients(kappa, b, support, us, ws, qs, penalty=0.0):
    """Minimizer over the support components of every u_j.

    Minimizes C0 - 2 Re(v^dag c) + c^dag (kappa (x) I) c where the constant
    carries the frozen tails; returns (cost, solved u list). kappa is the
    field Gram exp<g_i, g_j>, b[j, a] = w_j (u^dag C_j)[a] on the support.

    penalty > 0 adds a ridge penalty * sum_j kappa[j,j] ||c_j||^2 to the
    solve (Levenberg damping by the Gram diagonal, i.e. the squared term
    weights ||u_j||^2 ||e(g_j)||^2), which suppresses the large cancelling
    coefficients an ill-conditioned exact solve produces. The returned cost
    is the true residual at the damped solution, not the penalized value.
    """
    L = len(us)
    s = support
    if not (
        np.all(np.isfinite(kappa.view(float)))
        and np.all(np.isfinite(b.view(float)))
        and all(np.all(np.isfinite(q.view(float))) for q in qs)
    ):
        return math.inf, us
    tails = [u.copy() for u in us]
    for r in tails:
        r[:s] = 0.0
    c0 = 1.0
    for j in range(L):
        for l in range(L):
            c0 += (kappa[j, l] * np.vdot(tails[j], tails[l])).real
    for j in range(L):
        c0 -= 2.0 * ws[j] * (qs[j] @ tails[j]).real

    M = np.kron(kappa, np.eye(s))
    v = np.conj(b).reshape(L * s)
    if penalty > 0.0:
        damped = M + penalty * np.diag(np.repeat(np.diag(kappa).real, s))
        cstar, *_ = np.linalg.lstsq(damped, v, rcond=None)
        value = c0 - 2.0 * float(np.vdot(v, cstar).real) + float(
            np.vdot(cstar, M @ cstar).real
        )
    else:
        cstar, *_ = np.linalg.lstsq(M, v, rcond=None)
        value = c0 - float(np.vdot(v, cstar).real)
    solved = []
    for j in range(L):
        u = tails[j]
        u[:s] = cstar[j * s:(j + 1) * s]
        solved.append(u)
    return math.sqrt(max(value, 0.0)), solved


class _CostEngine:
    """Fast cost evaluation for fixed (model, u, f) and a term template.

    Bypasses the shared semigroup caches: candidates never repeat, so caching
    them would only grow memory. Generators are assembled as
    G(beta) = G0 + sum_j beta_j D_j - (|beta|^2 / 2) I with G0, D_j frozen
    per refined interval.
    """

    def __init__(self, model: SlhModel, u, f: SimpleFunction, template: ApproxState,
                 u_support: int | None = None, u_penalty: float = 0.0):
        self.model = model
        self.u = np.asarray(u, dtype=complex)
        self.dim = model.dim
        self.failed = False
        self.support = min(u_support or self.dim, self.dim)
        self.u_penalty = u_penalty

        base = -0.5 * sum(adjoint(L) @ L for L in model.L) + 1j * model.H
        Sd = [[adjoint(model.S[j][i]) for i in range(model.m)] for j in range(model.m)]
        eye = np.eye(self.dim, dtype=complex)

        # Per term: refine f against the term's partition once; record for each
        # refined interval its duration, f-value, frozen alpha-part generator
        # G0 and the beta coefficient matrices D_j, plus the map back to the
        # term's own interval index.
        self.plans = []
        for _, g in template.terms:
            fr, gr = refine_common(f, g)
            dts = fr.durations()
            idx = np.searchsorted(g.breakpoints, fr.breakpoints[:-1], side="right") - 1
            pieces = []
            for p in range(fr.n_intervals):
                alpha = fr.values[p]
                G0 = base.copy()
                for j in range(self.model.m):
                    for i in range(self.model.m):
                        G0 -= np.conj(alpha[i]) * (Sd[j][i] @ model.L[j])
                G0 -= 0.5 * float(np.vdot(alpha, alpha).real) * eye
                D = []
                for j in range(self.model.m):
                    Dj = adjoint(model.L[j]).astype(complex)
                    for i in range(self.model.m):
                        Dj = Dj + np.conj(alpha[i]) * Sd[j][i]
                    D.append(Dj)
                pieces.append((float(dts[p]), int(idx[p]), G0, D))
            self.plans.append(pieces)

    def chain_row(self, j: int, gj_values) -> np.ndarray:
        """u^dag T^(0) ... T^(P-1) for term j with candidate amplitude rows."""
        row = self.u.conj()
        eye = np.eye(self.dim, dtype=complex)
        for dt, gi, G0, D in self.plans[j]:
            beta = gj_values[gi]
            G = G0 + sum(beta[c] * D[c] for c in range(self.model.m))
            G = G - 0.5 * float(np.vdot(beta, beta).real) * eye
            row = row @ _expm(G * dt)
        return row

    def evaluate(self, us, vals_list, template, solve_u: bool):
        """(cost, u list) at candidate amplitude values.

        With solve_u the returned u_j minimize the cost exactly for these
        amplitudes; otherwise the given us are used as-is.
        """
        L = len(vals_list)
        gs = [
            SimpleFunction(g.breakpoints, vals)
            for vals, (_, g) in zip(vals_list, template.terms)
        ]
        kappa = np.empty((L, L), dtype=complex)
        for i in range(L):
            for l in range(L):
                kappa[i, l] = exp_inner(gs[i], gs[l])
        ws = [math.sqrt(max(kappa[j, j].real, 0.0)) for j in range(L)]
        qs = [self.chain_row(j, vals_list[j]) for j in range(L)]

        if solve_u:
            s = self.support
            b = np.array([ws[j] * qs[j][:s] for j in range(L)])
            value, solved = _solve_coefficients(
                kappa, b, s, us, ws, qs, self.u_penalty
            )
            if not np.isfinite(value):
                self.failed = True
                return SEARCH_PENALTY, us
            return value, solved

        total = 1.0
        for j in range(L):
            total -= 2.0 * ws[j] * (qs[j] @ us[j]).real
        for i in range(L):
            for l in range(L):
                total += (np.vdot(us[i], us[l]) * kappa[i, l]).real
        if not np.isfinite(total):
            self.failed = True
            return SEARCH_PENALTY, us
        return math.sqrt(max(total, 0.0)), us


def _pack_values(state: ApproxState):
    """Flatten amplitude values to a real vector; return vector + shapes."""
    xs = []
    shapes = []
    for _, g in state.terms:
        shapes.append(g.values.shape)
        flat = g.values.ravel()
        xs.extend(flat.real)
        xs.extend(flat.imag)
    return np.asarray(xs, dtype=float), shapes


def _unpack_values(x, shapes):
    vals = []
    pos = 0
    for shape in shapes:
        n = int(np.prod(shape))
        vals.append((x[pos:pos + n] + 1j * x[pos + n:pos + 2 * n]).reshape(shape))
        pos += 2 * n
    return vals


def _joint_search(model, psi, initial, schedule: OptimizeSchedule):
    u, f = psi
    engine = _CostEngine(model, u, f, initial, schedule.u_support,
                         schedule.u_penalty)
    x0, shapes = _pack_values(initial)
    us0 = [uj.astype(complex).copy() for uj, _ in initial.terms]

    def objective(x):
        value, _ = engine.evaluate(
            us0, _unpack_values(x, shapes), initial, schedule.optimize_u
        )
        return value

    rng = np.random.default_rng(schedule.seed)
    best_x, best_val = x0, objective(x0)
    nfev = 1
    maxiter = schedule.max_iter or 400 * x0.size
    for trial in range(max(1, schedule.restarts)):
        start = x0 if trial == 0 else best_x + schedule.restart_scale * rng.standard_normal(x0.size)
        res = scipy.optimize.minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={
                "maxiter": maxiter,
                "fatol": schedule.fatol,
                "xatol": schedule.xatol,
                "adaptive": x0.size > 12,
            },
        )
        nfev += res.nfev
        if res.fun < best_val:
            best_val, best_x = res.fun, res.x
    vals = _unpack_values(best_x, shapes)
    _, us = engine.evaluate(us0, vals, initial, schedule.optimize_u)
    terms = [
        (uj, SimpleFunction(g.breakpoints, v))
        for uj, v, (_, g) in zip(us, vals, initial.terms)
    ]
    return ApproxState(terms, label=initial.label), nfev, engine.failed


class _BlockOptimizer:
    """Sequential block-coordinate descent for many-interval amplitudes.

    All terms share one global partition. Blocks are swept left to right,
    each sweep minimizing the FULL-horizon cost over one block of one term's
    amplitude values while everything else stays fixed, so the final-time
    objective decreases monotonically. The chain overlap for term j is
    u^dag T^(0) ... T^(P-1) u_j; the row u^dag T^(0) ... T^(committed-1) is
    cached per term and the unswept tail enters through per-term suffix
    products T^(hi) ... T^(P-1) (valid for a whole pass, since later blocks
    keep their current values until their own sweep). A candidate block
    therefore only costs block_size small exponentials plus one small
    matrix-vector product. Gram data (amplitude L2 inner products) is kept
    as committed prefixes, per-candidate block contributions and a
    right-cumulative tail; after every block the system vectors are
    re-solved exactly from the Gram system.
    """

    def __init__(self, model, psi, initial: ApproxState, schedule: OptimizeSchedule):
        self.model = model
        self.u, self.f = psi
        self.u = np.asarray(self.u, dtype=complex)
        self.schedule = schedule
        self.nfev = 0
        self.failed = False

        g0 = initial.terms[0][1]
        for _, g in initial.terms:
            if not np.array_equal(g.breakpoints, g0.breakpoints):
                raise PartitionError("block mode needs one shared partition")
        self.breakpoints = g0.breakpoints
        self.dts = np.diff(self.breakpoints)
        self.P = len(self.dts)
        self.m = model.m
        # f must be constant per global interval for the fused generator form.
        fr = self.f.with_breakpoints(self.breakpoints)
        self.alphas = fr.values

        base = -0.5 * sum(adjoint(L) @ L for L in model.L) + 1j * model.H
        Sd = [[adjoint(model.S[j][i]) for i in range(model.m)] for j in range(model.m)]
        eye = np.eye(model.dim, dtype=complex)
        self.G0 = []
        self.D = []
        for p in range(self.P):
            alpha = self.alphas[p]
            G0 = base.copy()
            for j in range(model.m):
                for i in range(model.m):
                    G0 -= np.conj(alpha[i]) * (Sd[j][i] @ model.L[j])
            G0 -= 0.5 * float(np.vdot(alpha, alpha).real) * eye
            self.G0.append(G0)
            D = []
            for j in range(model.m):
                Dj = adjoint(model.L[j]).astype(complex)
                for i in range(model.m):
                    Dj = Dj + np.conj(alpha[i]) * Sd[j][i]
                D.append(Dj)
            self.D.append(D)
        self.eye = eye

        self.us = [u.astype(complex).copy() for u, _ in initial.terms]
        self.vals = [g.values.copy() for _, g in initial.terms]
        self.L = len(self.us)
        self.support = min(schedule.u_support or model.dim, model.dim)
        # Committed prefixes (over intervals [0, committed)).
        self.rows = [self.u.conj().copy() for _ in range(self.L)]
        self.g_inner = np.zeros((self.L, self.L), dtype=complex)
        self.committed = 0
        # Tail data (suffix chain products and right-cumulative Gram sums),
        # rebuilt once per pass from the values the unswept blocks carry.
        self.suffix = None
        self.tail_gram = None

    def _build_tail(self):
        dim = self.model.dim
        eye = np.eye(dim, dtype=complex)
        self.suffix = []
        for i in range(self.L):
            acc = [eye]
            for p in range(self.P - 1, -1, -1):
                acc.append(self._interval_T(p, self.vals[i][p]) @ acc[-1])
            acc.reverse()  # suffix[i][p] = T(p) ... T(P-1), suffix[i][P] = I
            self.suffix.append(acc)
        self.tail_gram = np.zeros((self.P + 1, self.L, self.L), dtype=complex)
        for p in range(self.P - 1, -1, -1):
            block = np.empty((self.L, self.L), dtype=complex)
            for i in range(self.L):
                for l in range(self.L):
                    block[i, l] = self.dts[p] * np.vdot(self.vals[i][p], self.vals[l][p])
            self.tail_gram[p] = self.tail_gram[p + 1] + block

    def _interval_T(self, p: int, beta) -> np.ndarray:
        G = self.G0[p] + sum(beta[c] * self.D[p][c] for c in range(self.m))
        G = G - 0.5 * float(np.vdot(beta, beta).real) * self.eye
        return _expm(G * self.dts[p])

    def _block_row(self, j: int, lo: int, hi: int, vals) -> np.ndarray:
        row = self.rows[j]
        for p in range(lo, hi):
            row = row @ self._interval_T(p, vals[p - lo])
        return row

    def _horizon_cost(self, kappa, qs, us, solve_u: bool):
        ws = [math.sqrt(max(kappa[j, j].real, 0.0)) for j in range(self.L)]
        if solve_u:
            s = self.support
            b = np.array([ws[j] * qs[j][:s] for j in range(self.L)])
            value, solved = _solve_coefficients(
                kappa, b, s, us, ws, qs, self.schedule.u_penalty
            )
            if not np.isfinite(value):
                self.failed = True
                return SEARCH_PENALTY, us
            return value, solved
        total = 1.0
        for j in range(self.L):
            total -= 2.0 * ws[j] * (qs[j] @ us[j]).real
        for i in range(self.L):
            for l in range(self.L):
                total += (np.vdot(us[i], us[l]) * kappa[i, l]).real
        if not np.isfinite(total):
            self.failed = True
            return SEARCH_PENALTY, us
        return math.sqrt(max(total, 0.0)), us

    def _sweep_block(self, lo: int, hi: int):
        """One per-term pass over block [lo, hi), full-horizon objective."""
        dts = self.dts[lo:hi, None]
        nb = hi - lo
        solve_u = self.schedule.optimize_u
        for j in range(self.L):
            # Rows and Gram contributions of the other terms are fixed for
            # this pass; only term j's block changes per candidate.
            other_qs = [
                self._block_row(i, lo, hi, self.vals[i][lo:hi]) @ self.suffix[i][hi]
                for i in range(self.L)
            ]
            base_inner = self.g_inner + self.tail_gram[hi]
            for i in range(self.L):
                for l in range(self.L):
                    base_inner[i, l] += np.sum(
                        dts * np.conj(self.vals[i][lo:hi]) * self.vals[l][lo:hi]
                    )

            vj_cur = self.vals[j][lo:hi].copy()
            suffix_j = self.suffix[j][hi]

            def objective(x, j=j):
                self.nfev += 1
                bv = (x[:nb * self.m] + 1j * x[nb * self.m:]).reshape(nb, self.m)
                kappa_in = base_inner.copy()
                for i in range(self.L):
                    if i == j:
                        continue
                    delta = np.sum(dts * np.conj(self.vals[i][lo:hi]) * (bv - vj_cur))
                    kappa_in[i, j] += delta
                    kappa_in[j, i] += np.conj(delta)
                kappa_in[j, j] += np.sum(
                    dts * (np.abs(bv) ** 2 - np.abs(vj_cur) ** 2)
                )
                qs = list(other_qs)
                qs[j] = self._block_row(j, lo, hi, bv) @ suffix_j
                with np.errstate(over="ignore"):
                    kappa = np.exp(kappa_in)
                value, _ = self._horizon_cost(kappa, qs, self.us, solve_u)
                return value

            x0 = np.concatenate([vj_cur.ravel().real, vj_cur.ravel().imag])
            res = scipy.optimize.minimize(
                objective,
                x0,
                method="Nelder-Mead",
                options={
                    "maxiter": self.schedule.max_iter or 120 * x0.size,
                    "fatol": self.schedule.fatol,
                    "xatol": self.schedule.xatol,
                    "adaptive": True,
                },
            )
            bv = (res.x[:nb * self.m] + 1j * res.x[nb * self.m:]).reshape(nb, self.m)
            self.vals[j][lo:hi] = bv

        # Re-solve the system vectors with every block at its current value.
        qs = [
            self._block_row(i, lo, hi, self.vals[i][lo:hi]) @ self.suffix[i][hi]
            for i in range(self.L)
        ]
        kappa_in = self.g_inner + self.tail_gram[hi]
        for i in range(self.L):
            for l in range(self.L):
                kappa_in[i, l] += np.sum(
                    dts * np.conj(self.vals[i][lo:hi]) * self.vals[l][lo:hi]
                )
        _, self.us = self._horizon_cost(np.exp(kappa_in), qs, self.us, solve_u)

    def _commit_block(self, lo, hi):
        dts = self.dts[lo:hi]
        for i in range(self.L):
            self.rows[i] = self._block_row(i, lo, hi, self.vals[i][lo:hi])
            for l in range(self.L):
                self.g_inner[i, l] += np.sum(
                    dts[:, None] * np.conj(self.vals[i][lo:hi]) * self.vals[l][lo:hi]
                )
        self.committed = hi

    def run(self):
        bs = self.schedule.block_size
        self._build_tail()
        for lo in range(0, self.P, bs):
            hi = min(lo + bs, self.P)
            self._sweep_block(lo, hi)
            self._commit_block(lo, hi)
        terms = [
            (self.us[i], SimpleFunction(self.breakpoints, self.vals[i]))
            for i in range(self.L)
        ]
        return ApproxState(terms), self.nfev


def optimize(model: SlhModel, psi, initial: ApproxState,
             schedule: OptimizeSchedule | None = None) -> OptimizeResult:
    """Minimize cost(model, psi, .) starting from `initial`.

    Derivative-free simplex search over the real and imaginary parts of every
    free amplitude value, with system vectors solved exactly per candidate
    (schedule.optimize_u) or held at their initial values. Never returns a
    state worse than `initial`; a non-finite cost encountered during the
    search sets `search_failure` and the best finite iterate is returned.
    """
    schedule = schedule or OptimizeSchedule()
    initial_cost = cost(model, psi, initial)

    if schedule.block_size:
        opt = _BlockOptimizer(model, psi, initial, schedule)
        state, nfev = opt.run()
        failed = opt.failed
    else:
        state, nfev, failed = _joint_search(model, psi, initial, schedule)

    final_cost = cost(model, psi, state)
    if final_cost > initial_cost:
        state, final_cost = initial, initial_cost
    return OptimizeResult(
        state=state, cost=final_cost, nfev=nfev, search_failure=failed
    )
