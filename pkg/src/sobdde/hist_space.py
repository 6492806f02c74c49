"""Piecewise-linear functions on uniform grids with Sobolev-type norms.

A :class:`GridFunction` is the continuous piecewise-linear interpolant of
nodal values on a uniform grid.  It is an exact element of every
W^{1,p}([a,b], R^N): the a.e. derivative is the piecewise-constant slope
function, so the norm

    ||x|| = ( |x(a)|^p + int_a^b |x'(s)|^p ds )^{1/p}

is computable in closed form.  All operations here are pure; instances are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, OutOfDomain

# Index-space tolerance for snapping near-node arguments to the node.
_SNAP = 1e-8


def vector_norms(arr: np.ndarray, vec_norm: str) -> np.ndarray:
    """Row-wise vector norms of an (..., N) array."""
    if vec_norm == "L1":
        return np.sum(np.abs(arr), axis=-1)
    if vec_norm == "L2":
        return np.sqrt(np.sum(arr * arr, axis=-1))
    if vec_norm == "Linf":
        return np.max(np.abs(arr), axis=-1)
    raise ValueError(f"unknown vector norm {vec_norm!r}")


@dataclass(frozen=True)
class PNorm:
    """Integrability exponent p (finite, >= 1) plus the vector norm on R^N.

    The Hoelder conjugate q is derived, never set independently; q = inf
    is represented through the exponent 1/q = 1 - 1/p (zero for p = 1).
    """

    p: float = 2.0
    vec_norm: str = "L2"

    def __post_init__(self):
        if not (self.p >= 1.0 and math.isfinite(self.p)):
            raise ValueError("p must be finite and >= 1")
        if self.vec_norm not in ("L1", "L2", "Linf"):
            raise ValueError("vec_norm must be one of L1, L2, Linf")

    @property
    def inv_q(self) -> float:
        """1/q where q is the Hoelder conjugate of p (0 when p = 1)."""
        return 1.0 - 1.0 / self.p

    @property
    def q(self) -> float:
        return math.inf if self.p == 1.0 else self.p / (self.p - 1.0)

    def vec(self, arr: np.ndarray) -> np.ndarray:
        return vector_norms(arr, self.vec_norm)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Continuous piecewise-linear function on the uniform grid of [a, b].

    Parameters
    ----------
    a, b : endpoints, a < b.
    values : array of shape (M+1, N); row k is the value at a + k*h,
        h = (b - a)/M.  M >= 1 is required.
    """

    a: float
    b: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if vals.ndim != 2 or vals.shape[0] < 2:
            raise ValueError("values must have shape (M+1, N) with M >= 1")
        if not self.a < self.b:
            raise ValueError("need a < b")
        if not np.all(np.isfinite(vals)):
            raise ValueError("nodal values must be finite")
        vals = np.ascontiguousarray(vals)
        vals.flags.writeable = False
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "values", vals)

    # -- basic geometry -------------------------------------------------

    @property
    def m(self) -> int:
        """Number of subintervals."""
        return self.values.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.m

    def nodes(self) -> np.ndarray:
        return self.a + np.arange(self.m + 1) * self.h

    def slopes(self) -> np.ndarray:
        """Piecewise-constant a.e. derivative, shape (M, N)."""
        return np.diff(self.values, axis=0) / self.h

    # -- evaluation ------------------------------------------------------

    def _index(self, ts: np.ndarray) -> np.ndarray:
        """Fractional grid indices with node snapping and domain check."""
        s = (np.asarray(ts, dtype=float) - self.a) / self.h
        snapped = np.rint(s)
        s = np.where(np.abs(s - snapped) <= _SNAP, snapped, s)
        dom_tol = 1e-12 * self.m  # 1e-12*(b-a) expressed in index units
        if np.any(s < -dom_tol) or np.any(s > self.m + dom_tol):
            t_bad = np.asarray(ts, dtype=float)[
                (s < -dom_tol) | (s > self.m + dom_tol)
            ]
            raise OutOfDomain(
                f"t={t_bad.flat[0]!r} outside [{self.a}, {self.b}]"
            )
        return np.clip(s, 0.0, float(self.m))

    def evaluate_many(self, ts) -> np.ndarray:
        """Linear interpolation at each t; exact at nodes. Shape (K, N)."""
        s = self._index(np.atleast_1d(ts))
        k = np.minimum(s.astype(int), self.m - 1)
        theta = (s - k)[:, None]
        return (1.0 - theta) * self.values[k] + theta * self.values[k + 1]

    def evaluate(self, t: float) -> np.ndarray:
        return self.evaluate_many([t])[0]

    def derivative_many(self, ts) -> np.ndarray:
        """A.e. derivative at each t.

        At interior nodes the right subinterval's slope is used; at t = b
        the last subinterval's (fixed right-continuous convention).
        """
        s = self._index(np.atleast_1d(ts))
        k = np.minimum(np.floor(s).astype(int), self.m - 1)
        return self.slopes()[k]

    def derivative_at(self, t: float) -> np.ndarray:
        return self.derivative_many([t])[0]

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "dim": self.dim,
            "values": self.values.tolist(),
        }

    @staticmethod
    def from_json(obj: dict) -> "GridFunction":
        try:
            a, b, dim = obj["a"], obj["b"], obj["dim"]
            values = np.asarray(obj["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad GridFunction JSON: {exc}") from exc
        gf = GridFunction(a, b, values)
        if gf.dim != int(dim):
            raise ValueError(
                f"declared dim {dim} != value rows of width {gf.dim}"
            )
        return gf

    def to_csv(self, path) -> None:
        """One row per node: t, x_1..x_N (17 significant digits)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x_{i+1}" for i in range(self.dim)])
            for t, row in zip(self.nodes(), self.values):
                writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])

    @staticmethod
    def from_csv(path) -> "GridFunction":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        data = np.array([[float(v) for v in row] for row in rows[1:]])
        return GridFunction(data[0, 0], data[-1, 0], data[:, 1:])


def dumps_grid_function(x: GridFunction) -> str:
    return json.dumps(x.to_json())


# -- norms ----------------------------------------------------------------


def lp_derivative_norm(x: GridFunction, nrm: PNorm) -> float:
    """L^p norm of the piecewise-constant derivative (exact)."""
    mags = nrm.vec(x.slopes())
    return float(np.sum(x.h * mags**nrm.p) ** (1.0 / nrm.p))


def w1p_norm(x: GridFunction, nrm: PNorm) -> float:
    """( |x(a)|^p + sum_k h*|slope_k|^p )^{1/p}, exact for this class."""
    base = float(nrm.vec(x.values[0]))
    deriv = np.sum(x.h * nrm.vec(x.slopes()) ** nrm.p)
    return float((base**nrm.p + deriv) ** (1.0 / nrm.p))


def sup_norm(x: GridFunction, nrm: PNorm) -> float:
    """Supremum norm; attained at a node since |x(.)| is convex per segment."""
    return float(np.max(nrm.vec(x.values)))


def norm_equivalence_bounds(x: GridFunction, nrm: PNorm) -> tuple[bool, bool]:
    """Check both sides of the equivalence with ||.||_C + ||x'||_{L^p}.

    Lower: ||x||_{W^{1,p}} <= sup + ||x'||_p.  Upper: sup + ||x'||_p <=
    2^{1/q} [ (b-a)^{1/q} + 1 ] ||x||_{W^{1,p}}.  Returns both truth values.
    """
    w = w1p_norm(x, nrm)
    mixed = sup_norm(x, nrm) + lp_derivative_norm(x, nrm)
    slack = 1.0 + 1e-12
    const = 2.0**nrm.inv_q * ((x.b - x.a) ** nrm.inv_q + 1.0)
    return (w <= mixed * slack, mixed <= const * w * slack)


# -- structural operations -------------------------------------------------


def history_at(x: GridFunction, t: float) -> GridFunction:
    """Restrict-and-shift: the segment x(t + theta), theta in [-R, 0].

    R is the distance from x's left endpoint to 0 (x lives on [-R, T]).
    When t is a grid multiple this is a pure index shift (bit-exact);
    otherwise nodal values are obtained by linear interpolation.
    """
    if x.a >= 0:
        raise GridMismatch("history extraction needs a domain [-R, T], R > 0")
    h = x.h
    n_hist = int(round(-x.a / h))
    if abs(n_hist * h + x.a) > 1e-9 * h or n_hist < 1:
        raise GridMismatch("left endpoint is not a grid multiple of h")
    if t < -1e-12 * (x.b - x.a) or t > x.b + 1e-12 * (x.b - x.a):
        raise OutOfDomain(f"history time {t} outside [0, {x.b}]")
    j = t / h
    if abs(j - round(j)) <= _SNAP:
        j0 = int(round(j))
        vals = x.values[j0 : j0 + n_hist + 1]
        if vals.shape[0] != n_hist + 1:
            raise OutOfDomain(f"history time {t} beyond right endpoint")
        return GridFunction(x.a, 0.0, vals)
    thetas = x.a + np.arange(n_hist + 1) * h
    return GridFunction(x.a, 0.0, x.evaluate_many(t + thetas))


def static_prolongation(phi: GridFunction, T: float) -> GridFunction:
    """Extend phi from [-R, 0] to [-R, T] by freezing the value phi(0).

    T must be a positive grid multiple so no interpolation occurs; the
    W^{1,p} norm of the output equals that of phi exactly (the appended
    segments contribute zero slope).
    """
    if abs(phi.b) > 1e-9 * phi.h:
        raise GridMismatch("prolongation expects a history on [-R, 0]")
    n = T / phi.h
    if T <= 0 or abs(n - round(n)) > 1e-9 or round(n) < 1:
        raise GridMismatch(
            f"T={T} is not a positive multiple of the grid step {phi.h}"
        )
    n = int(round(n))
    tail = np.tile(phi.values[-1], (n, 1))
    return GridFunction(phi.a, T, np.vstack([phi.values, tail]))


def combine(
    alpha: float, x: GridFunction, beta: float, y: GridFunction
) -> GridFunction:
    """Nodal linear combination alpha*x + beta*y on identical grids."""
    span = x.b - x.a
    if (
        x.values.shape != y.values.shape
        or abs(x.a - y.a) > 1e-12 * span
        or abs(x.b - y.b) > 1e-12 * span
    ):
        raise GridMismatch("operands live on different grids")
    return GridFunction(x.a, x.b, alpha * x.values + beta * y.values)


def restrict(x: GridFunction, t_lo: float, t_hi: float) -> GridFunction:
    """Grid-aligned restriction to [t_lo, t_hi] (index slice)."""
    h = x.h
    j0 = (t_lo - x.a) / h
    j1 = (t_hi - x.a) / h
    if abs(j0 - round(j0)) > _SNAP or abs(j1 - round(j1)) > _SNAP:
        raise GridMismatch("restriction endpoints must be grid nodes")
    j0, j1 = int(round(j0)), int(round(j1))
    if j0 < 0 or j1 > x.m or j1 - j0 < 1:
        raise OutOfDomain(f"[{t_lo}, {t_hi}] is not inside [{x.a}, {x.b}]")
    return GridFunction(t_lo, t_hi, x.values[j0 : j1 + 1])
