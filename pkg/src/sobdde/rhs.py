"""Right-hand sides f(u, v) with Jacobians and local Lipschitz estimation.

Models evaluate vectorized: u and v have shape (..., N) and f returns
(..., N); Jacobians return (..., N, N).  All models are immutable and
their callables pure, so they are safe to share between threads.

The product space R^N x R^N carries the sum norm |u| + |v| throughout;
with that choice the operator norm of the full Jacobian [D1f D2f] equals
max(||D1f||, ||D2f||) in the operator norm induced by the vector norm.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .errors import DomainViolation, NonFinite
from .hist_space import vector_norms

_FD_STEP = float(np.finfo(float).eps) ** (1.0 / 3.0)


@dataclass(frozen=True)
class RhsModel:
    """f: R^N x R^N -> R^N with partial Jacobians.

    jac_kind is "analytic" when jac1/jac2 come from closed forms and
    "fd" when they are central finite differences of eval (smoothness of
    the underlying f at scale ~eps^{1/3} is assumed, not verified).
    """

    dim: int
    eval_fn: Callable = field(repr=False)
    jac1_fn: Callable = field(repr=False)
    jac2_fn: Callable = field(repr=False)
    jac_kind: str = "analytic"
    name: str = "custom"

    def eval(self, u, v) -> np.ndarray:
        out = np.asarray(self.eval_fn(np.asarray(u, float), np.asarray(v, float)), float)
        if not np.all(np.isfinite(out)):
            raise NonFinite(f"rhs {self.name!r} produced a non-finite value")
        return out

    def jac(self, u, v, which: int) -> np.ndarray:
        if which == 1:
            out = self.jac1_fn(np.asarray(u, float), np.asarray(v, float))
        elif which == 2:
            out = self.jac2_fn(np.asarray(u, float), np.asarray(v, float))
        else:
            raise DomainViolation("which must be 1 or 2")
        out = np.asarray(out, float)
        if not np.all(np.isfinite(out)):
            raise NonFinite(f"rhs {self.name!r} Jacobian is non-finite")
        return out


def eval_rhs(m: RhsModel, u, v) -> np.ndarray:
    return m.eval(u, v)


def jacobian(m: RhsModel, u, v, which: int) -> np.ndarray:
    return m.jac(u, v, which)


def fd_jacobian(eval_fn: Callable, u: np.ndarray, v: np.ndarray, which: int) -> np.ndarray:
    """Central-difference Jacobian, step eps^{1/3}*max(1,|coord|) per coordinate.

    Accepts batched inputs of shape (K, N); returns (K, N, N).
    """
    u = np.atleast_2d(np.asarray(u, float))
    v = np.atleast_2d(np.asarray(v, float))
    k, n = u.shape
    target = u if which == 1 else v
    out = np.empty((k, n, n))
    for j in range(n):
        step = _FD_STEP * np.maximum(1.0, np.abs(target[:, j]))
        hi = target.copy()
        lo = target.copy()
        hi[:, j] += step
        lo[:, j] -= step
        if which == 1:
            f_hi, f_lo = eval_fn(hi, v), eval_fn(lo, v)
        else:
            f_hi, f_lo = eval_fn(u, hi), eval_fn(u, lo)
        out[:, :, j] = (np.asarray(f_hi) - np.asarray(f_lo)) / (2.0 * step)[:, None]
    return out


# -- operator norms ---------------------------------------------------------


def op_norm(mat: np.ndarray, vec_norm: str) -> float:
    """Operator norm of one N x N matrix w.r.t. the given vector norm."""
    return float(op_norms(np.asarray(mat, float)[None, :, :], vec_norm)[0])


def op_norms(mats: np.ndarray, vec_norm: str) -> np.ndarray:
    """Batched operator norms of a (K, N, N) stack.

    L1 and Linf use the exact column/row-sum formulas; L2 uses power
    iteration on A^T A to relative tolerance 1e-10.
    """
    mats = np.asarray(mats, float)
    if vec_norm == "L1":
        return np.max(np.sum(np.abs(mats), axis=1), axis=-1)
    if vec_norm == "Linf":
        return np.max(np.sum(np.abs(mats), axis=2), axis=-1)
    if vec_norm != "L2":
        raise ValueError(f"unknown vector norm {vec_norm!r}")
    k, n, _ = mats.shape
    gram = np.einsum("kij,kil->kjl", mats, mats)
    # Deterministic start with unequal components so no eigendirection is
    # systematically missed.
    vec = np.tile(1.0 + 1e-3 * np.arange(n), (k, 1))
    vec /= np.linalg.norm(vec, axis=1, keepdims=True)
    prev = np.zeros(k)
    for _ in range(500):
        nxt = np.einsum("kjl,kl->kj", gram, vec)
        lam = np.linalg.norm(nxt, axis=1)
        done = lam <= 1e-300
        with np.errstate(invalid="ignore", divide="ignore"):
            vec = np.where(done[:, None], vec, nxt / np.where(done, 1.0, lam)[:, None])
        if np.all(np.abs(lam - prev) <= 1e-10 * np.maximum(lam, 1e-300)):
            prev = lam
            break
        prev = lam
    return np.sqrt(prev)


# -- sampling-based bounds --------------------------------------------------


def _box_samples(lo: np.ndarray, hi: np.ndarray, count: int) -> np.ndarray:
    """Deterministic cover of a box: corners (capped), center, Halton points."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    d = lo.size
    pts = [0.5 * (lo + hi)]
    for signs in itertools.islice(itertools.product((0.0, 1.0), repeat=d), 64):
        pts.append(lo + np.asarray(signs) * (hi - lo))
    if count > 0:
        unit = qmc.Halton(d=d, scramble=False).random(count)
        pts.append(lo + unit * (hi - lo))
    return np.vstack([np.atleast_2d(p) for p in pts])


def lipschitz_estimate(
    m: RhsModel, box, samples: int = 128, vec_norm: str = "L2"
) -> float:
    """Sampled local Lipschitz constant of f on the box, with safety 1.5.

    box is (lo, hi), each of length 2N: bounds for (u, v) jointly.  The
    estimate is max over samples of max(||D1f||, ||D2f||) (sum norm on the
    pair) times 1.5; correctness is re-checked downstream by the measured
    contraction ratio.
    """
    if samples < 2:
        raise DomainViolation("need samples >= 2")
    lo, hi = box
    pts = _box_samples(np.asarray(lo, float), np.asarray(hi, float), samples)
    u, v = pts[:, : m.dim], pts[:, m.dim :]
    j1 = np.asarray(m.jac(u, v, 1), float).reshape(-1, m.dim, m.dim)
    j2 = np.asarray(m.jac(u, v, 2), float).reshape(-1, m.dim, m.dim)
    worst = max(np.max(op_norms(j1, vec_norm)), np.max(op_norms(j2, vec_norm)))
    return 1.5 * float(worst)


def magnitude_bound(m: RhsModel, box, vec_norm: str, samples: int = 128) -> float:
    """Sampled bound of |f| on the box (corners included, no safety factor)."""
    lo, hi = box
    pts = _box_samples(np.asarray(lo, float), np.asarray(hi, float), samples)
    vals = m.eval(pts[:, : m.dim], pts[:, m.dim :])
    return float(np.max(vector_norms(vals, vec_norm)))


# -- built-in registry -------------------------------------------------------


def _as_matrix(par, n: int) -> np.ndarray:
    arr = np.asarray(par, float)
    if arr.ndim == 0:
        return float(arr) * np.eye(n)
    if arr.shape != (n, n):
        raise DomainViolation(f"matrix parameter must be scalar or {n}x{n}")
    return arr


def _const_jac(mat: np.ndarray) -> Callable:
    def jac(u, v):
        lead = np.asarray(u).shape[:-1]
        return np.broadcast_to(mat, lead + mat.shape)

    return jac


def _diag_jac(fn: Callable) -> Callable:
    # fn maps (..., N) entries to the diagonal entries of the Jacobian
    def jac(u, v):
        d = fn(u, v)
        n = d.shape[-1]
        out = np.zeros(d.shape + (n,))
        idx = np.arange(n)
        out[..., idx, idx] = d
        return out

    return jac


def make_linear(a, b, dim: int | None = None) -> RhsModel:
    """f(u, v) = A u + B v."""
    arr = np.asarray(a, float)
    n = dim or (arr.shape[0] if arr.ndim == 2 else 1)
    amat, bmat = _as_matrix(a, n), _as_matrix(b, n)
    return RhsModel(
        dim=n,
        eval_fn=lambda u, v: u @ amat.T + v @ bmat.T,
        jac1_fn=_const_jac(amat),
        jac2_fn=_const_jac(bmat),
        name="linear",
    )


def make_pure_delay_linear(a, dim: int = 1) -> RhsModel:
    """f(u, v) = a v; the first slot is ignored."""
    amat = _as_matrix(a, dim)
    return RhsModel(
        dim=dim,
        eval_fn=lambda u, v: v @ amat.T,
        jac1_fn=_const_jac(np.zeros((dim, dim))),
        jac2_fn=_const_jac(amat),
        name="pure_delay_linear",
    )


def make_delayed_logistic(dim: int = 1) -> RhsModel:
    """Componentwise f_i(u, v) = u_i (1 - v_i)."""
    return RhsModel(
        dim=dim,
        eval_fn=lambda u, v: u * (1.0 - v),
        jac1_fn=_diag_jac(lambda u, v: 1.0 - v),
        jac2_fn=_diag_jac(lambda u, v: -u),
        name="delayed_logistic",
    )


def make_mackey_glass(beta=2.0, gamma=1.0, n=10, dim: int = 1) -> RhsModel:
    """f(u, v) = beta v/(1 + v^n) - gamma u, componentwise (n integer)."""
    n = int(n)

    def ev(u, v):
        vn = v**n
        return beta * v / (1.0 + vn) - gamma * u

    def d2(u, v):
        vn = v**n
        return beta * (1.0 + (1.0 - n) * vn) / (1.0 + vn) ** 2

    return RhsModel(
        dim=dim,
        eval_fn=ev,
        jac1_fn=_diag_jac(lambda u, v: np.full(np.shape(u), -gamma)),
        jac2_fn=_diag_jac(lambda u, v: d2(u, v)),
        name="mackey_glass",
    )


def make_ikeda(mu=2.0, dim: int = 1) -> RhsModel:
    """f(u, v) = mu sin(v) - u, componentwise."""
    return RhsModel(
        dim=dim,
        eval_fn=lambda u, v: mu * np.sin(v) - u,
        jac1_fn=_diag_jac(lambda u, v: np.full(np.shape(u), -1.0)),
        jac2_fn=_diag_jac(lambda u, v: mu * np.cos(v)),
        name="ikeda",
    )


BUILTINS = {
    "linear": make_linear,
    "pure_delay_linear": make_pure_delay_linear,
    "delayed_logistic": make_delayed_logistic,
    "mackey_glass": make_mackey_glass,
    "ikeda": make_ikeda,
}


def builtin_model(name: str, params: dict | None = None, dim: int | None = None) -> RhsModel:
    if name not in BUILTINS:
        raise DomainViolation(
            f"unknown builtin rhs {name!r}; choose from {sorted(BUILTINS)}"
        )
    params = dict(params or {})
    if dim is not None and name != "linear":
        params.setdefault("dim", dim)
    elif dim is not None:
        params["dim"] = dim
    return BUILTINS[name](**params)
