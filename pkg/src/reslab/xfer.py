"""Selberg zeta function of a Schottky group, computed two independent ways.

``zeta_det`` discretizes the Bowen-Series transfer operator by Chebyshev
collocation on the real diameter of every disk and takes ``det(I - A(s))``.
``zeta_cycle`` expands the Euler product over primitive classes in powers of
word length and truncates it (cycle expansion).
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import schottky as S
from .cycle import expand_product
from .errors import BranchFailure, IllConditioned, NoConvergence, NoRootBracket

LOGGER = logging.getLogger(__name__)

LEBESGUE_CAP = 1e6


def chebyshev_nodes(M):
    """First-kind Chebyshev points on [-1, 1] and their barycentric weights."""
    k = np.arange(M)
    theta = (2 * k + 1) * np.pi / (2 * M)
    return np.cos(theta), (-1.0) ** k * np.sin(theta)


def cardinal_matrix(nodes, weights, y):
    """``L[p, b]`` = value at ``y[p]`` of the Lagrange cardinal function of node ``b``."""
    diff = y[:, None] - nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    terms = weights[None, :] / diff
    L = terms / terms.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    L[rows] = exact[rows].astype(float)
    return L


def collocation_intervals(group):
    """Per-disk sub-interval of the real diameter that carries the collocation nodes.

    One contraction step: the hull of the images of all admissible disk
    diameters. The images of these intervals fall strictly inside them, and
    shrinking the domain shortens the oscillation of ``(g')^s`` along it,
    which is what limits accuracy at large ``|Im s|``.

    Returns
    -------
    centers, half_widths : (2r,) arrays
    """
    K = group.alphabet_size
    lo = group.centers - group.radii
    hi = group.centers + group.radii
    new_lo = np.full(K, np.inf)
    new_hi = np.full(K, -np.inf)
    for j in range(K):
        h = group.generators[group.partner(j)]
        for i in range(K):
            if i == group.partner(j):
                continue
            y = (h(lo[i]), h(hi[i]))
            new_lo[j] = min(new_lo[j], *y)
            new_hi[j] = max(new_hi[j], *y)
    return (new_lo + new_hi) / 2.0, (new_hi - new_lo) / 2.0


class TransferOperator:
    """Collocation structure of the Bowen-Series operator for fixed ``(group, M)``.

    ``A(s) = C * exp(s * logw)`` elementwise, so each new ``s`` costs one
    exponential and one multiply. Row ``(i, a)`` is node ``a`` of disk ``i``;
    column ``(j, b)`` is node ``b`` of disk ``j``; block ``(i, j)`` is empty
    when ``j`` is the partner of ``i``.
    """

    def __init__(self, group, M):
        if M < 4:
            raise ValueError("need at least 4 nodes per disk")
        self.group = group
        self.M = M
        K = group.alphabet_size
        t, w = chebyshev_nodes(M)
        centers, half = collocation_intervals(group)
        self.centers, self.half_widths = centers, half
        self.nodes = np.concatenate([centers[i] + half[i] * t for i in range(K)])
        N = K * M
        C = np.zeros((N, N))
        logw = np.zeros((N, N))
        for i in range(K):
            x = centers[i] + half[i] * t
            for j in range(K):
                if j == group.partner(i):
                    continue
                # branch g_{j->i}: the inverse of generator j, maps disk i into disk j
                h = group.generators[group.partner(j)]
                denom = h.c * x + h.d
                deriv = 1.0 / denom ** 2
                if not np.all(np.isfinite(deriv)) or np.any(deriv <= 0.0):
                    raise BranchFailure(f"branch {j + 1}->{i + 1} has non-positive derivative")
                u = (h(x) - centers[j]) / half[j]
                if np.any(np.abs(u) > 1.0 + 1e-12):
                    raise BranchFailure(f"branch {j + 1}->{i + 1} leaves disk {j + 1}")
                L = cardinal_matrix(t, w, u)
                leb = np.abs(L).sum(axis=1).max()
                if leb > LEBESGUE_CAP:
                    raise IllConditioned(f"Lebesgue constant {leb:.3e} exceeds {LEBESGUE_CAP:.1e}")
                C[i * M:(i + 1) * M, j * M:(j + 1) * M] = L
                logw[i * M:(i + 1) * M, j * M:(j + 1) * M] = (-2.0 * np.log(np.abs(denom)))[:, None]
        self.C = C
        self.logw = logw

    def matrix(self, s):
        if np.iscomplexobj(s) or isinstance(s, complex):
            return self.C * np.exp(complex(s) * self.logw)
        return self.C * np.exp(float(s) * self.logw)

    def det(self, s):
        A = self.matrix(s)
        return np.linalg.det(np.eye(len(A)) - A)


@lru_cache(maxsize=64)
def operator(group, M):
    """Cached ``TransferOperator``; groups hash by identity and are immutable."""
    return TransferOperator(group, M)


@dataclass(frozen=True)
class TransferDiscretization:
    s: complex
    M: int
    nodes: np.ndarray
    matrix: np.ndarray


def assemble_transfer(group, s, M):
    op = operator(group, M)
    return TransferDiscretization(complex(s), M, op.nodes, op.matrix(s))


@dataclass(frozen=True)
class ZetaValue:
    value: complex
    method: str
    truncation: tuple
    error_estimate: float


def zeta_det(group, s, M):
    """``det(I - A(s))`` with the error estimated against ``M - 4`` nodes."""
    value = operator(group, M).det(s)
    coarse = operator(group, M - 4).det(s) if M - 4 >= 4 else np.nan
    return ZetaValue(complex(value), "determinant", (M,), float(abs(value - coarse)))


def default_m_max(s):
    return int(math.ceil(abs(complex(s).imag) / 2.0 + 10))


class CycleExpansion:
    """Cycle-expanded Selberg product over the primitive classes of a group."""

    def __init__(self, group, max_word_length):
        self.group = group
        self.max_word_length = max_word_length
        self.word_lengths, self.lengths = S.length_spectrum(group, max_word_length)

    def coefficients(self, s, m_max=None):
        """Coefficients ``b_0..b_N`` of the product expanded in word length."""
        s = complex(s)
        if m_max is None:
            m_max = default_m_max(s)
        return expand_product(self.word_lengths, self._log_weight(s, m_max), self.max_word_length)

    def _log_weight(self, s, m_max):
        # one Euler factor per (class, m); weights e^{-(s+m) l}
        m = np.arange(m_max + 1)
        return -(s + m[None, :]) * self.lengths[:, None]

    def __call__(self, s, m_max=None):
        b = self.coefficients(s, m_max)
        return complex(b.sum())


def zeta_cycle(group, s, max_word_length, m_max=None):
    if max_word_length < 1:
        raise ValueError("max_word_length must be >= 1")
    if m_max is None:
        m_max = default_m_max(s)
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    b = cycle_expansion(group, max_word_length).coefficients(s, m_max)
    return ZetaValue(complex(b.sum()), "cycle_expansion", (max_word_length, m_max), float(abs(b[-1])))


@lru_cache(maxsize=16)
def cycle_expansion(group, max_word_length):
    return CycleExpansion(group, max_word_length)


def leading_eigenvalue(group, s, M, tol=1e-12, max_iter=10_000):
    """Spectral radius of ``A(s)`` for real ``s`` by power iteration."""
    if M < 8:
        raise ValueError("need M >= 8")
    A = operator(group, M).matrix(float(s))
    v = np.ones(len(A)) / math.sqrt(len(A))
    lam = 0.0
    for it in range(max_iter):
        w = A @ v
        new = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if it > 0 and abs(new - lam) <= tol * max(1.0, abs(new)):
            return abs(new)
        lam = new
    raise NoConvergence("power iteration did not converge", abs(new - lam))


def eigenvalue_root(group, M, lo=0.0, hi=1.0, xtol=1e-14):
    """Real ``s`` with leading eigenvalue of ``A(s)`` equal to one."""
    f = lambda s: leading_eigenvalue(group, s, M) - 1.0
    flo, fhi = f(lo), f(hi)
    if flo < 0 or fhi > 0:
        raise NoRootBracket(f"eigenvalue - 1 has signs {flo:.3e}, {fhi:.3e} on [{lo}, {hi}]")
    return brentq(f, lo, hi, xtol=xtol)


def first_real_zero(group, M, hi=1.0, lo=-0.5, step=0.01, xtol=1e-14):
    """Largest real zero of ``det(I - A(s))`` below ``hi``, found by a downward scan."""
    op = operator(group, M)
    f = lambda s: op.det(s).real
    s1, f1 = hi, f(hi)
    while s1 > lo:
        s0 = s1 - step
        f0 = f(s0)
        if f0 == 0.0:
            return s0
        if np.sign(f0) != np.sign(f1):
            return brentq(f, s0, s1, xtol=xtol)
        s1, f1 = s0, f0
    raise NoRootBracket(f"no sign change of the determinant on [{lo}, {hi}]")


def choose_M(group, s_values, tol=1e-10, start=16, step=4, max_M=96):
    """Smallest ``M`` (in steps of ``step``) whose determinant matches ``M + step``.

    Agreement is measured relative to ``max(1, |det|)`` over all ``s_values``.
    """
    s_values = np.atleast_1d(s_values)
    M = start
    prev = np.array([operator(group, M).det(s) for s in s_values])
    while M + step <= max_M:
        cur = np.array([operator(group, M + step).det(s) for s in s_values])
        err = np.max(np.abs(cur - prev) / np.maximum(1.0, np.abs(cur)))
        if err < tol:
            return M + step
        M += step
        prev = cur
    raise NoConvergence(f"determinant not converged at M = {max_M}", float(err))
