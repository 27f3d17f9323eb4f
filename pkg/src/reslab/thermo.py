"""Topological pressure, entropy and Bowen dimension from periodic-orbit data.

Two estimators of ``P(beta)``:

* ``window``: least-squares slope of ``log S(T)`` where ``S(T)`` sums
  ``J^u(gamma)^(-beta)`` over orbits (repetitions included) with period in
  ``[T, T + 1]``. This is the literal definition and converges slowly.
* ``zeta_root``: largest real ``s`` at which the cycle-expanded product
  ``prod_gamma (1 - exp(-s T_gamma) J^u(gamma)^(-beta))`` vanishes. This is
  the primary estimator.
"""
import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .cycle import expand_product
from .errors import EmptyWindow, InsufficientWindows, NoBracket, NoRootBracket

LOGGER = logging.getLogger(__name__)

ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OrbitEnsemble:
    """Primitive periodic orbits; repetitions are generated where needed.

    Attributes
    ----------
    periods, jacobians : (G,) float arrays
        ``T_gamma`` and ``J^u(gamma) > 1``.
    word_lengths : (G,) int array
        Symbolic length, the ordering variable of the cycle expansion.
    max_word_length : int
        Enumeration depth; all primitive orbits up to this length are present.
    """

    periods: np.ndarray
    jacobians: np.ndarray
    word_lengths: np.ndarray
    max_word_length: int
    source: str = ""
    branching: int = 2
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        order = np.lexsort((self.word_lengths, self.periods))
        for name in ("periods", "jacobians", "word_lengths"):
            object.__setattr__(self, name, np.asarray(getattr(self, name))[order])
        if len(self.periods) == 0:
            raise ValueError("empty ensemble")

    @property
    def log_jacobians(self):
        return np.log(self.jacobians)

    @property
    def complete_up_to(self):
        """Period below which no orbit longer than ``max_word_length`` can occur.

        Uses the smallest period per symbol as a lower bound for longer words.
        """
        return (self.max_word_length + 1) * float(np.min(self.periods / self.word_lengths))

    @classmethod
    def from_geodesics(cls, word_lengths, lengths, max_word_length, source="schottky", branching=3):
        # constant curvature -1: J^u = e^{length}
        lengths = np.asarray(lengths, dtype=float)
        return cls(lengths, np.exp(lengths), np.asarray(word_lengths), max_word_length,
                   source, branching)

    @classmethod
    def from_orbits(cls, orbits, max_word_length, source="billiard", branching=None):
        if branching is None:
            n_letters = len({a for o in orbits for a in o.word.letters})
            branching = max(1, n_letters - 1)
        return cls(np.array([o.period for o in orbits]), np.array([o.jacobian for o in orbits]),
                   np.array([o.n_bounces for o in orbits]), max_word_length, source, branching)

    def truncated(self, max_word_length):
        keep = self.word_lengths <= max_word_length
        return OrbitEnsemble(self.periods[keep], self.jacobians[keep], self.word_lengths[keep],
                             max_word_length, self.source, self.branching, dict(self.meta))


def _zeta_function(ensemble, beta):
    n = ensemble.word_lengths
    T = ensemble.periods
    logJ = ensemble.log_jacobians
    N = ensemble.max_word_length

    def f(s):
        return expand_product(n, -s * T - beta * logJ, N).sum().real

    return f


def _largest_root(f, lo, hi, steps=60):
    """Largest sign change of ``f`` below ``hi``, scanning downward, then Brent.

    ``hi`` is doubled (up to 8 times) until ``f(hi) > 0``; the lower end is
    doubled away from zero (up to 8 times) until a sign change appears.
    """
    for _ in range(8):
        if f(hi) > 0:
            break
        hi = 2.0 * hi if hi > 0 else 1.0
    else:
        raise NoRootBracket(f"product not positive at {hi}")
    x1, f1 = hi, f(hi)
    for _ in range(8):
        step = (hi - lo) / steps
        while x1 > lo:
            x0 = x1 - step
            f0 = f(x0)
            if f0 == 0.0:
                return float(x0)
            if f0 < 0.0:
                return float(brentq(f, x0, x1, xtol=1e-15, rtol=4 * np.finfo(float).eps))
            x1, f1 = x0, f0
        lo = 2.0 * lo if lo < 0 else lo - 1.0
    raise NoRootBracket(f"no sign change of the product on [{lo}, {hi}]")


def pressure_zeta_root(ensemble, beta):
    """Largest real root of the cycle-expanded product."""
    f = _zeta_function(ensemble, beta)
    lam_max = float(np.max(ensemble.log_jacobians / ensemble.periods))
    h_guess = math.log(max(ensemble.branching, 1)) / float(np.min(ensemble.periods / ensemble.word_lengths))
    lo = -2.0 * abs(beta) * lam_max - 0.1
    hi = 2.0 * h_guess + 0.1
    return _largest_root(f, lo, hi)


def window_sums(ensemble, beta, width=1.0, t_max=None):
    """Window edges and sums ``S(T)`` including repetitions, up to ``t_max``."""
    if t_max is None:
        t_max = ensemble.complete_up_to
    T, logJ = ensemble.periods, ensemble.log_jacobians
    reps = np.floor(t_max / T).astype(int)
    r = np.concatenate([np.arange(1, k + 1) for k in reps])
    idx = np.repeat(np.arange(len(T)), reps)
    periods = r * T[idx]
    weights = np.exp(-beta * r * logJ[idx])
    start = math.floor(T.min())
    edges = np.arange(start, t_max - width + 1e-12, width)
    sums = np.array([weights[(periods >= a) & (periods <= a + width)].sum() for a in edges])
    return edges, sums


def pressure_window(ensemble, beta, width=1.0, t_max=None, fit_fraction=0.5):
    """Slope of ``log S(T)`` over the last ``fit_fraction`` of the complete windows."""
    edges, sums = window_sums(ensemble, beta, width, t_max)
    if len(edges) < 3:
        raise InsufficientWindows(f"{len(edges)} complete windows of width {width} below "
                                  f"T = {ensemble.complete_up_to if t_max is None else t_max:.3g}")
    n_fit = max(3, int(math.ceil(fit_fraction * len(edges))))
    edges, sums = edges[-n_fit:], sums[-n_fit:]
    empty = sums <= 0.0
    if empty.any():
        raise EmptyWindow([(float(a), float(a) + width) for a in edges[empty]])
    return float(np.polyfit(edges, np.log(sums), 1)[0])


def pressure(ensemble, beta, method="zeta_root", **kw):
    if method == "zeta_root":
        return pressure_zeta_root(ensemble, beta, **kw)
    if method == "window":
        return pressure_window(ensemble, beta, **kw)
    raise ValueError(f"unknown pressure method {method!r}")


@dataclass(frozen=True)
class PressureCurve:
    betas: np.ndarray
    values: np.ndarray
    method: str
    max_word_length: int


def pressure_curve(ensemble, betas, method="zeta_root"):
    betas = np.asarray(betas, dtype=float)
    vals = np.array([pressure(ensemble, b, method) for b in betas])
    return PressureCurve(betas, vals, method, ensemble.max_word_length)


def entropy(ensemble):
    """``P(0)`` from the zeta root; the window estimate is returned alongside (or None)."""
    h = pressure_zeta_root(ensemble, 0.0)
    try:
        hw = pressure_window(ensemble, 0.0)
    except (EmptyWindow, InsufficientWindows):
        hw = None
    return h, hw


def bowen_dimension(ensemble, tol=1e-8):
    """Root ``delta`` of ``P`` in (0, 1).

    ``P(beta) = 0`` exactly when the product vanishes at ``s = 0``, so the
    root is sought in ``beta`` directly and then checked against ``P``.
    """
    p0 = pressure_zeta_root(ensemble, 0.0)
    p1 = pressure_zeta_root(ensemble, 1.0)
    if p0 <= ZERO_TOL or p1 >= 0.0:
        raise NoBracket(f"P(0) = {p0:.3e}, P(1) = {p1:.3e}; need P(0) > 0 > P(1)")
    n, logJ, N = ensemble.word_lengths, ensemble.log_jacobians, ensemble.max_word_length
    g = lambda b: expand_product(n, -b * logJ, N).sum().real
    delta = _largest_root(g, 0.0, 1.0)
    residual = pressure_zeta_root(ensemble, delta)
    if abs(residual) >= tol:
        raise NoRootBracket(f"P(delta) = {residual:.3e} at delta = {delta}")
    return float(delta)


@dataclass(frozen=True)
class GapPrediction:
    pressure_half: float
    gap_width: float
    informative: bool

    def to_dict(self, ensemble=None):
        d = {"pressure_half": self.pressure_half, "gap_width": self.gap_width,
             "informative": self.informative}
        if ensemble is not None:
            d["ensemble"] = {"source": ensemble.source, "orbits": int(len(ensemble.periods)),
                             "max_word_length": ensemble.max_word_length}
        return d


def gap_prediction(ensemble):
    p = pressure_zeta_root(ensemble, 0.5)
    return GapPrediction(p, max(0.0, -p), p < 0.0)


def write_pressure_curve(path, curve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["beta", "pressure", "method", "max_word_length"])
        for b, p in zip(curve.betas, curve.values):
            w.writerow([f"{b:.17g}", f"{p:.17g}", curve.method, curve.max_word_length])


def write_gap_report(path, gap, ensemble):
    with open(path, "w") as fh:
        json.dump(gap.to_dict(ensemble), fh, indent=2, sort_keys=True)
        fh.write("\n")
