"""Schottky groups in SL(2, R) acting on the upper half-plane.

Each generator ``g`` is paired with the disk bounded by its isometric circle
``|c z + d| = 1`` (center ``-d/c``, radius ``1/|c|``); ``g`` maps the exterior
of that disk onto the interior of the isometric disk of ``g^{-1}``. Letters
are ``0..2r-1`` and letter ``i + r (mod 2r)`` is the inverse of letter ``i``.
"""
import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import words as W
from .errors import (CombinatorialOverflow, DiskOverlap, InsufficientScales,
                     NonHyperbolicGenerator, SingularMatrix)

LOGGER = logging.getLogger(__name__)

DET_TOL = 1e-12
MAP_TOL = 1e-10
CLASS_CAP = 2_000_000


@dataclass(frozen=True)
class MoebiusGenerator:
    a: float
    b: float
    c: float
    d: float
    label: int = 0

    @property
    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    @property
    def trace(self):
        return self.a + self.d

    @property
    def length(self):
        """Translation length ``2 arccosh(|tr|/2)``."""
        return 2.0 * math.acosh(abs(self.trace) / 2.0)

    def inverse(self, label):
        return MoebiusGenerator(self.d, -self.b, -self.c, self.a, label)

    def __call__(self, z):
        return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative(self, z):
        return 1.0 / (self.c * z + self.d) ** 2


@dataclass(frozen=True, eq=False)
class SchottkyGroup:
    rank: int
    generators: tuple
    centers: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)

    @property
    def alphabet_size(self):
        return 2 * self.rank

    def partner(self, i):
        return (i + self.rank) % (2 * self.rank)

    @property
    def matrices(self):
        return np.array([g.matrix for g in self.generators])

    @property
    def transitions(self):
        return W.schottky_transitions(self.rank)

    def min_gap(self):
        """Smallest boundary separation between two disks."""
        gaps = [abs(self.centers[i] - self.centers[j]) - self.radii[i] - self.radii[j]
                for i in range(self.alphabet_size) for j in range(i)]
        return min(gaps)

    def conjugate(self, h):
        """Group generated by ``h g h^{-1}``; built through ``build_group``."""
        h = np.asarray(h, dtype=float)
        hinv = np.linalg.inv(h)
        return build_group([h @ g.matrix @ hinv for g in self.generators[:self.rank]])

    def to_dict(self):
        return {"rank": self.rank,
                "generators": [[[g.a, g.b], [g.c, g.d]] for g in self.generators[:self.rank]]}


def build_group(matrices, det_tol=DET_TOL):
    """Validate ``r`` hyperbolic matrices and attach their isometric-circle disks.

    Raises
    ------
    SingularMatrix, NonHyperbolicGenerator, DiskOverlap
    """
    mats = [np.asarray(m, dtype=float).reshape(2, 2) for m in matrices]
    r = len(mats)
    if r < 1:
        raise ValueError("need at least one generator")
    gens = []
    for i, m in enumerate(mats):
        (a, b), (c, d) = m
        det = a * d - b * c
        if abs(det - 1.0) > det_tol:
            raise SingularMatrix(f"generator {i + 1} has determinant {det!r}")
        if abs(a + d) <= 2.0:
            raise NonHyperbolicGenerator(f"generator {i + 1} has trace {a + d!r}")
        if c == 0.0:
            raise DiskOverlap(f"generator {i + 1} has c = 0, no isometric circle")
        gens.append(MoebiusGenerator(a, b, c, d, i))
    gens += [g.inverse(i + r) for i, g in enumerate(gens)]
    centers = np.array([-g.d / g.c for g in gens])
    radii = np.array([1.0 / abs(g.c) for g in gens])
    for i in range(2 * r):
        for j in range(i):
            gap = abs(centers[i] - centers[j]) - radii[i] - radii[j]
            if gap <= 0.0:
                raise DiskOverlap(f"disks {j + 1} and {i + 1} intersect (gap {gap:.3e})")
    group = SchottkyGroup(r, tuple(gens), centers, radii)
    _check_pairing(group)
    return group


def _check_pairing(group, samples=16):
    # g_i sends the boundary circle of D_i onto the boundary circle of D_{i+r}
    t = 2 * np.pi * (np.arange(samples) + 0.25) / samples
    for i, g in enumerate(group.generators):
        j = group.partner(i)
        z = group.centers[i] + group.radii[i] * np.exp(1j * t)
        w = g(z)
        err = np.max(np.abs(np.abs(w - group.centers[j]) - group.radii[j]))
        if err > MAP_TOL * max(1.0, group.radii[j]):
            raise DiskOverlap(f"generator {i + 1} does not pair its disks (error {err:.2e})")


def pants_group(funnel_length):
    """Symmetric three-funnel surface, all boundary geodesics of equal length.

    The first generator pairs disks centred at ``-x`` and ``x``; the second is
    its conjugate by ``z -> -1/z``. The disk radius is tuned so that the
    product of the two generators also has the prescribed length, which makes
    the three boundary lengths equal. The result is validated by
    ``build_group`` like any other input.
    """
    from scipy.optimize import brentq

    L = float(funnel_length)
    ch = math.cosh(L / 2.0)
    J = np.array([[0.0, -1.0], [1.0, 0.0]])

    def generators(rho):
        x = rho * ch
        a, c = x / rho, 1.0 / rho
        g1 = np.array([[a, (a * a - 1.0) / c], [c, a]])
        return g1, J @ g1 @ J.T

    def third_length(rho):
        g1, g2 = generators(rho)
        return 2.0 * math.acosh(abs(np.trace(g1 @ g2)) / 2.0) - L

    # disjointness needs rho * (cosh(L/2) - 1) > 1
    lo = 1.0 / (ch - 1.0) * (1.0 + 1e-9)
    hi = lo
    while third_length(hi) < 0.0:
        hi *= 2.0
    if third_length(lo) > 0.0:
        raise DiskOverlap(f"no disjoint symmetric normalization for funnel length {L}")
    rho = brentq(third_length, lo, hi, xtol=1e-15, rtol=1e-15)
    return build_group(generators(rho))


def cylinder_group(length):
    """Rank-one group generated by ``diag``-conjugate hyperbolic element of given length."""
    ch = math.cosh(length / 2.0)
    sh = math.sinh(length / 2.0)
    # conjugate of diag(e^{l/2}, e^{-l/2}) by z -> (z - 1)/(z + 1) up to scaling
    return build_group([np.array([[ch, sh], [sh, ch]])])


@dataclass(frozen=True)
class GeodesicClass:
    word: W.CyclicWord
    length: float
    trace: float

    @property
    def word_length(self):
        return len(self.word)


def word_matrix(group, letters):
    m = np.eye(2)
    mats = group.matrices
    for a in letters:
        m = m @ mats[a]
    return m


def _batched_traces(group, words):
    mats = group.matrices
    prod = mats[words[:, 0]]
    for j in range(1, words.shape[1]):
        prod = np.einsum("nij,njk->nik", prod, mats[words[:, j]])
    return prod[:, 0, 0] + prod[:, 1, 1]


def trace_to_length(trace):
    return 2.0 * np.arccosh(np.abs(trace) / 2.0)


def enumerate_primitives(group, max_word_length, cap=CLASS_CAP):
    """One class per primitive conjugacy class with canonical word length <= n.

    A geodesic and its reversal are distinct classes. Output is sorted by
    (word length, length, word).
    """
    if max_word_length < 1:
        raise ValueError("max_word_length must be >= 1")
    K = group.alphabet_size
    estimate = W.estimate_count(K, K - 1, max_word_length)
    if estimate > cap * max_word_length:
        raise CombinatorialOverflow(estimate, cap)
    out = []
    for n in range(1, max_word_length + 1):
        words = W.lyndon_words(K, n, group.transitions, cap=cap * n)
        if not len(words):
            continue
        traces = _batched_traces(group, words)
        lengths = trace_to_length(traces)
        order = np.lexsort((np.arange(len(words)), lengths))
        for k in order:
            out.append(GeodesicClass(W.CyclicWord(tuple(int(a) for a in words[k]), True),
                                     float(lengths[k]), float(traces[k])))
        if len(out) > cap:
            raise CombinatorialOverflow(len(out), cap)
    return out


def length_spectrum(group, max_word_length, cap=CLASS_CAP):
    """Arrays ``(word_lengths, lengths)`` of primitive classes; faster than objects."""
    K = group.alphabet_size
    ns, ls = [], []
    for n in range(1, max_word_length + 1):
        words = W.lyndon_words(K, n, group.transitions, cap=cap * n)
        if len(words):
            ls.append(np.sort(trace_to_length(_batched_traces(group, words))))
            ns.append(np.full(len(words), n))
    return np.concatenate(ns), np.concatenate(ls)


def limit_set_points(group, depth):
    """Images of disk centres under every reduced word of length ``depth``.

    The word ``w_1 ... w_d`` is applied to the centre of the disk paired with
    ``w_d`` so that each point lies in a distinct level-``d`` nested disk.
    """
    K = group.alphabet_size
    words = W.reduced_words(K, depth, group.transitions)
    mats = group.matrices
    z = group.centers[[group.partner(a) for a in words[:, -1]]].astype(float)
    for j in range(depth - 1, -1, -1):
        m = mats[words[:, j]]
        z = (m[:, 0, 0] * z + m[:, 0, 1]) / (m[:, 1, 0] * z + m[:, 1, 1])
    return np.sort(z)


def limit_set_boxcount(group, depth, scales):
    """Box-counting estimate of the limit-set dimension.

    Returns
    -------
    points : ndarray
    dimension_estimate : float
        least-squares slope of ``log N(eps)`` against ``log(1/eps)``.
    """
    scales = np.asarray(scales, dtype=float)
    if depth < 2:
        raise ValueError("depth must be >= 2")
    if len(scales) < 3:
        raise InsufficientScales(f"{len(scales)} scales given, need at least 3")
    if np.any(np.diff(scales) >= 0):
        raise ValueError("scales must be strictly decreasing")
    points = limit_set_points(group, depth)
    counts = box_counts(points, scales)
    slope = np.polyfit(np.log(1.0 / scales), np.log(counts), 1)[0]
    return points, float(slope)


def box_counts(points, scales):
    return np.array([len(np.unique(np.floor(points / eps))) for eps in scales], dtype=float)


def write_geodesic_table(path, classes):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["word", "word_length", "trace", "ell_gamma"])
        for g in classes:
            writer.writerow([g.word.label(), g.word_length, f"{g.trace:.17g}", f"{g.length:.17g}"])


def load_group(spec):
    """Build a group from a parsed description (dict) or a JSON file path.

    Schema::

        {"rank": 2, "generators": [[[a, b], [c, d]], ...]}
        {"builder": "pants", "funnel_length": 6.0}
        {"builder": "cylinder", "length": 2.0}
    """
    if not isinstance(spec, dict):
        with open(spec) as fh:
            spec = json.load(fh)
    builder = spec.get("builder")
    if builder == "pants":
        return pants_group(spec["funnel_length"])
    if builder == "cylinder":
        return cylinder_group(spec["length"])
    if builder is not None:
        raise ValueError(f"unknown builder {builder!r}")
    group = build_group(spec["generators"])
    if "rank" in spec and spec["rank"] != group.rank:
        raise ValueError(f"rank {spec['rank']} does not match {group.rank} generators")
    return group
