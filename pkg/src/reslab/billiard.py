"""Open N-disk billiards: periodic orbits, stabilities, dynamical zeta.

Bounce points are parametrized by their polar angle on each disk. Periodic
orbits are stationary points of the total chord length, found by Newton's
method with analytic gradient and Hessian.
"""
import csv
import json
import logging
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from . import words as W
from .cycle import expand_product
from .errors import DiskOverlap, EclipseViolation, NoConvergence, NonAdmissibleWord

LOGGER = logging.getLogger(__name__)

LABELS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True, eq=False)
class DiskSystem:
    centers: np.ndarray
    radii: np.ndarray
    gaps: np.ndarray
    dirichlet: bool = True

    @property
    def n_disks(self):
        return len(self.radii)

    @property
    def transitions(self):
        return W.billiard_transitions(self.n_disks)

    def moved(self, angle=0.0, shift=(0.0, 0.0)):
        """Rigidly rotated and translated copy."""
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return build_disk_system(self.centers @ rot.T + np.asarray(shift), self.radii,
                                 dirichlet=self.dirichlet)

    def to_dict(self):
        return {"centers": self.centers.tolist(), "radii": self.radii.tolist(),
                "dirichlet": self.dirichlet}


def _segment_distance(p, q, c):
    d = q - p
    t = np.clip(np.dot(c - p, d) / np.dot(d, d), 0.0, 1.0)
    return np.linalg.norm(p + t * d - c)


def build_disk_system(centers, radii, dirichlet=True):
    """Validate disjointness and the no-eclipse condition.

    No-eclipse is checked on the convex hull of each disk pair: a third disk
    must not meet either outer common tangent segment nor the centre chord.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    radii = np.asarray(radii, dtype=float).ravel()
    n = len(radii)
    if n < 2 or len(centers) != n:
        raise ValueError("need at least two disks with one radius each")
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    gaps = np.full((n, n), np.inf)
    for i in range(n):
        for j in range(i):
            gap = np.linalg.norm(centers[i] - centers[j]) - radii[i] - radii[j]
            if gap <= 0.0:
                raise DiskOverlap(f"disks {LABELS[j]} and {LABELS[i]} intersect (gap {gap:.3e})")
            gaps[i, j] = gaps[j, i] = gap
    for i in range(n):
        for j in range(i + 1, n):
            segments = _hull_segments(centers[i], radii[i], centers[j], radii[j])
            for k in range(n):
                if k in (i, j):
                    continue
                if any(_segment_distance(p, q, centers[k]) <= radii[k] for p, q in segments):
                    raise EclipseViolation((LABELS[i], LABELS[j], LABELS[k]))
    return DiskSystem(centers, radii, gaps, dirichlet)


def _hull_segments(c1, r1, c2, r2):
    """Centre chord and the two outer common tangents of two disks."""
    d = c2 - c1
    L = np.linalg.norm(d)
    e = d / L
    perp = np.array([-e[1], e[0]])
    # outer tangent normal makes angle with e given by cos = (r1 - r2)/L
    cos_a = (r1 - r2) / L
    sin_a = math.sqrt(max(0.0, 1.0 - cos_a * cos_a))
    segs = [(c1, c2)]
    for sign in (1.0, -1.0):
        nrm = cos_a * e + sign * sin_a * perp
        segs.append((c1 + r1 * nrm, c2 + r2 * nrm))
    return segs


@dataclass(frozen=True)
class BounceOrbit:
    word: W.CyclicWord
    bounce_angles: np.ndarray
    period: float
    monodromy: np.ndarray
    leading_eigenvalue: float
    det_defect: float = 0.0

    @property
    def n_bounces(self):
        return len(self.word)

    @property
    def jacobian(self):
        """Unstable Jacobian ``J^u = |Lambda|``."""
        return abs(self.leading_eigenvalue)

    @property
    def lyapunov(self):
        return math.log(self.jacobian) / self.period

    def label(self):
        return self.word.label(LABELS)


def parse_word(text):
    return tuple(LABELS.index(ch) for ch in text.strip().upper())


def _geometry(system, letters, theta):
    c = system.centers[list(letters)]
    a = system.radii[list(letters)]
    u = np.column_stack([np.cos(theta), np.sin(theta)])
    up = np.column_stack([-np.sin(theta), np.cos(theta)])
    p = c + a[:, None] * u
    d = np.roll(p, -1, axis=0) - p
    ell = np.linalg.norm(d, axis=1)
    e = d / ell[:, None]
    return a, u, up, p, ell, e


def chord_length(system, letters, theta):
    return float(_geometry(system, letters, theta)[4].sum())


def length_gradient(system, letters, theta):
    a, u, up, p, ell, e = _geometry(system, letters, theta)
    e_in = np.roll(e, 1, axis=0)
    return a * np.einsum("ij,ij->i", up, e_in - e)


def length_hessian(system, letters, theta):
    a, u, up, p, ell, e = _geometry(system, letters, theta)
    n = len(theta)
    H = np.zeros((n, n))
    for j in range(n):
        k = (j + 1) % n
        P = (np.eye(2) - np.outer(e[j], e[j])) / ell[j]
        tj, tk = a[j] * up[j], a[k] * up[k]
        # segment j runs from bounce j to bounce k
        H[j, j] += tj @ P @ tj + a[j] * np.dot(e[j], u[j])
        H[k, k] += tk @ P @ tk - a[k] * np.dot(e[j], u[k])
        H[j, k] -= tj @ P @ tk
        H[k, j] -= tj @ P @ tk
    return H


def _check_word(system, letters):
    n = system.n_disks
    if len(letters) < 2:
        raise NonAdmissibleWord(f"word {letters} needs at least two bounces")
    for k, a in enumerate(letters):
        b = letters[(k + 1) % len(letters)]
        if not (0 <= a < n and 0 <= b < n):
            raise NonAdmissibleWord(f"letter outside the {n}-disk alphabet in {letters}")
        if a == b:
            raise NonAdmissibleWord(f"repeated letter at position {k} of {letters}")


def find_orbit(system, word, tol=1e-12, max_iter=100):
    """Periodic orbit following the itinerary ``word`` (letters or a string)."""
    letters = parse_word(word) if isinstance(word, str) else tuple(int(a) for a in word)
    _check_word(system, letters)
    cw = W.CyclicWord.from_letters(letters, lambda a, b: a == b)
    letters = cw.letters
    c = system.centers[list(letters)]
    target = (np.roll(c, 1, axis=0) + np.roll(c, -1, axis=0)) / 2.0 - c
    theta = np.arctan2(target[:, 1], target[:, 0])
    f = chord_length(system, letters, theta)
    for _ in range(max_iter):
        g = length_gradient(system, letters, theta)
        if np.linalg.norm(g) < tol:
            break
        H = length_hessian(system, letters, theta)
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = -g
        if np.dot(step, g) >= 0:
            step = -g
        t = 1.0
        while t > 1e-12:
            trial = theta + t * step
            ft = chord_length(system, letters, trial)
            if ft <= f + 1e-4 * t * np.dot(g, step) or np.linalg.norm(t * step) < 1e-14:
                break
            t *= 0.5
        theta, f = trial, ft
    else:
        raise NoConvergence(f"orbit {cw.label(LABELS)} did not converge",
                            float(np.linalg.norm(length_gradient(system, letters, theta))))
    g = length_gradient(system, letters, theta)
    if np.linalg.norm(g) >= 1e-10:
        raise NoConvergence(f"orbit {cw.label(LABELS)} stalled", float(np.linalg.norm(g)))
    theta = np.mod(theta + np.pi, 2 * np.pi) - np.pi
    mono, lead, defect = monodromy(system, letters, theta)
    return BounceOrbit(cw, theta, chord_length(system, letters, theta), mono, lead, defect)


def monodromy(system, letters, theta, dps=50):
    """Transverse Jacobian in Birkhoff coordinates over one period.

    Free flight of length ``l`` is ``[[1, l], [0, 1]]``; a reflection on a disk
    of radius ``a`` with incidence angle ``phi`` is
    ``[[-1, 0], [-2 / (a cos phi), -1]]``. The product starts after the
    bounce on the first letter. Entries grow like ``Lambda``, so the product
    is formed in ``dps``-digit arithmetic; double precision cannot hold the
    unit determinant of long orbits.

    Returns
    -------
    matrix : (2, 2) float array
    lead : float
        signed leading eigenvalue, from the extended-precision trace.
    det_defect : float
        ``|det - 1|`` of the extended-precision product.
    """
    a, u, up, p, ell, e = _geometry(system, letters, theta)
    n = len(letters)
    with mpmath.workdps(dps):
        M = mpmath.eye(2)
        for j in range(n):
            k = (j + 1) % n
            cos_phi = -float(np.dot(e[j], u[k]))
            flight = mpmath.matrix([[1, float(ell[j])], [0, 1]])
            curv = -2 / (mpmath.mpf(float(a[k])) * cos_phi)
            bounce = mpmath.matrix([[-1, 0], [curv, -1]])
            M = bounce * flight * M
        tr = M[0, 0] + M[1, 1]
        root = mpmath.sqrt(tr * tr - 4)
        lead = (tr + root) / 2 if tr > 0 else (tr - root) / 2
        defect = abs(mpmath.det(M) - 1)
        return (np.array([[float(M[i, j]) for j in range(2)] for i in range(2)]),
                float(lead), float(defect))


def enumerate_orbits(system, max_word_length):
    """One orbit per primitive admissible necklace, sorted by (length, word)."""
    out = []
    for n in range(2, max_word_length + 1):
        for w in W.lyndon_words(system.n_disks, n, system.transitions):
            out.append(find_orbit(system, tuple(int(a) for a in w)))
    out.sort(key=lambda o: (o.period, o.word.letters))
    return out


class ZetaModel:
    """Cycle-expanded Gutzwiller-Voros zeta over a fixed orbit table."""

    def __init__(self, orbits, max_word_length, m_max=0, dirichlet=True):
        self.orbits = [o for o in orbits if o.n_bounces <= max_word_length]
        self.max_word_length = max_word_length
        self.m_max = m_max
        self.dirichlet = dirichlet
        self.n = np.array([o.n_bounces for o in self.orbits])
        self.T = np.array([o.period for o in self.orbits])
        lam = np.array([o.leading_eigenvalue for o in self.orbits])
        m = np.arange(m_max + 1)
        sign = (-1.0) ** self.n if dirichlet else np.ones(len(self.n))
        # log of (-1)^n / (|L|^{1/2} L^m), complex when L < 0 and m is odd
        self._log_amp = (np.log(sign.astype(complex))[:, None]
                         - 0.5 * np.log(np.abs(lam))[:, None]
                         - m[None, :] * np.log(lam.astype(complex))[:, None])

    def coefficients(self, k):
        return expand_product(self.n, 1j * complex(k) * self.T[:, None] + self._log_amp,
                              self.max_word_length)

    def __call__(self, k):
        return complex(self.coefficients(k).sum())


def dynamical_zeta(system, k, max_word_length, m_max=0, orbits=None):
    if orbits is None:
        orbits = enumerate_orbits(system, max_word_length)
    return ZetaModel(orbits, max_word_length, m_max, system.dirichlet)(k)


def lattice_point(orbit, m, q):
    """Zero of the ``m``-th factor of a single-orbit zeta, ``q``-th in the real direction."""
    return (2 * math.pi * q - 1j * (0.5 + m) * math.log(orbit.jacobian)) / orbit.period


def write_orbit_table(path, orbits):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["word", "n_bounces", "length", "log_Lambda", "Ju"])
        for o in orbits:
            w.writerow([o.label(), o.n_bounces, f"{o.period:.17g}",
                        f"{math.log(o.jacobian):.17g}", f"{o.jacobian:.17g}"])


def load_disk_system(spec):
    """Schema: ``{"centers": [[x, y], ...], "radii": [...], "dirichlet": true}``
    or ``{"builder": "equilateral", "side": 6, "radius": 1}`` /
    ``{"builder": "two_disk", "distance": 6, "radius": 1}``."""
    if not isinstance(spec, dict):
        with open(spec) as fh:
            spec = json.load(fh)
    dirichlet = spec.get("dirichlet", True)
    builder = spec.get("builder")
    if builder == "equilateral":
        return equilateral(spec["side"], spec.get("radius", 1.0), dirichlet)
    if builder == "two_disk":
        return two_disk(spec["distance"], spec.get("radius", 1.0), dirichlet)
    if builder is not None:
        raise ValueError(f"unknown builder {builder!r}")
    return build_disk_system(spec["centers"], spec["radii"], dirichlet)


def two_disk(distance, radius=1.0, dirichlet=True):
    return build_disk_system([[0.0, 0.0], [distance, 0.0]], [radius, radius], dirichlet)


def equilateral(side, radius=1.0, dirichlet=True):
    ang = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
    R = side / math.sqrt(3.0)
    return build_disk_system(R * np.column_stack([np.cos(ang), np.sin(ang)]),
                             [radius] * 3, dirichlet)
