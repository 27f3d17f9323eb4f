"""Zeros of analytic functions in rectangles, and resonance-set analytics.

Counting uses the argument principle on an adaptively refined boundary
sample. Location uses quadrisection down to boxes holding one zero (or a
single multiple zero) followed by Newton polishing with central-difference
derivatives.

Spectral planes
---------------
All strip and window statements go through :func:`strip_coordinates`, the
single place where a counting box ``[E - C h, E + C h] - i [0, gamma h]`` is
translated into a fixed spectral plane:

* ``"s"`` (surfaces, ``s(1 - s)`` spectral parameter): frequency ``Im s``,
  depth ``1/2 - Re s``. A box of depth ``gamma`` and half-width ``C`` around
  frequency ``T`` is ``{Re s >= 1/2 - gamma, |Im s - T| <= C}``.
* ``"k"`` (billiards, unit-speed wavenumber): frequency ``Re k``, depth
  ``-Im k``.

In both planes the pressure gap reads ``depth >= -P(1/2)``, with ``P``
computed from unit-speed periods (for surfaces ``P(1/2) = delta - 1/2``).
"""
import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (BoundaryZero, EmptyWindow, InsufficientWindows, MaxDepth,
                     NonConvergedSampling)

LOGGER = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def strip_coordinates(z, plane="s"):
    """``(frequency, depth)`` of spectral points in the given plane."""
    z = np.asarray(z, dtype=complex)
    if plane == "s":
        return z.imag, 0.5 - z.real
    if plane == "k":
        return z.real, -z.imag
    raise ValueError(f"unknown spectral plane {plane!r}")


def pressure_line(pressure_half, plane="s"):
    """Coordinate of the pressure-gap line: ``Re s`` (plane s) or ``Im k`` (plane k)."""
    depth = -pressure_half
    return 0.5 - depth if plane == "s" else -depth


@dataclass(frozen=True)
class SearchRectangle:
    lo: complex
    hi: complex

    def __post_init__(self):
        lo, hi = complex(self.lo), complex(self.hi)
        if not (hi.real > lo.real and hi.imag > lo.imag):
            raise ValueError(f"rectangle {lo} .. {hi} has non-positive width or height")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_bounds(cls, re_min, re_max, im_min, im_max):
        return cls(complex(re_min, im_min), complex(re_max, im_max))

    @property
    def width(self):
        return self.hi.real - self.lo.real

    @property
    def height(self):
        return self.hi.imag - self.lo.imag

    @property
    def size(self):
        return max(self.width, self.height)

    @property
    def center(self):
        return (self.lo + self.hi) / 2

    def contains(self, z):
        return self.lo.real <= z.real <= self.hi.real and self.lo.imag <= z.imag <= self.hi.imag

    def split(self, fx=0.5, fy=0.5):
        """Four children in the order SW, SE, NW, NE."""
        xm = self.lo.real + fx * self.width
        ym = self.lo.imag + fy * self.height
        x0, x1, y0, y1 = self.lo.real, self.hi.real, self.lo.imag, self.hi.imag
        return [SearchRectangle(complex(x0, y0), complex(xm, ym)),
                SearchRectangle(complex(xm, y0), complex(x1, ym)),
                SearchRectangle(complex(x0, ym), complex(xm, y1)),
                SearchRectangle(complex(xm, ym), complex(x1, y1))]

    def corners(self):
        x0, x1, y0, y1 = self.lo.real, self.hi.real, self.lo.imag, self.hi.imag
        return [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]


@dataclass(frozen=True)
class Zero:
    location: complex
    multiplicity: int
    residual: float
    scale: float


@dataclass
class ResonanceSet:
    zeros: list
    provenance: dict = field(default_factory=dict)
    plane: str = "s"

    @property
    def locations(self):
        return np.array([z.location for z in self.zeros], dtype=complex)

    @property
    def multiplicities(self):
        return np.array([z.multiplicity for z in self.zeros], dtype=int)

    @property
    def total(self):
        return int(self.multiplicities.sum()) if self.zeros else 0

    def write_csv(self, path):
        source = self.provenance.get("source", "")
        trunc = self.provenance.get("truncation", "")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["re", "im", "multiplicity", "residual", "source", "truncation"])
            for z in self.zeros:
                w.writerow([f"{z.location.real:.17g}", f"{z.location.imag:.17g}", z.multiplicity,
                            f"{z.residual:.3e}", source, trunc])


class ZeroFinder:
    """Argument-principle machinery bound to one function handle.

    Function values are memoized on a fixed grid of keys, so edges shared by
    neighbouring boxes are evaluated once. Edges are sampled at dyadic
    fractions, which makes the samples of a half edge a subset of the parent's.

    Parameters
    ----------
    F : callable complex -> complex
    density : float
        initial boundary samples per unit length (at least 16).
    min_edge_points : int
    max_edge_points : int
        refinement cap per edge; exceeding it raises NonConvergedSampling.
    boundary_tol : float
        smallness of ``|F|`` on the boundary, relative to the median boundary
        magnitude capped at one, that counts as a zero.
    workers : int
        threads used for batches of function evaluations.
    resolution : float
        relative sample spacing below which a persisting phase jump is
        reported as a boundary zero.
    max_relative_change : float
        an edge interval is bisected until ``|F(b) - F(a)|`` is below this
        multiple of ``min(|F(a)|, |F(b)|)``.
    """

    def __init__(self, F, density=16.0, min_edge_points=8, max_edge_points=1 << 16,
                 boundary_tol=1e-10, workers=1, resolution=1e-12,
                 max_relative_change=1.0):
        self.F = F
        self.density = max(16.0, float(density))
        self.min_edge_points = min_edge_points
        self.max_edge_points = max_edge_points
        self.boundary_tol = boundary_tol
        self.workers = workers
        self.resolution = resolution
        self.max_relative_change = max_relative_change
        self._memo = {}
        self.evaluations = 0

    @staticmethod
    def _key(z):
        return (round(z.real * 2.0 ** 44), round(z.imag * 2.0 ** 44))

    def evaluate(self, points):
        points = [complex(z) for z in points]
        todo = [z for z in dict.fromkeys(points) if self._key(z) not in self._memo]
        if todo:
            if self.workers > 1 and len(todo) > 1:
                with ThreadPoolExecutor(self.workers) as ex:
                    vals = list(ex.map(self.F, todo))
            else:
                vals = [self.F(z) for z in todo]
            for z, v in zip(todo, vals):
                self._memo[self._key(z)] = complex(v)
            self.evaluations += len(todo)
        return np.array([self._memo[self._key(z)] for z in points])

    def _edge(self, z0, z1):
        """Samples ``t`` in [0, 1] and values along the segment, refined adaptively."""
        length = abs(z1 - z0)
        n = self.min_edge_points
        while n < self.density * length:
            n *= 2
        t = np.arange(n + 1) / n
        vals = self.evaluate(z0 + (z1 - z0) * t)
        checked = False
        while True:
            # A phase step below pi/2 alone can hide a full turn when zeros sit
            # just off the edge. Bounding the change relative to the smaller
            # endpoint magnitude also bounds the phase step (by pi/3 at one).
            # The slope of the neighbouring intervals is applied too: across a
            # double zero close to the edge both endpoints can look alike,
            # while the neighbours still see |F| fall steeply towards it.
            dt = np.diff(t)
            change = np.abs(np.diff(vals))
            slope = change / dt
            nb = np.maximum(np.concatenate([slope[:1], slope[:-1]]),
                            np.concatenate([slope[1:], slope[-1:]]))
            floor = np.minimum(np.abs(vals[1:]), np.abs(vals[:-1]))
            bad = np.flatnonzero(~(np.maximum(change, nb * dt)
                                   < self.max_relative_change * floor))
            if not len(bad):
                if checked:
                    return t, vals
                # one uniform bisection pass: two samples straddling a close
                # zero pair symmetrically look alike, their midpoint does not
                bad = np.arange(len(t) - 1)
                checked = True
            gaps = (t[bad + 1] - t[bad]) * length
            limit = self.resolution * max(1.0, abs(z0), abs(z1))
            if np.any(gaps < limit):
                # phase still jumps between points closer than the resolution:
                # a zero on the edge, or F below its own rounding noise there
                i = bad[int(np.argmin(gaps))]
                raise BoundaryZero(z0 + (z1 - z0) * t[i], vals[i])
            if len(t) + len(bad) > self.max_edge_points:
                raise NonConvergedSampling(
                    f"edge {z0} -> {z1} needs more than {self.max_edge_points} samples")
            tm = (t[bad] + t[bad + 1]) / 2
            vm = self.evaluate(z0 + (z1 - z0) * tm)
            t = np.insert(t, bad + 1, tm)
            vals = np.insert(vals, bad + 1, vm)

    def boundary(self, rect):
        """Closed counter-clockwise boundary sample of ``rect``.

        Horizontal edges are always sampled left to right and vertical ones
        bottom to top, so shared edges produce identical points.
        """
        c = rect.corners()
        parts = []
        for a, b, reverse in ((c[0], c[1], False), (c[1], c[2], False),
                              (c[3], c[2], True), (c[0], c[3], True)):
            t, v = self._edge(a, b)
            z = a + (b - a) * t
            if reverse:
                z, v = z[::-1], v[::-1]
            parts.append((z[:-1], v[:-1]))
        z = np.concatenate([p[0] for p in parts])
        v = np.concatenate([p[1] for p in parts])
        return z, v

    def winding(self, rect):
        """Winding number of ``F`` around ``rect`` and the boundary scale (median ``|F|``)."""
        z, v = self.boundary(rect)
        mag = np.abs(v)
        scale = float(np.median(mag))
        k = int(np.argmin(mag))
        # capped at one: zeta-type F tend to one far to the right, and huge values
        # on the far left edge must not mask a genuine near-zero elsewhere
        if not mag[k] > self.boundary_tol * min(scale, 1.0):
            raise BoundaryZero(z[k], v[k])
        dphi = np.angle(np.roll(v, -1) / v)
        w = dphi.sum() / TWO_PI
        n = int(round(w))
        if abs(w - n) > 1e-6:
            raise NonConvergedSampling(f"non-integer winding {w:.6f} around {rect}")
        return n, scale

    def count(self, rect):
        return self.winding(rect)[0]

    def centroid(self, rect, m):
        """Mean of the ``m`` enclosed zeros from ``(1/2 pi i) \\oint z dlog F``."""
        z, v = self.boundary(rect)
        zc = np.append(z, z[0])
        dlog = (np.diff(np.log(np.abs(np.append(v, v[0]))))
                + 1j * np.angle(np.roll(v, -1) / v))
        mid = (zc[1:] + zc[:-1]) / 2
        return complex((mid * dlog).sum() / (2j * math.pi * m))

    def cluster_mean(self, z0, m, radius, points=64):
        """Mean of the ``m`` zeros inside the circle ``|z - z0| = radius``, or None.

        On the circle ``log F - m i theta`` is periodic and its ``e^{-i theta}``
        Fourier coefficient equals ``-sum(z_k - z0) / radius``; the zero-free
        factor only feeds non-negative frequencies. The trapezoid rule makes
        this spectrally accurate, unlike Newton on a multiple zero, whose
        error is the square root of the evaluation noise.
        """
        theta = TWO_PI * np.arange(points) / points
        v = np.array([self.F(z0 + radius * np.exp(1j * th)) for th in theta], dtype=complex)
        self.evaluations += points
        if not np.all(np.isfinite(v)) or np.any(v == 0):
            return None
        step = np.angle(np.roll(v, -1) / v)
        if np.max(np.abs(step)) > math.pi / 2 or int(round(step.sum() / TWO_PI)) != m:
            return None
        phase = np.angle(v[0]) + np.concatenate([[0.0], np.cumsum(step[:-1])])
        g = np.log(np.abs(v)) + 1j * (phase - m * theta)
        c_minus = np.mean(g * np.exp(1j * theta))
        return complex(z0 - radius * c_minus / m)

    def newton(self, z, h, multiplicity=1, tol_abs=0.0, max_iter=60):
        """Newton iteration with central differences; returns (z, |F(z)|, converged)."""
        with np.errstate(all="ignore"):
            return self._newton(z, h, multiplicity, tol_abs, max_iter)

    def _newton(self, z, h, multiplicity, tol_abs, max_iter):
        f = self.F(z)
        for _ in range(max_iter):
            d = (self.F(z + h) - self.F(z - h)) / (2 * h)
            if d == 0 or not np.isfinite(d):
                return z, abs(f), False
            step = multiplicity * f / d
            z = z - step
            f = self.F(z)
            if not np.isfinite(f):
                return z, abs(f), False
            if abs(f) <= tol_abs or abs(step) <= 1e-15 * max(1.0, abs(z)):
                return z, abs(f), True
        return z, abs(f), False


_SPLITS = (0.5, 0.5 + 1.0 / 64, 0.5 - 3.0 / 128, 0.5 + 5.0 / 256)


def count_zeros(F, rect, finder=None, **kw):
    """Number of zeros (with multiplicity) of ``F`` inside ``rect``."""
    finder = finder or ZeroFinder(F, **kw)
    return finder.count(rect)


def locate_zeros(F, rect, tol=1e-9, finder=None, max_depth=60, residual_tol=1e-10,
                 provenance=None, plane="s", **kw):
    """All zeros of ``F`` in ``rect``.

    Parameters
    ----------
    tol : float
        smallest box size; also the central-difference step of the Newton polish.
    residual_tol : float
        accepted ``|F|`` relative to the local boundary scale.

    Returns
    -------
    ResonanceSet sorted by (imag, real); multiplicities sum to the count of ``rect``.
    """
    finder = finder or ZeroFinder(F, **kw)
    total, _ = finder.winding(rect)
    found = []
    queue = [(rect, total, 0)]
    while queue:
        box, n, depth = queue.pop()
        if n == 0:
            continue
        if depth > max_depth:
            raise MaxDepth(f"box {box} still holds {n} zeros at depth {depth}")
        _, scale = finder.winding(box)
        z = _try_polish(finder, box, n, scale, tol, residual_tol)
        if z is not None:
            found.append(z)
            continue
        if box.size <= tol:
            zc = box.center
            found.append(Zero(zc, n, abs(F(zc)), scale))
            continue
        children = _split_counted(finder, box)
        if sum(c for _, c in children) != n:
            raise NonConvergedSampling(f"children of {box} hold {sum(c for _, c in children)} != {n} zeros")
        queue.extend((b, c, depth + 1) for b, c in reversed(children))
    found.sort(key=lambda z: (round(z.location.imag, 12), round(z.location.real, 12)))
    return ResonanceSet(found, dict(provenance or {}), plane)


def _split_counted(finder, box):
    last = None
    for fx in _SPLITS:
        try:
            kids = box.split(fx, fx)
            return [(k, finder.count(k)) for k in kids]
        except (BoundaryZero, NonConvergedSampling) as exc:
            last = exc
    raise last


def _try_polish(finder, box, n, scale, tol, residual_tol):
    if n == 1:
        start = box.center
    else:
        start = finder.centroid(box, n)
        if not box.contains(start):
            return None
    z, res, ok = finder.newton(start, tol, multiplicity=n, tol_abs=residual_tol * scale * 1e-3)
    if not (ok and box.contains(z) and res <= residual_tol * scale):
        return None
    if n > 1:
        # all n zeros must sit at z: a tiny box around it must hold them
        r = max(1e3 * tol, 1e-6 * box.size)
        small = SearchRectangle(z - complex(1.0137 * r, 0.9871 * r), z + complex(0.9923 * r, 1.0061 * r))
        try:
            if finder.count(small) != n:
                return None
        except (BoundaryZero, NonConvergedSampling):
            return None
        # the largest circle that still holds just this cluster gives the best mean
        edge = min(z.real - box.lo.real, box.hi.real - z.real, z.imag - box.lo.imag, box.hi.imag - z.imag)
        radius = min(0.25 * box.size, edge)
        while radius >= r:
            mean = finder.cluster_mean(z, n, radius)
            if mean is not None:
                with np.errstate(all="ignore"):
                    res_mean = abs(finder.F(mean))
                if res_mean <= residual_tol * scale:
                    z, res = mean, res_mean
                break
            radius /= 8.0
    return Zero(complex(z), n, float(res), scale)


@dataclass(frozen=True)
class WeylFit:
    exponent: float
    prefactor: float
    strip_depth: float
    window_width: float
    windows: tuple
    counts: tuple
    residual: float
    points: int

    def to_dict(self):
        return {"exponent": self.exponent, "prefactor": self.prefactor,
                "strip_depth": self.strip_depth, "window_width": self.window_width,
                "windows": list(self.windows), "counts": list(self.counts),
                "residual": self.residual, "points": self.points}


def window_counts(res, strip_depth, window_width, window_centers):
    freq, depth = strip_coordinates(res.locations, res.plane)
    mult = res.multiplicities
    counts = []
    for T in window_centers:
        sel = (np.abs(freq - T) <= window_width) & (depth <= strip_depth)
        counts.append(int(mult[sel].sum()))
    return np.array(counts)


def weyl_fit(res, strip_depth, window_width, window_centers):
    """Power-law fit ``N(T) ~ prefactor * T^exponent`` of windowed strip counts."""
    centers = np.asarray(window_centers, dtype=float)
    if len(centers) < 4:
        raise InsufficientWindows(f"{len(centers)} windows given, need at least 4")
    counts = window_counts(res, strip_depth, window_width, centers)
    if np.any(counts == 0):
        raise EmptyWindow([(T - window_width, T + window_width) for T in centers[counts == 0]])
    x, y = np.log(centers), np.log(counts)
    coef, resid, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(math.sqrt(resid[0])) if len(resid) else 0.0
    return WeylFit(float(coef[0]), float(math.exp(coef[1])), float(strip_depth), float(window_width),
                   tuple(float(c) for c in centers), tuple(int(c) for c in counts),
                   residual, int(counts.sum()))


def gap_report(res, delta=None, pressure_half=None, pressure_one=None, low_frequency=0.0,
               strip_edges=None, tol=1e-9):
    """Aggregate gap diagnostics of a resonance set.

    ``low_frequency`` excludes zeros with ``|frequency| < low_frequency`` from
    the essential-gap probe. The Jakobson-Naud line is depth ``-P(1)/2``
    (``(1 - delta)/2`` for surfaces) and is reported as a conjecture probe only.
    Zeros within ``tol`` of that line count as on it, not above it.
    """
    if not res.zeros:
        raise ValueError("empty resonance set")
    plane = res.plane
    loc = res.locations
    freq, depth = strip_coordinates(loc, plane)
    lead = int(np.argmin(depth))
    report = {"plane": plane, "zeros": int(len(loc)), "total_multiplicity": res.total,
              "leading_zero": [float(loc[lead].real), float(loc[lead].imag)],
              "min_depth": float(depth[lead])}
    if plane == "s":
        report["max_re_s"] = float(loc.real.max())
        if delta is not None:
            report["delta"] = float(delta)
            report["margin_vs_delta"] = float(delta - loc.real.max())
            if pressure_half is None:
                pressure_half = delta - 0.5
            if pressure_one is None:
                pressure_one = delta - 1.0
    else:
        report["max_im_k"] = float(loc.imag.max())
        report["observed_gap"] = float(-loc.imag.max())
    if pressure_half is not None:
        report["pressure_half"] = float(pressure_half)
        report["pressure_line"] = float(pressure_line(pressure_half, plane))
        report["margin_vs_pressure"] = float(depth.min() + pressure_half)
    if pressure_one is not None:
        jn = -pressure_one / 2.0
        ess = np.abs(freq) >= low_frequency
        report["jakobson_naud"] = {
            "conjecture_probe": True,
            "line_depth": float(jn),
            "low_frequency_cutoff": float(low_frequency),
            "essential_min_depth": float(depth[ess].min()) if ess.any() else None,
            "zeros_shallower_than_line": int(res.multiplicities[ess & (depth < jn - tol)].sum()),
        }
    if strip_edges is None:
        strip_edges = np.arange(math.floor(depth.min()), math.ceil(depth.max()) + 1.0, 0.5)
    strip_edges = np.asarray(strip_edges, dtype=float)
    counts = [int(res.multiplicities[(depth >= a) & (depth < b)].sum())
              for a, b in zip(strip_edges[:-1], strip_edges[1:])]
    report["strip_counts"] = {"edges": [float(e) for e in strip_edges], "counts": counts}
    return report


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
