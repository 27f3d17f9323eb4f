"""Batch front-end: ``reslab <job> --config job.json --out DIR``.

Configuration schema (JSON, ``schema_version`` 1)::

    {
      "schema_version": 1,
      "job": "gap",                       # optional, must match the subcommand
      "model": {"type": "billiard", "builder": "two_disk", "distance": 6, "radius": 1},
      "params": {"max_word_length": 8},
      "seed": 0
    }

``model.type`` is ``schottky`` (group builders or explicit generators, see
:func:`reslab.schottky.load_group`), ``billiard`` (see
:func:`reslab.billiard.load_disk_system`) or ``cantor`` (``M`` and
``alphabet``). Either form may be replaced by ``{"type": ..., "file": path}``
with the path taken relative to the config file.

Every job writes its data files and a ``manifest.json`` (input hash, tool
version, sha256 of each file, timestamp) into a temporary directory that is
moved into place only after the job succeeded.
"""
import argparse
import hashlib
import json
import logging
import math
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import billiard as B
from . import fup as F
from . import schottky as S
from . import thermo as T
from . import words as W
from . import xfer as X
from . import zeros as Z
from .errors import ConfigInvalid, ReslabError

LOGGER = logging.getLogger("reslab")

SCHEMA_VERSION = 1
JOBS = ("resonances", "pressure", "dimension", "weyl-fit", "gap", "fup", "orbits")
MODEL_TYPES = {"schottky", "billiard", "cantor"}
MODEL_JOBS = {
    "resonances": {"schottky", "billiard"},
    "pressure": {"schottky", "billiard"},
    "dimension": {"schottky", "billiard"},
    "weyl-fit": {"schottky", "billiard"},
    "gap": {"schottky", "billiard"},
    "fup": {"cantor"},
    "orbits": {"schottky", "billiard"},
}
CONFIG_DIR = Path(__file__).with_name("configs")


@dataclass
class JobConfig:
    kind: str
    model: dict
    params: dict
    out: Path
    seed: int = 0
    base_dir: Path = Path(".")
    threads: int = 1
    raw: dict = field(default_factory=dict)


# ----------------------------------------------------------------------------
# validation


def _positive(params, key, problems, default=None, integer=False):
    value = params.get(key, default)
    if value is None:
        problems.append(f"params.{key}: required")
        return None
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok or not value > 0 or not math.isfinite(value):
        kind = "positive integer" if integer else "positive number"
        problems.append(f"params.{key}: expected a {kind}, got {value!r}")
        return None
    return value


def _rectangle(params, problems, key="rectangle"):
    rect = params.get(key)
    if rect is None:
        problems.append(f"params.{key}: required [re_min, re_max, im_min, im_max]")
        return None
    if (not isinstance(rect, list) or len(rect) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in rect)):
        problems.append(f"params.{key}: expected four numbers [re_min, re_max, im_min, im_max]")
        return None
    re0, re1, im0, im1 = rect
    if not re1 > re0:
        problems.append(f"params.{key}: zero or negative width ({re0} .. {re1})")
    if not im1 > im0:
        problems.append(f"params.{key}: zero or negative height ({im0} .. {im1})")
    return rect


def parse_config(raw, kind, out, base_dir=Path("."), threads=1):
    """Validate a parsed config; raises ConfigInvalid listing every problem."""
    problems = []
    if not isinstance(raw, dict):
        raise ConfigInvalid("config: expected a JSON object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        problems.append(f"schema_version: expected {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    if kind not in JOBS:
        problems.append(f"job: unknown kind {kind!r}")
    if "job" in raw and raw["job"] != kind:
        problems.append(f"job: config is for {raw['job']!r}, subcommand is {kind!r}")
    unknown = set(raw) - {"schema_version", "job", "model", "params", "seed"}
    if unknown:
        problems.append(f"config: unknown keys {sorted(unknown)}")
    model = raw.get("model")
    if not isinstance(model, dict):
        problems.append("model: required object")
        model = {}
    mtype = model.get("type")
    if mtype not in MODEL_TYPES:
        problems.append(f"model.type: expected one of {sorted(MODEL_TYPES)}, got {mtype!r}")
    elif kind in MODEL_JOBS and mtype not in MODEL_JOBS[kind]:
        problems.append(f"model.type: job {kind!r} needs {sorted(MODEL_JOBS[kind])}, got {mtype!r}")
    if "file" in model:
        path = Path(base_dir) / model["file"]
        if not path.is_file():
            problems.append(f"model.file: {path} does not exist")
    if mtype == "cantor":
        M = model.get("M")
        A = model.get("alphabet")
        if not isinstance(M, int) or M < 2:
            problems.append(f"model.M: expected an integer >= 2, got {M!r}")
        elif (not isinstance(A, list) or not A
              or not all(isinstance(a, int) and 0 <= a < M for a in A)):
            problems.append(f"model.alphabet: expected a nonempty list of digits in 0..{M - 1}")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        problems.append("params: expected an object")
        params = {}
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        problems.append(f"seed: expected an integer, got {seed!r}")
    for key in ("tol",):
        if key in params:
            _positive(params, key, problems)
    for key in ("max_word_length", "M"):
        if key in params:
            _positive(params, key, problems, integer=True)
    if kind in ("resonances", "weyl-fit"):
        _rectangle(params, problems)
    if kind == "gap" and "rectangle" in params:
        _rectangle(params, problems)
    if kind == "weyl-fit":
        _positive(params, "strip_depth", problems)
        _positive(params, "window_width", problems)
        centers = params.get("window_centers")
        if not isinstance(centers, list) or len(centers) < 4:
            problems.append("params.window_centers: expected a list of at least 4 numbers")
    if kind == "pressure":
        betas = params.get("betas")
        if not isinstance(betas, list) or not betas:
            problems.append("params.betas: expected a nonempty list of numbers")
        if params.get("method", "zeta_root") not in ("zeta_root", "window"):
            problems.append(f"params.method: expected zeta_root or window, got {params.get('method')!r}")
    if kind == "fup":
        kr = params.get("k_range")
        if (not isinstance(kr, list) or len(kr) != 2 or not all(isinstance(k, int) for k in kr)
                or kr[0] < 1 or kr[1] < kr[0] + 2):
            problems.append("params.k_range: expected [k_min, k_max] with 1 <= k_min <= k_max - 2")
    if problems:
        raise ConfigInvalid(problems)
    return JobConfig(kind, model, params, Path(out), seed, Path(base_dir), threads, raw)


def load_config(path, kind, out, threads=1):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigInvalid(f"config: {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config: {path} is not valid JSON ({exc})") from None
    return parse_config(raw, kind, out, path.parent, threads)


# ----------------------------------------------------------------------------
# models


def _model_spec(config):
    model = dict(config.model)
    if "file" in model:
        with open(config.base_dir / model.pop("file")) as fh:
            model.update(json.load(fh))
    model.pop("type", None)
    return model


def build_model(config):
    spec = _model_spec(config)
    mtype = config.model["type"]
    try:
        if mtype == "schottky":
            return S.load_group(spec)
        if mtype == "billiard":
            return B.load_disk_system(spec)
        return F.CantorSpec(spec["M"], tuple(spec["alphabet"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"model: {exc!r}") from None


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _orbit_record(o):
    return {"letters": list(o.word.letters), "angles": [float(a) for a in o.bounce_angles],
            "period": o.period, "monodromy": np.asarray(o.monodromy).tolist(),
            "lead": o.leading_eigenvalue, "det_defect": o.det_defect}


def _orbit_from_record(r):
    return B.BounceOrbit(W.CyclicWord(tuple(r["letters"]), True), np.array(r["angles"]),
                         r["period"], np.array(r["monodromy"]), r["lead"], r["det_defect"])


def billiard_orbits(system, max_word_length):
    """Orbit table, read from or stored in ``$RESLAB_CACHE_DIR`` when set."""
    cache = os.environ.get("RESLAB_CACHE_DIR")
    if not cache:
        return B.enumerate_orbits(system, max_word_length)
    key = hashlib.sha256(_canonical({"format": 1, "system": system.to_dict(),
                                     "max_word_length": max_word_length}).encode()).hexdigest()
    path = Path(cache) / f"orbits-{key}.json"
    if path.is_file():
        LOGGER.info("orbit table from cache %s", path)
        return [_orbit_from_record(r) for r in json.loads(path.read_text())]
    orbits = B.enumerate_orbits(system, max_word_length)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    tmp.write_text(json.dumps([_orbit_record(o) for o in orbits]))
    os.replace(tmp, path)
    return orbits


def ensemble(model, N):
    if isinstance(model, S.SchottkyGroup):
        n, ell = S.length_spectrum(model, N)
        return T.OrbitEnsemble.from_geodesics(n, ell, N, branching=model.alphabet_size - 1)
    return T.OrbitEnsemble.from_orbits(billiard_orbits(model, N), N)


def zeta_function(model, params):
    """Analytic zeta handle, its spectral plane and a provenance record."""
    if isinstance(model, S.SchottkyGroup):
        M = params.get("M", 32)
        op = X.operator(model, M)
        return op.det, "s", {"source": "zeta_det", "truncation": f"M={M}"}
    N = params.get("max_word_length", 6)
    m_max = params.get("m_max", 0)
    zm = B.ZetaModel(billiard_orbits(model, N), N, m_max, model.dirichlet)
    return zm, "k", {"source": "dynamical_zeta", "truncation": f"N={N};m_max={m_max}"}


def _resonances(model, params, threads):
    F_, plane, prov = zeta_function(model, params)
    rect = Z.SearchRectangle.from_bounds(*params["rectangle"])
    finder = Z.ZeroFinder(F_, workers=threads)
    return Z.locate_zeros(F_, rect, tol=params.get("tol", 1e-9), finder=finder,
                          provenance=prov, plane=plane)


# ----------------------------------------------------------------------------
# jobs; each writes into ``out`` and returns nothing


def job_orbits(model, config, out):
    N = config.params.get("max_word_length", 8)
    if isinstance(model, S.SchottkyGroup):
        S.write_geodesic_table(out / "geodesics.csv", S.enumerate_primitives(model, N))
    else:
        B.write_orbit_table(out / "orbits.csv", billiard_orbits(model, N))


def job_pressure(model, config, out):
    p = config.params
    ens = ensemble(model, p.get("max_word_length", 8))
    curve = T.pressure_curve(ens, p["betas"], p.get("method", "zeta_root"))
    T.write_pressure_curve(out / "pressure.csv", curve)


def _pairwise(estimates):
    names = sorted(estimates)
    return [{"a": a, "b": b, "difference": abs(estimates[a] - estimates[b])}
            for i, a in enumerate(names) for b in names[i + 1:]]


def job_dimension(model, config, out):
    p = config.params
    ens = ensemble(model, p.get("max_word_length", 12 if isinstance(model, S.SchottkyGroup) else 8))
    est = {"bowen": T.bowen_dimension(ens)}
    report = {"max_word_length": ens.max_word_length}
    if isinstance(model, S.SchottkyGroup):
        M = p.get("M", 24)
        est["eigenvalue_root"] = float(X.eigenvalue_root(model, M))
        est["first_det_zero"] = float(X.first_real_zero(model, M))
        scales = p.get("box_scales", [2.0 ** -j for j in range(4, 11)])
        _, box = S.limit_set_boxcount(model, p.get("box_depth", 12), scales)
        report.update({"M": M, "box_count": box, "box_scales": list(map(float, scales))})
    report["estimates"] = est
    report["agreement"] = _pairwise(est)
    Z.write_json(out / "dimension.json", report)


def job_gap(model, config, out):
    p = config.params
    ens = ensemble(model, p.get("max_word_length", 8))
    gap = T.gap_prediction(ens)
    T.write_gap_report(out / "gap_prediction.json", gap, ens)
    if "rectangle" in p:
        res = _resonances(model, p, config.threads)
        res.write_csv(out / "resonances.csv")
        if isinstance(model, S.SchottkyGroup):
            delta = T.bowen_dimension(ens)
            report = Z.gap_report(res, delta=delta, pressure_half=gap.pressure_half)
        else:
            report = Z.gap_report(res, pressure_half=gap.pressure_half,
                                  pressure_one=T.pressure_zeta_root(ens, 1.0))
        Z.write_json(out / "gap_report.json", report)


def job_resonances(model, config, out):
    res = _resonances(model, config.params, config.threads)
    res.write_csv(out / "resonances.csv")


def job_weyl_fit(model, config, out):
    p = config.params
    res = _resonances(model, p, config.threads)
    res.write_csv(out / "resonances.csv")
    fit = Z.weyl_fit(res, p["strip_depth"], p["window_width"], p["window_centers"])
    Z.write_json(out / "weyl_fit.json", fit.to_dict())


def job_fup(spec, config, out):
    k0, k1 = config.params["k_range"]
    beta, table, diag = F.fup_exponent(spec, range(k0, k1 + 1))
    F.write_fup_table(out / "fup.csv", spec, table)
    Z.write_json(out / "fup_summary.json", {
        "model": "discrete digit-set model", "M": spec.M, "alphabet": list(spec.alphabet),
        "delta": spec.delta, "beta_estimate": beta, "deepest_k": table[-1].k, **diag})


JOB_RUNNERS = {"orbits": job_orbits, "pressure": job_pressure, "dimension": job_dimension,
               "gap": job_gap, "resonances": job_resonances, "weyl-fit": job_weyl_fit,
               "fup": job_fup}


# ----------------------------------------------------------------------------


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def inputs_hash(config):
    payload = {"config": config.raw, "job": config.kind}
    if "file" in config.model:
        payload["model_file"] = _sha256(config.base_dir / config.model["file"])
    return hashlib.sha256(_canonical(payload).encode()).hexdigest()


def run_job(config):
    """Run one job; returns the manifest. Outputs appear only on success."""
    model = build_model(config)
    out = Path(config.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".reslab-", dir=out.parent))
    try:
        JOB_RUNNERS[config.kind](model, config, tmp)
        files = {p.name: _sha256(p) for p in sorted(tmp.iterdir())}
        manifest = {"tool": "reslab", "version": __version__, "job": config.kind,
                    "inputs_sha256": inputs_hash(config), "seed": config.seed, "files": files,
                    "created": datetime.now(timezone.utc).isoformat(timespec="seconds")}
        Z.write_json(tmp / "manifest.json", manifest)
        if out.exists():
            for p in sorted(tmp.iterdir()):
                os.replace(p, out / p.name)
        else:
            os.replace(tmp, out)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    return manifest


def bundled_config(name):
    """Path of a config shipped with the package (``two_disk_gap``, ``pants_dimension``)."""
    return CONFIG_DIR / f"{name}.json"


def _failing_module(exc):
    """Innermost package module on the traceback, for error context."""
    here = Path(__file__).parent
    name = "cli"
    tb = exc.__traceback__
    while tb is not None:
        path = Path(tb.tb_frame.f_code.co_filename)
        if path.parent == here and path.stem != "errors":
            name = path.stem
        tb = tb.tb_next
    return name


def main(argv=None):
    parser = argparse.ArgumentParser(prog="reslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="job", required=True)
    for job in JOBS:
        p = sub.add_parser(job)
        p.add_argument("--config", required=True, help="JSON job configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker cap (results do not depend on it)")
        p.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigInvalid(f"--threads: expected >= 1, got {args.threads}")
        config = load_config(args.config, args.job, args.out, args.threads)
        manifest = run_job(config)
    except ConfigInvalid as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return exc.exit_code
    except ReslabError as exc:
        print(f"{args.job} failed in {_failing_module(exc)} ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return exc.exit_code
    for name in manifest["files"]:
        print(Path(args.out) / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
