"""Command line front end.

Usage::

    agspectrum {hierarchy,curve,spectrum,floquet,lame,verify} [--config PATH] [--out DIR]
               [--format json|csv|svg ...] [--tol-quad T] [--tol-trace T] [--rmax R]
               [--grid NxM] [--basis-bound B]

The config is a TOML document; complex numbers are written as ``[re, im]``.
The output directory is taken from ``--out``, else ``$AGSPECTRUM_OUT``, else
the config, else ``./agspectrum_out``.  Every run writes ``manifest.json``
listing the artifacts with their SHA-256 hashes.

Exit codes: 0 success (including verify reports with failed checks),
1 computation failure (``error.json`` is written), 2 config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import curve as cv
from . import floquet as fl
from . import special as sf
from . import spectrum as sp
from . import symkdv as sk
from .report import CheckReport, _jsonable

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["RunConfig", "ConfigError", "load_config", "run", "verify_suite", "main", "load_schema", "ENV_OUT"]

ENV_OUT = "AGSPECTRUM_OUT"
MODES = ("hierarchy", "curve", "spectrum", "floquet", "lame", "verify")
FORMATS = ("json", "csv", "svg")


def load_schema(artifact: str) -> dict:
    """JSON schema for an artifact name such as ``"spectrum.json"`` or ``"verify"``."""
    from importlib import resources

    stem = artifact[:-5] if artifact.endswith(".json") else artifact
    return json.loads(resources.files(__package__).joinpath("schemas", f"{stem}.schema.json").read_text())


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (exit code 2)."""


@dataclass
class RunConfig:
    mode: str
    branch_points: list | None = None
    pairing: dict | None = None
    lame: dict | None = None
    n: int = 2
    tol_quad: float = 1e-12
    tol_trace: float = 1e-8
    tol_ode: float = 1e-11
    r_max: float = 50.0
    basis_bound: int = 3
    window: tuple | None = None
    grid: tuple = (161, 80)
    out_dir: str = "agspectrum_out"
    formats: list = field(default_factory=lambda: ["json"])
    seed: int = 0

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        for name in ("tol_quad", "tol_trace", "tol_ode", "r_max"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be a positive number")
        if len(self.grid) != 2 or min(self.grid) < 2:
            raise ConfigError("grid sizes must be >= 2")
        if self.basis_bound < 0:
            raise ConfigError("basis_bound must be >= 0")
        if self.n < 0:
            raise ConfigError("n must be >= 0")
        for f in self.formats:
            if f not in FORMATS:
                raise ConfigError(f"unknown format {f!r}")
        if self.window is not None:
            w = self.window
            if len(w) != 4 or not (w[1] > w[0] and w[3] > w[2]):
                raise ConfigError("window must be [re_min, re_max, im_min, im_max] with min < max")
        if self.mode in ("curve", "spectrum", "verify") and self.branch_points is None and self.lame is None:
            raise ConfigError(f"mode {self.mode} needs [curve] branch_points or a [lame] lattice")
        if self.mode in ("floquet", "lame") and self.lame is None:
            raise ConfigError(f"mode {self.mode} needs a [lame] lattice")
        if self.branch_points is not None:
            if len(self.branch_points) == 0:
                raise ConfigError("branch point list is empty")
            if len(self.branch_points) % 2 == 0:
                raise ConfigError("need an odd number (2n+1) of branch points")
        return self


def _cplx(v, what: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{what} must be a number or an [re, im] pair")


def _parse_grid(text) -> tuple:
    if isinstance(text, (list, tuple)):
        vals = text
    else:
        parts = str(text).lower().split("x")
        if len(parts) != 2:
            raise ConfigError("grid must look like NxM")
        vals = parts
    try:
        return (int(vals[0]), int(vals[1]))
    except (TypeError, ValueError):
        raise ConfigError("grid must contain integers") from None


def load_config(path: str | None, mode: str, overrides: dict | None = None, env=None) -> RunConfig:
    """Build a validated :class:`RunConfig` from a TOML file plus overrides."""
    env = os.environ if env is None else env
    doc = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
    cfg_mode = doc.get("mode")
    if cfg_mode is not None and mode is not None and cfg_mode != mode:
        raise ConfigError(f"config mode {cfg_mode!r} conflicts with subcommand {mode!r}")
    mode = mode or cfg_mode
    if mode is None:
        raise ConfigError("no mode given")
    cfg = RunConfig(mode=mode)
    known = {"mode", "curve", "lame", "hierarchy", "tolerances", "spectrum", "floquet", "output", "seed"}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown config sections: {sorted(extra)}")
    curve = doc.get("curve", {})
    if "branch_points" in curve:
        bp = curve["branch_points"]
        if not isinstance(bp, list):
            raise ConfigError("branch_points must be a list")
        cfg.branch_points = [_cplx(v, "branch point") for v in bp]
    if "cuts" in curve or "ray" in curve:
        try:
            cfg.pairing = {"cuts": [list(map(int, c)) for c in curve["cuts"]], "ray": int(curve["ray"]),
                           "direction": _cplx(curve.get("direction", 1.0), "direction")}
        except (KeyError, TypeError, ValueError):
            raise ConfigError("pairing needs cuts = [[a, b], ...] and ray = index") from None
    if "lame" in doc:
        lm = doc["lame"]
        try:
            cfg.lame = {
                "omega1": _cplx(lm["omega1"], "omega1"),
                "omega3": _cplx(lm["omega3"], "omega3"),
                "variant": str(lm.get("variant", "standard")),
                "shift": None if "shift" not in lm else _cplx(lm["shift"], "shift"),
            }
        except KeyError as exc:
            raise ConfigError(f"[lame] needs {exc.args[0]}") from None
    if "hierarchy" in doc:
        cfg.n = int(doc["hierarchy"].get("n", cfg.n))
    tol = doc.get("tolerances", {})
    cfg.tol_quad = float(tol.get("quad", cfg.tol_quad))
    cfg.tol_trace = float(tol.get("trace", cfg.tol_trace))
    cfg.tol_ode = float(tol.get("ode", cfg.tol_ode))
    spc = doc.get("spectrum", {})
    cfg.r_max = float(spc.get("r_max", cfg.r_max))
    cfg.basis_bound = int(spc.get("basis_bound", cfg.basis_bound))
    flq = doc.get("floquet", {})
    if "window" in flq:
        cfg.window = tuple(float(v) for v in flq["window"])
    if "grid" in flq:
        cfg.grid = _parse_grid(flq["grid"])
    out = doc.get("output", {})
    cfg.out_dir = str(out.get("dir", cfg.out_dir))
    if "formats" in out:
        cfg.formats = [str(f) for f in out["formats"]]
    cfg.seed = int(doc.get("seed", cfg.seed))
    if env.get(ENV_OUT):
        cfg.out_dir = env[ENV_OUT]
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k == "grid":
            v = _parse_grid(v)
        setattr(cfg, k, v)
    if cfg.mode == "hierarchy" and cfg.branch_points is None and cfg.lame is None:
        pass
    return cfg.validate()


# ---------------------------------------------------------------------------
# pipelines


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=1, allow_nan=False) + "\n"


def _scenario(cfg: RunConfig):
    lm = cfg.lame
    try:
        return sf.lame_scenario(lm["omega1"], lm["omega3"], lm["variant"], lm["shift"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _curve(cfg: RunConfig):
    if cfg.branch_points is not None:
        return cv.new_curve(cfg.branch_points, cfg.pairing), None
    s = _scenario(cfg)
    return cv.new_curve(s.branch_points), s


def _trace_opts(cfg: RunConfig) -> sp.TraceOptions:
    return sp.TraceOptions(r_max=cfg.r_max, tol_trace=cfg.tol_trace)


def _hierarchy(cfg: RunConfig) -> dict:
    n = cfg.n
    fs = sk.all_f(n + 1)
    lines = [f"f{k} = {sk.to_text(f)}" for k, f in enumerate(fs)]
    lines.append(f"sKdV{n} = {sk.to_text(sk.skdv(n))}")
    lines.append(f"F{n} = {sk.to_text(sk.build_F(n))}")
    lines.append(f"H{n + 1} = {sk.to_text(sk.build_H(n))}")
    data = {
        "n": n,
        "f": [sk.to_text(f) for f in fs],
        "skdv": sk.to_text(sk.skdv(n)),
        "F": sk.to_text(sk.build_F(n)),
        "H": sk.to_text(sk.build_H(n)),
        "latex": {"f": [sk.to_latex(f) for f in fs], "skdv": sk.to_latex(sk.skdv(n))},
    }
    return {"hierarchy.txt": "\n".join(lines) + "\n", "hierarchy.json": _dumps(data)}


def _curve_mode(cfg: RunConfig) -> dict:
    c, s = _curve(cfg)
    M, err = cv.moment_matrix(c, cfg.tol_quad)
    pd = cv.spectral_normalization(c, cfg.basis_bound)
    data = {"curve": cv.curve_to_dict(c), "moment_error": err, "normalization": pd.to_dict()}
    if s is not None:
        data["scenario"] = s.to_dict()
    return {"curve.json": _dumps(data)}


def _spectrum_artifacts(cfg, c, pd, stem="spectrum") -> dict:
    res = sp.trace_arcs(c, pd, _trace_opts(cfg))
    out = {}
    if "json" in cfg.formats:
        out[f"{stem}.json"] = _dumps(sp.result_to_dict(res))
    if "csv" in cfg.formats:
        out[f"{stem}.csv"] = sp.result_to_csv(res)
    if "svg" in cfg.formats:
        out[f"{stem}.svg"] = sp.result_to_svg(res)
    return out


def _spectrum_mode(cfg: RunConfig) -> dict:
    c, _ = _curve(cfg)
    cv.moment_matrix(c, cfg.tol_quad)
    pd = cv.spectral_normalization(c, cfg.basis_bound)
    return _spectrum_artifacts(cfg, c, pd)


def _default_window(s) -> tuple:
    E = np.array(s.branch_points)
    M = float(np.abs(E).max())
    return (float(E.real.min()) - 0.5 * M, 5 * M, float(E.imag.min()) - 0.5 * M - 0.1,
            float(E.imag.max()) + 0.5 * M + 0.1)


def _floquet_mode(cfg: RunConfig) -> dict:
    s = _scenario(cfg)
    pot = fl.PeriodicPotential.from_lame(s)
    window = cfg.window or _default_window(s)
    arcs = fl.spectrum_scan(pot, window, cfg.grid, cfg.tol_ode)
    out = {}
    data = {"scenario": s.to_dict(), "window": list(window), "grid": list(cfg.grid),
            "arcs": [a.to_dict() for a in arcs]}
    if "json" in cfg.formats:
        out["floquet.json"] = _dumps(data)
    if "csv" in cfg.formats:
        lines = ["arc_id,re,im,residual"]
        for i, a in enumerate(arcs):
            lines += [f"{i},{z.real:.17g},{z.imag:.17g},{r:.6g}" for z, r in zip(a.vertices, a.residuals)]
        out["floquet.csv"] = "\n".join(lines) + "\n"
    return out


def _lame_mode(cfg: RunConfig) -> dict:
    s = _scenario(cfg)
    c = cv.new_curve(s.branch_points)
    cv.moment_matrix(c, cfg.tol_quad)
    pd = cv.spectral_normalization(c, cfg.basis_bound)
    fm = set(cfg.formats) | {"json", "svg"}
    sub = RunConfig(**{**cfg.__dict__, "formats": sorted(fm)})
    out = _spectrum_artifacts(sub, c, pd)
    pot = fl.PeriodicPotential.from_lame(s)
    summary = {
        "scenario": s.to_dict(),
        "lambda_tilde": [complex(v) for v in pd.lambda_tilde],
        "lambda_error": abs(complex(pd.lambda_tilde[0]) - s.expected_lambda),
        "mean_V": complex(pd.mean_V),
        "period_mean_V": fl.period_mean(pot),
        "basis": pd.to_dict(),
    }
    out["lame.json"] = _dumps(summary)
    return out


def _entry_fail(name: str, exc: BaseException) -> dict:
    return {"name": name, "passed": False, "max_residual": None, "tol": None, "residuals": [],
            "details": {"error": f"{type(exc).__name__}: {exc}"}}


def verify_suite(cfg: RunConfig) -> dict:
    """Run the identity checks of every module and collect a report.

    Failures (including exceptions) become report entries; the function
    itself does not raise for computational problems.
    """
    entries = []
    rng = np.random.default_rng(cfg.seed)

    def add(name, fn):
        try:
            res = fn()
        except Exception as exc:  # report semantics
            entries.append(_entry_fail(name, exc))
            return None
        for r in res if isinstance(res, list) else [res]:
            entries.append(r.to_dict())
        return res

    def hier():
        out = []
        for n in (1, 2):
            rep = sk.verify_core_identities(n)
            out.append(CheckReport(f"symkdv.identities.n{n}", rep.passed, 0.0 if rep.passed else 1.0, 0.0,
                                   [], {"identities": rep.to_dict()}))
        return out

    add("symkdv.identities", hier)

    scen = None
    if cfg.lame is not None:
        try:
            scen = _scenario(cfg)
        except ConfigError as exc:
            entries.append(_entry_fail("special.scenario", exc))

    if scen is not None:
        lat = scen.lattice

        def lattice():
            e = np.array(lat.e)
            r1 = abs(e.sum())
            cub = np.abs(4 * e**3 - lat.g2 * e - lat.g3) / max(1.0, abs(lat.g2) ** 1.5, abs(lat.g3))
            leg = abs(lat.eta1 * lat.omega3 - lat.eta3 * lat.omega1 - 0.5j * math.pi)
            u = rng.uniform(0.05, 0.95, 20) * 2 * lat.omega1 + rng.uniform(0.05, 0.95, 20) * 2 * lat.omega3
            p, dp, _, _ = sf.weierstrass(lat, u)
            ode = np.abs(dp**2 - (4 * p**3 - lat.g2 * p - lat.g3)) / np.maximum(1.0, np.abs(dp) ** 2)
            return [CheckReport.from_residuals("special.e_sum", [r1], 1e-12),
                    CheckReport.from_residuals("special.cubic", cub, 1e-10),
                    CheckReport.from_residuals("special.legendre", [leg], 1e-12),
                    CheckReport.from_residuals("special.wp_ode", ode, 1e-10)]

        add("special.lattice", lattice)
        if scen.variant == "standard":
            xs = np.linspace(0.05, 1.95, 20) * scen.lattice.omega1.real
            add("special.its_matveev", lambda: sf.its_matveev_genus1_check(scen, xs))
            add("special.neumann", lambda: sf.neumann_nu_check(scen, xs[:10]))

    c = None
    try:
        c = cv.new_curve(cfg.branch_points, cfg.pairing) if cfg.branch_points is not None else \
            cv.new_curve(scen.branch_points) if scen is not None else None
        if c is None:
            raise ValueError("no curve available")
        entries.append(CheckReport("curve.construction", True, 0.0, 0.0).to_dict())
    except Exception as exc:
        entries.append(_entry_fail("curve.construction", exc))
        c = None

    pd = None
    if c is not None:
        def quad():
            M1, e1 = cv.moment_matrix(c, cfg.tol_quad)
            M2, e2 = cv.moment_matrix(c, cfg.tol_quad / 2)
            diff = float(np.abs(M1 - M2).max())
            return CheckReport.from_residuals("curve.quadrature_convergence", [diff], max(e1, cfg.tol_quad),
                                              error_estimate=e1)

        add("curve.quadrature_convergence", quad)

        def norm():
            nonlocal pd
            pd = cv.spectral_normalization(c, cfg.basis_bound)
            # fresh quadrature at a tighter tolerance, in the chosen basis
            per = cv.cycle_periods(c, pd.poly, pd.basis_transform, cfg.tol_quad / 4)
            scale = max(1.0, float(np.abs(per).max()))
            if pd.normalization == "real-periods":
                res = list(np.abs((0.5j * per).real) / scale)
            else:
                res = list(np.abs(per[: c.genus]) / scale)
            return CheckReport.from_residuals("curve.normalization", res, 1e-9,
                                              normalization=pd.normalization,
                                              basis_verified=pd.real_b_verified)

        add("curve.normalization", norm)

    if pd is not None and scen is not None:
        add("curve.lame_lambda", lambda: CheckReport.from_residuals(
            "curve.lame_lambda", [abs(complex(pd.lambda_tilde[0]) - scen.expected_lambda),
                                  abs(complex(pd.mean_V) - scen.expected_mean_V)], 1e-8))

    if pd is not None:
        def spec():
            res = sp.trace_arcs(c, pd, _trace_opts(cfg))
            errs = [e for r in res.endpoint_report for e in r["angle_errors"]]
            cover = [0.0 if r["arc_count"] >= 1 else 1.0 for r in res.endpoint_report]
            n_semi = len(res.semi_infinite)
            loops = [len(sp.self_intersections(a.vertices)) for a in res.arcs]
            xs = []
            for x in res.crossings:
                gaps = np.diff(np.concatenate([x.measured_angles, [x.measured_angles[0] + 2 * math.pi]])) \
                    if x.measured_angles else np.array([math.inf])
                xs.extend(np.abs(gaps - math.pi / (x.multiplicity + 1)).tolist())
            out = [CheckReport.from_residuals("spectrum.coverage", cover, 0.0),
                   CheckReport.from_residuals("spectrum.semi_infinite", [abs(n_semi - 1)], 0.0),
                   CheckReport.from_residuals("spectrum.branch_angles", errs or [0.0], 1e-3),
                   CheckReport.from_residuals("spectrum.no_loops", loops, 0.0),
                   CheckReport.from_residuals("spectrum.issues", [len(res.issues)], 0.0, issues=res.issues)]
            if xs:
                out.append(CheckReport.from_residuals("spectrum.crossing_angles", xs, 1e-2))
            return out

        add("spectrum", spec)

    if scen is not None and pd is not None:
        pot = fl.PeriodicPotential.from_lame(scen)

        def floq():
            zs = np.array([-2.0 + 0.5j, 0.3 - 0.7j, 1.5 + 1.0j, 4.0 + 0.1j])
            ms = fl.monodromy_batch(pot, zs, cfg.tol_ode)
            det = [abs(m.det - 1) / max(1.0, abs(m.c * m.sx) + abs(m.s * m.cx)) for m in ms]
            d0 = fl.discriminant(pot, zs, cfg.tol_ode)
            d1 = fl.discriminant(pot, zs, cfg.tol_ode, x0=pot.x0 + 0.3)
            out = [CheckReport.from_residuals("floquet.det", det, 1e-10),
                   CheckReport.from_residuals("floquet.x0_independence", np.abs(d0 - d1), 1e-9),
                   fl.mean_value_bridge(pot, pd)]
            band = _band_samples(c, pd, scen, 12)
            off = np.array([-2.5 + 0.4j, 0.6 + 0.3j, 2.0 - 0.8j, 3.0 + 1.5j])
            links = fl.check_green_discriminant_links(pot, c, pd, band, off, x_samples=[0.1, 0.5, 0.9])
            for k, r in links.items():
                r.name = f"floquet.link_{k}"
                out.append(r)
            return out

        add("floquet", floq)

    n_fail = sum(not e["passed"] for e in entries)
    return {"passed": n_fail == 0, "n_checks": len(entries), "n_failed": n_fail, "entries": entries}


def _band_samples(c, pd, scen, k: int) -> np.ndarray:
    """Points on traced arcs of a real-period Lamé spectrum (for identity (ii))."""
    res = sp.trace_arcs(c, pd)
    pts = []
    for a in res.arcs:
        v = a.vertices[1:-1]
        v = v[np.abs(v) < 10 * c.scale]
        if v.size:
            idx = np.linspace(0, v.size - 1, min(k, v.size)).astype(int)
            pts.extend(v[idx])
    return np.array(pts)


def _verify_mode(cfg: RunConfig) -> dict:
    return {"verify.json": _dumps(verify_suite(cfg))}


_RUNNERS = {
    "hierarchy": _hierarchy,
    "curve": _curve_mode,
    "spectrum": _spectrum_mode,
    "floquet": _floquet_mode,
    "lame": _lame_mode,
    "verify": _verify_mode,
}


def _write(out_dir: Path, artifacts: dict) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    items = []
    for name in sorted(artifacts):
        data = artifacts[name].encode("utf-8")
        (out_dir / name).write_bytes(data)
        items.append({"name": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
    manifest = {"artifacts": items}
    (out_dir / "manifest.json").write_text(_dumps(manifest), encoding="utf-8")
    return manifest


def run(cfg: RunConfig) -> int:
    """Dispatch on ``cfg.mode`` and write artifacts; returns the exit code."""
    out_dir = Path(cfg.out_dir)
    try:
        artifacts = _RUNNERS[cfg.mode](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "mode": cfg.mode}
        loc = getattr(exc, "location", None)
        if loc is not None:
            err["location"] = [float(loc.real), float(loc.imag)]
        _write(out_dir, {"error.json": _dumps(err)})
        print(json.dumps(err), file=sys.stderr)
        return 1
    _write(out_dir, artifacts)
    return 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="agspectrum", description="Spectral arcs of finite-gap Schrodinger operators")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", help="TOML config file")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--format", action="append", choices=FORMATS, dest="formats")
    ap.add_argument("--tol-quad", type=float)
    ap.add_argument("--tol-trace", type=float)
    ap.add_argument("--rmax", type=float)
    ap.add_argument("--grid", help="NxM scan grid")
    ap.add_argument("--basis-bound", type=int)
    ap.add_argument("--n", type=int, help="hierarchy level")
    return ap


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    overrides = {
        "out_dir": args.out,
        "formats": args.formats,
        "tol_quad": args.tol_quad,
        "tol_trace": args.tol_trace,
        "r_max": args.rmax,
        "grid": args.grid,
        "basis_bound": args.basis_bound,
        "n": args.n,
    }
    try:
        cfg = load_config(args.config, args.mode, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
