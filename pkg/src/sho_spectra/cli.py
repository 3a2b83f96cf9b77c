"""Command-line driver: per-module subcommands, config-file runs, and the
acceptance-suite `reproduce` entry point.

Exit codes: 0 success, 1 check failure, 2 usage/config error, 3 numerical
failure (non-convergence or eigensolver breakdown).  Every file-producing
run also writes a manifest next to its output; writes are atomic
(temp file + rename).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, acceptance, dtheta as dth, mehler, sho
from .scattering1d import BandEdgeError, LatticeModel, sigma_scan, smatrix
from .specfun import SeriesConvergenceError, conical_legendre_values, m_tau, zeta_kernel

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

KNOWN_KINDS = ("sho-spectrum", "sho-bands", "mehler-verify", "scatter-scan",
               "dtheta-run", "specfun-eval")


class ConfigError(ValueError):
    """Structured configuration problem; carries the offending fields."""

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = list(fields)


# ---------------------------------------------------------------------------
# io helpers


def atomic_write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_csv(path: str, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, float) else str(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _complex_entry(value):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"cannot parse complex entry {value!r}")


def parse_complex_matrix(value):
    """Scalar, [re, im], or nested lists of those."""
    try:
        return _complex_entry(value)
    except ConfigError:
        pass
    if isinstance(value, list):
        return np.array([[_complex_entry(e) for e in row] for row in value])
    raise ConfigError(f"cannot parse jump matrix {value!r}")


# ---------------------------------------------------------------------------
# manifests


@dataclass
class RunManifest:
    config_hash: str
    version: str = __version__
    wall_time_s: float = 0.0
    tol_profile: str = "default"
    checks: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def write(self, base_path: str):
        payload = {
            "config_hash": self.config_hash,
            "version": self.version,
            "wall_time_s": round(self.wall_time_s, 3),
            "tol_profile": self.tol_profile,
            "tolerances": acceptance.TOLERANCES[self.tol_profile],
            "checks": self.checks,
            "outputs": self.outputs,
        }
        atomic_write_text(base_path + ".manifest.json", dump_json(payload))


def config_hash(payload: dict, seed: int) -> str:
    blob = json.dumps({"config": payload, "seed": seed}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    parameters: dict
    seed: int = 0
    output: str | None = None

    @property
    def hash(self) -> str:
        return config_hash({"kind": self.kind, "parameters": self.parameters,
                            "output": self.output}, self.seed)


def _load_json_file(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"no such file: {path}", ["path"])
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}", ["path"]) from exc


def parse_config(path: str) -> ExperimentConfig:
    """Validate a config file into an ExperimentConfig, defaults filled."""
    data = _load_json_file(path)
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object", ["<root>"])
    kind = data.get("kind")
    if kind not in KNOWN_KINDS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {KNOWN_KINDS}", ["kind"])
    params = data.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("parameters must be an object", ["parameters"])
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer", ["seed"])
    cfg = ExperimentConfig(kind=kind, parameters=params, seed=seed, output=data.get("output"))
    _validate_parameters(cfg)
    return cfg


def _validate_parameters(cfg: ExperimentConfig):
    p = cfg.parameters
    if cfg.kind == "dtheta-run":
        for i, jump in enumerate(p.get("theta", {}).get("jumps", [])):
            lam = jump.get("lambda")
            if lam is None or not -2.0 < float(lam) < 2.0:
                raise ConfigError(
                    f"theta.jumps[{i}].lambda = {lam!r} outside the open band (-2, 2)",
                    [f"theta.jumps[{i}].lambda"])
        box = p.get("box", 1024)
        if not (isinstance(box, int) and 8 <= box <= 65536):
            raise ConfigError(f"box = {box!r} out of range [8, 65536]", ["box"])
    if cfg.kind == "sho-spectrum":
        modes = p.get("modes", 256)
        if not (isinstance(modes, int) and 2 <= modes <= 16384):
            raise ConfigError(f"modes = {modes!r} out of range [2, 16384]", ["modes"])
    if cfg.kind == "mehler-verify":
        if p.get("identity", "f1") not in ("f1", "f3", "unitarity"):
            raise ConfigError("identity must be one of f1|f3|unitarity", ["identity"])
    if cfg.kind == "specfun-eval":
        if p.get("fn") not in ("zeta", "conical", "mtau"):
            raise ConfigError("fn must be one of zeta|conical|mtau", ["fn"])


# ---------------------------------------------------------------------------
# symbol / theta file loading


def load_symbol(data: dict) -> sho.PiecewiseSymbol:
    domain = data.get("domain", "circle")
    dim = int(data.get("dim", 1))
    preset = data.get("continuous", "sawtooth")
    jumps = [(float(j["location"]), parse_complex_matrix(j["K"])) for j in data.get("jumps", [])]
    if preset == "sawtooth":
        if domain != "circle":
            raise ConfigError("sawtooth preset requires domain 'circle'", ["domain"])
        if not jumps:
            raise ConfigError("sawtooth preset requires jumps", ["jumps"])
        return sho.sawtooth_symbol(jumps, dim=dim)
    if preset == "zeta-model":
        if domain != "line":
            raise ConfigError("zeta-model preset requires domain 'line'", ["domain"])
        if not jumps:
            raise ConfigError("zeta-model preset requires jumps", ["jumps"])
        return sho.PiecewiseSymbol("line", dim=dim, jumps=tuple(jumps), carrier="zeta-model",
                                   label="zeta-model")
    if preset == "smooth-bump":
        if jumps:
            raise ConfigError("smooth-bump preset is continuous; jumps not allowed", ["jumps"])
        return sho.smooth_bump_symbol(domain)
    raise ConfigError(f"unknown continuous preset {preset!r}", ["continuous"])


# ---------------------------------------------------------------------------
# handlers


def run(cfg: ExperimentConfig, tol_profile: str = "default") -> RunManifest:
    """Dispatch a parsed config to its module and write outputs atomically."""
    t0 = time.monotonic()
    manifest = RunManifest(config_hash=cfg.hash, tol_profile=tol_profile)
    p = cfg.parameters
    out = cfg.output
    if cfg.kind == "specfun-eval":
        text = _eval_specfun(p["fn"], [float(a) for a in p.get("args", [])])
        if out:
            atomic_write_text(out, text + "\n")
            manifest.outputs.append(out)
        else:
            print(text)
    elif cfg.kind == "mehler-verify":
        taus = p.get("tau")
        report = mehler.verify_identity(p.get("identity", "f1"),
                                        taus=None if taus is None else list(np.atleast_1d(taus)))
        key = "max_residual" if "max_residual" in report else "max_defect"
        tol = 1e-6 if report["identity"] in ("f1", "f3") else 1e-3
        manifest.checks[f"{report['identity']}-residual"] = bool(report[key] <= tol)
        if out:
            atomic_write_text(out, dump_json(report))
            manifest.outputs.append(out)
        else:
            print(dump_json(report), end="")
    elif cfg.kind == "sho-spectrum":
        sym = load_symbol(p["symbol"])
        T = sho.assemble_sho_circle(sym, int(p.get("modes", 256)))
        ev = T.eigenvalues()
        if out:
            write_csv(out, ["index", "eigenvalue"],
                      [(i, float(e)) for i, e in enumerate(ev)])
            manifest.outputs.append(out)
        manifest.checks["hermitian"] = True
    elif cfg.kind == "sho-bands":
        sym = load_symbol(p["symbol"])
        bands = sho.predict_bands(sym)
        text = dump_json(bands.to_json())
        if out:
            atomic_write_text(out, text)
            manifest.outputs.append(out)
        else:
            print(text, end="")
    elif cfg.kind == "scatter-scan":
        model = LatticeModel.from_dict(p["model"])
        grid = _parse_grid(p["grid"])
        scan = sigma_scan(model, grid)
        rows = [(r["lambda"], r["t"].real, r["t"].imag, r["r"].real, r["r"].imag,
                 r["sigma1"].real, r["sigma1"].imag, r["sigma2"].real, r["sigma2"].imag,
                 r["abs_sigma1_minus_1"]) for r in scan["rows"]]
        if out:
            write_csv(out, ["lambda", "re_t", "im_t", "re_r", "im_r",
                            "re_sigma1", "im_sigma1", "re_sigma2", "im_sigma2",
                            "abs_sigma1_minus_1"], rows)
            manifest.outputs.append(out)
        manifest.checks["scan-continuity"] = bool(scan["max_dsigma_per_dlambda"] < 100.0)
    elif cfg.kind == "dtheta-run":
        model = LatticeModel.from_dict(p["model"])
        theta = dth.StepFunction.from_dict(p["theta"])
        ladder = [int(n) for n in p.get("ladder", [])] or [int(p.get("box", 1024))]
        rep = dth.ladder_report(model, theta, ladder, seed=cfg.seed)
        payload = {
            "bands": rep["bands"].to_json(),
            "consistency_gap": rep["consistency_gap"],
            "max_eig_ladder": rep["max_eig_ladder"],
            "outside_ladder": rep["outside_ladder"],
            "rungs": [{"N": r["N"], "max_abs_eig": r["max_abs_eig"],
                       "nonzero_count": r["nonzero_count"], "n_outside": r["n_outside"],
                       "bin_counts": r["bin_counts"].tolist()} for r in rep["rungs"]],
            "runtime_s": round(time.monotonic() - t0, 3),
        }
        manifest.checks["consistency"] = bool(rep["consistency_gap"] <= 1e-12)
        if out:
            atomic_write_text(out, dump_json(payload))
            manifest.outputs.append(out)
        else:
            print(dump_json(payload), end="")
    else:
        raise ConfigError(f"unhandled kind {cfg.kind!r}", ["kind"])
    manifest.wall_time_s = time.monotonic() - t0
    if out:
        manifest.write(out)
    return manifest


def _eval_specfun(fn: str, args) -> str:
    if fn == "zeta":
        return "\n".join(format_float(float(zeta_kernel(a))) for a in args)
    if fn == "mtau":
        vals = [m_tau(a) for a in args]
        return "\n".join(f"{format_float(v.real)} {format_float(v.imag)}" for v in vals)
    if fn == "conical":
        if len(args) % 2:
            raise ConfigError("conical expects (tau, x) pairs", ["args"])
        pairs = list(zip(args[::2], args[1::2]))
        return "\n".join(format_float(float(conical_legendre_values(t, x))) for t, x in pairs)
    raise ConfigError(f"unknown function {fn!r}", ["fn"])


def _parse_grid(spec) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    try:
        lo, hi, step = (float(v) for v in str(spec).split(":"))
    except ValueError as exc:
        raise ConfigError(f"grid spec {spec!r} not in lo:hi:step form", ["grid"]) from exc
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


# ---------------------------------------------------------------------------
# reproduce


def reproduce(only: str | None, profile: str, jobs: int, out_dir: str) -> int:
    suite = acceptance.run_suite(only=only, profile=profile, jobs=jobs)
    for r in suite["results"]:
        print(r.line())
        for label, ok, detail in r.subchecks:
            if not ok:
                print(f"         failed sub-check: {label} -- {detail}")
    report = suite["report"]
    path = os.path.join(out_dir, "reproduce_report.json")
    payload = dict(report)
    atomic_write_text(path, dump_json(payload))
    print(f"total wall time: {report['total_wall_time_s']:.1f}s; report: {path}")
    if not report["all_passed"]:
        return EXIT_CHECK_FAILURE
    if report["within_budget"] is False:
        return EXIT_CHECK_FAILURE
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sho-spectra",
                                 description="spectral-band workbench command line")
    ap.add_argument("--jobs", type=int, default=1, help="parallel jobs for the reproduce queue")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    ap.add_argument("--out-dir", default="out", help="directory for suite reports")
    ap.add_argument("--tol-profile", choices=("default", "strict"), default="default")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("specfun", help="special-function evaluation")
    spsub = sp.add_subparsers(dest="action", required=True)
    ev = spsub.add_parser("eval")
    ev.add_argument("--fn", choices=("zeta", "conical", "mtau"), required=True)
    ev.add_argument("--args", nargs="+", type=float, required=True)

    me = sub.add_parser("mehler", help="kernel/transform identity checks")
    mesub = me.add_subparsers(dest="action", required=True)
    ver = mesub.add_parser("verify")
    ver.add_argument("--identity", choices=("f1", "f3", "unitarity"), required=True)
    ver.add_argument("--tau", nargs="*", type=float, default=None)
    ver.add_argument("--out", default=None)

    sh = sub.add_parser("sho", help="symbol truncation spectra and bands")
    shsub = sh.add_subparsers(dest="action", required=True)
    spec = shsub.add_parser("spectrum")
    spec.add_argument("--symbol", required=True)
    spec.add_argument("--modes", type=int, required=True)
    spec.add_argument("--out", required=True)
    bands = shsub.add_parser("bands")
    bands.add_argument("--symbol", required=True)

    sc = sub.add_parser("scatter", help="lattice scattering data")
    scsub = sc.add_subparsers(dest="action", required=True)
    sm = scsub.add_parser("smatrix")
    sm.add_argument("--model", required=True)
    sm.add_argument("--lambda", dest="lam", type=float, required=True)
    scan = scsub.add_parser("scan")
    scan.add_argument("--model", required=True)
    scan.add_argument("--grid", required=True)
    scan.add_argument("--out", required=True)

    dt = sub.add_parser("dtheta", help="step-function difference experiments")
    dtsub = dt.add_subparsers(dest="action", required=True)
    dtrun = dtsub.add_parser("run")
    dtrun.add_argument("--model", required=True)
    dtrun.add_argument("--theta", required=True)
    dtrun.add_argument("--box", type=int, default=1024)
    dtrun.add_argument("--ladder", default=None, help="comma separated box sizes")
    dtrun.add_argument("--out", required=True)

    runp = sub.add_parser("run", help="run a config file")
    runp.add_argument("--config", required=True)

    rep = sub.add_parser("reproduce", help="run the acceptance suite")
    rep.add_argument("--only", default=None,
                     help="restrict to one family: golden|specfun|mehler|sho|scatter|dtheta")
    return ap


def _config_from_args(args) -> ExperimentConfig:
    if args.command == "specfun":
        return ExperimentConfig("specfun-eval", {"fn": args.fn, "args": list(args.args)},
                                seed=args.seed)
    if args.command == "mehler":
        return ExperimentConfig("mehler-verify",
                                {"identity": args.identity, "tau": args.tau},
                                seed=args.seed, output=args.out)
    if args.command == "sho" and args.action == "spectrum":
        return ExperimentConfig("sho-spectrum",
                                {"symbol": _load_json_file(args.symbol), "modes": args.modes},
                                seed=args.seed, output=args.out)
    if args.command == "sho" and args.action == "bands":
        return ExperimentConfig("sho-bands", {"symbol": _load_json_file(args.symbol)},
                                seed=args.seed)
    if args.command == "scatter" and args.action == "scan":
        return ExperimentConfig("scatter-scan",
                                {"model": _load_json_file(args.model), "grid": args.grid},
                                seed=args.seed, output=args.out)
    if args.command == "dtheta":
        ladder = [int(v) for v in args.ladder.split(",")] if args.ladder else None
        params = {"model": _load_json_file(args.model),
                  "theta": _load_json_file(args.theta), "box": args.box}
        if ladder:
            params["ladder"] = ladder
        return ExperimentConfig("dtheta-run", params, seed=args.seed, output=args.out)
    raise ConfigError(f"no config mapping for {args.command}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            if args.only is not None and args.only not in acceptance.FAMILIES:
                raise ConfigError(f"unknown check family {args.only!r}; "
                                  f"expected one of {acceptance.FAMILIES}", ["--only"])
            os.makedirs(args.out_dir, exist_ok=True)
            return reproduce(args.only, args.tol_profile, args.jobs, args.out_dir)
        if args.command == "run":
            cfg = parse_config(args.config)
            manifest = run(cfg, tol_profile=args.tol_profile)
            return EXIT_OK if all(manifest.checks.values()) else EXIT_CHECK_FAILURE
        if args.command == "scatter" and args.action == "smatrix":
            model = LatticeModel.from_dict(_load_json_file(args.model))
            sd = smatrix(model, args.lam)
            payload = {
                "lambda": sd.lam, "k": sd.k,
                "S": [[[v.real, v.imag] for v in row] for row in sd.S],
                "sigmas": [[v.real, v.imag] for v in sd.sigmas],
                "abs_sigma_minus_1": [abs(v - 1.0) for v in sd.sigmas],
                "unitarity_defect": sd.unitarity_defect,
            }
            print(dump_json(payload), end="")
            return EXIT_OK
        cfg = _config_from_args(args)
        _validate_parameters(cfg)
        manifest = run(cfg, tol_profile=args.tol_profile)
        return EXIT_OK if all(manifest.checks.values()) else EXIT_CHECK_FAILURE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BandEdgeError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SeriesConvergenceError, dth.JumpCollisionError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
