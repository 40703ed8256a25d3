"""Command-line interface: ``subplanck <subcommand> [options]``.

Every job is resolved into a plain parameter dictionary, evaluated entirely
in memory, and only then written out together with a manifest that records
the parameters, the library version and sha256 checksums of every file.
``--verify`` (or the ``verify`` subcommand) recomputes a job from its
manifest and compares checksums instead of writing.

Exit codes: 0 success, 1 verification mismatch, 2 invalid job
specification, 3 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import glob
import hashlib
import json
import math
import os
import re
import sys

import numpy as np

from . import __version__, closedform, fock
from .analysis import GridSpec, central_feature, eval_grid, zero_profile
from .exceptions import NumericalGuardError, TruncationError
from .export import dumps_json, grid_to_csv, grid_to_pgrd
from .render import render_png
from .states import DeformedState, state_from_dict

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID, EXIT_GUARD = 0, 1, 2, 3
FORMATS = ("csv", "json", "pgrd", "png")
COMMANDS = ("wigner", "sensitivity", "pnd", "fidelity-scan", "features", "zero-profile", "fixtures")
GRID_COMMANDS = ("wigner", "sensitivity", "features")

DEFAULTS = {
    "family": None,
    "c0": None,
    "alpha": None,
    "alpha_scan": None,
    "mode": "none",
    "r": 0,
    "q": 0,
    "grid": None,
    "x_range": None,
    "p_range": None,
    "nx": None,
    "np": None,
    "n_max": 30,
    "threshold_frac": 1e-2,
    "n_angles": 64,
    "r_max": 2.0,
    "zero_tol": 1e-4,
    "quantity": "wigner",
    "cutoff": None,
    "out": ".",
    "prefix": None,
    "threads": None,
    "verify": False,
}
DEFAULT_GRID = "-4:4:-4:4:201"
DEFAULT_FIXTURE_GRID = "-4:4:-4:4:41"


class SpecError(ValueError):
    """Invalid job specification (exit code 2)."""


# --- argument parsing -------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    st = common.add_argument_group("state")
    st.add_argument("--family", choices=("coherent", "cat", "compass"))
    st.add_argument("--c0", help="compass/cat amplitude; start:stop:num for fidelity-scan")
    st.add_argument("--alpha", help="coherent amplitude as re,im")
    st.add_argument("--mode", choices=("sa", "as", "none"))
    st.add_argument("--r", type=int, help="photons added")
    st.add_argument("--q", type=int, help="photons subtracted")
    out = common.add_argument_group("output")
    out.add_argument("--out", help="output directory (default: current directory)")
    out.add_argument("--prefix", help="file name stem (default: the subcommand)")
    for fmt in FORMATS:
        out.add_argument(f"--{fmt}", action="store_true", default=None, help=f"write {fmt.upper()} output")
    out.add_argument("--config", help="JSON file of defaults; explicit flags take precedence")
    out.add_argument("--verify", action="store_true", default=None, help="recompute and compare with the manifest")
    out.add_argument("--threads", type=int, help="worker threads (capped by SUBPLANCK_THREADS)")

    grid = argparse.ArgumentParser(add_help=False)
    g = grid.add_argument_group("grid")
    g.add_argument("--grid", help="square grid xmin:xmax:pmin:pmax:n")
    g.add_argument("--x-range", dest="x_range", help="xmin:xmax (rectangular grids)")
    g.add_argument("--p-range", dest="p_range", help="pmin:pmax (rectangular grids)")
    g.add_argument("--nx", type=int)
    g.add_argument("--np", type=int)

    parser = argparse.ArgumentParser(prog="subplanck", description="Phase-space quantities of deformed kitten states.")
    parser.add_argument("--version", action="version", version=f"subplanck {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("wigner", parents=[common, grid], help="Wigner function on a grid")
    sub.add_parser("sensitivity", parents=[common, grid], help="displacement sensitivity on a (dx, dp) grid")
    p = sub.add_parser("pnd", parents=[common], help="photon-number distribution (coherent family)")
    p.add_argument("--n-max", dest="n_max", type=int)
    p = sub.add_parser("fidelity-scan", parents=[common], help="fidelity with the undeformed base over an amplitude range")
    p.add_argument("--alpha-scan", dest="alpha_scan", help="start:stop:num of real coherent amplitudes")
    p = sub.add_parser("features", parents=[common, grid], help="central-feature report of the Wigner function")
    p.add_argument("--threshold-frac", dest="threshold_frac", type=float)
    p = sub.add_parser("zero-profile", parents=[common], help="first sensitivity zero along each direction")
    p.add_argument("--n-angles", dest="n_angles", type=int)
    p.add_argument("--r-max", dest="r_max", type=float)
    p.add_argument("--zero-tol", dest="zero_tol", type=float)
    p = sub.add_parser("fixtures", parents=[common, grid], help="Fock-oracle test vectors")
    p.add_argument("--quantity", choices=("wigner", "sensitivity", "pnd", "norm"))
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--cutoff", type=int)
    p = sub.add_parser("verify", help="recompute every manifest in a directory and compare checksums")
    p.add_argument("directory", nargs="?", default=".")
    return parser


_NEG_VALUE = re.compile(r"^-[\d.]")


def _join_negative_values(argv: list[str]) -> list[str]:
    """Let values such as ``--grid -4:4:-4:4:201`` through argparse."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEG_VALUE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _merge_config(ns: dict, path: str | None) -> dict:
    """Explicit flags win over config values, which win over defaults."""
    merged = dict(DEFAULTS)
    if path:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise SpecError("config file must hold a JSON object")
        known = set(DEFAULTS) | set(FORMATS)
        for key, value in cfg.items():
            k = key.replace("-", "_")
            if k not in known:
                raise SpecError(f"unknown config key {key!r}")
            merged[k] = value
    for key, value in ns.items():
        if value is not None and key not in ("config", "command"):
            merged[key] = value
    return merged


# --- parameter resolution ---------------------------------------------------


def _floats(text, n: int, what: str) -> list[float]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).replace(",", ":").split(":") if n > 1 else [text]
    try:
        vals = [float(v) for v in parts]
    except (TypeError, ValueError):
        raise SpecError(f"{what}: cannot parse {text!r}") from None
    if len(vals) != n:
        raise SpecError(f"{what}: expected {n} numbers, got {text!r}")
    if not all(math.isfinite(v) for v in vals):
        raise SpecError(f"{what}: values must be finite")
    return vals


def _scan(text, what: str) -> dict:
    parts = str(text).split(":")
    if len(parts) != 3:
        raise SpecError(f"{what}: expected start:stop:num, got {text!r}")
    start, stop = _floats(parts[:2], 2, what)
    try:
        num = int(parts[2])
    except ValueError:
        raise SpecError(f"{what}: num must be an integer") from None
    if num < 1:
        raise SpecError(f"{what}: num must be positive")
    return {"start": start, "stop": stop, "num": num}


def _grid_params(opts: dict, default: str) -> dict:
    rect = [opts.get(k) is not None for k in ("x_range", "p_range", "nx", "np")]
    if any(rect):
        if opts.get("grid") is not None:
            raise SpecError("use either --grid or the rectangular grid flags, not both")
        if not all(rect):
            raise SpecError("rectangular grids need --x-range, --p-range, --nx and --np")
        x0, x1 = _floats(opts["x_range"], 2, "--x-range")
        p0, p1 = _floats(opts["p_range"], 2, "--p-range")
        spec = GridSpec(x0, x1, p0, p1, opts["nx"], opts["np"])
    else:
        text = opts.get("grid") or default
        parts = str(text).split(":")
        if len(parts) != 5:
            raise SpecError(f"--grid: expected xmin:xmax:pmin:pmax:n, got {text!r}")
        x0, x1, p0, p1 = _floats(parts[:4], 4, "--grid")
        try:
            n = int(parts[4])
        except ValueError:
            raise SpecError("--grid: n must be an integer") from None
        spec = GridSpec(x0, x1, p0, p1, n, n)
    return spec.to_dict()


def _state_params(opts: dict, allow_scan: bool = False) -> dict:
    fam = opts.get("family")
    if fam is None:
        raise SpecError("--family is required")
    state = {"family": fam, "mode": str(opts.get("mode") or "none").lower(), "r": int(opts["r"]), "q": int(opts["q"])}
    if state["mode"] == "none" and (state["r"] or state["q"]):
        raise SpecError("--r/--q need --mode sa or --mode as")
    if fam == "coherent":
        if opts.get("alpha") is None:
            if not allow_scan:
                raise SpecError("the coherent family needs --alpha re,im")
        else:
            state["alpha"] = _floats(opts["alpha"], 2, "--alpha")
    else:
        c0 = opts.get("c0")
        if c0 is None:
            raise SpecError(f"the {fam} family needs --c0")
        if not (allow_scan and ":" in str(c0)):
            state["c0"] = _floats(c0, 1, "--c0")[0]
    return state


def resolve(opts: dict) -> dict:
    """Turn merged options into the canonical job parameters."""
    cmd = opts["command"]
    if cmd not in COMMANDS:
        raise SpecError(f"unknown command {cmd!r}")
    formats = sorted(f for f in FORMATS if opts.get(f))
    if not formats:
        formats = ["json"] if cmd in ("features", "zero-profile", "fixtures") else ["csv", "json"]
    params = {"command": cmd, "formats": formats, "prefix": opts.get("prefix") or cmd}
    if not re.fullmatch(r"[A-Za-z0-9._-]+", params["prefix"]):
        raise SpecError("--prefix may only contain letters, digits, '.', '_' and '-'")
    if cmd == "fidelity-scan":
        state = _state_params(opts, allow_scan=True)
        if state["mode"] == "none":
            raise SpecError("fidelity-scan needs --mode sa or --mode as")
        if state["family"] == "coherent":
            if opts.get("alpha_scan") is None:
                raise SpecError("coherent fidelity-scan needs --alpha-scan start:stop:num")
            params["scan"] = dict(_scan(opts["alpha_scan"], "--alpha-scan"), variable="alpha")
            state.pop("alpha", None)
        else:
            params["scan"] = dict(_scan(opts["c0"], "--c0"), variable="c0")
        params["state"] = state
    else:
        params["state"] = _state_params(opts)
    if cmd in GRID_COMMANDS or (cmd == "fixtures" and opts.get("quantity") in ("wigner", "sensitivity")):
        params["grid"] = _grid_params(opts, DEFAULT_FIXTURE_GRID if cmd == "fixtures" else DEFAULT_GRID)
    if cmd == "pnd" or (cmd == "fixtures" and opts.get("quantity") == "pnd"):
        params["n_max"] = int(opts["n_max"])
        if params["n_max"] < 0:
            raise SpecError("--n-max must be non-negative")
    if cmd == "features":
        params["threshold_frac"] = float(opts["threshold_frac"])
    if cmd == "zero-profile":
        params.update(n_angles=int(opts["n_angles"]), r_max=float(opts["r_max"]), zero_tol=float(opts["zero_tol"]))
    if cmd == "fixtures":
        params["quantity"] = opts["quantity"]
        params["cutoff"] = None if opts.get("cutoff") is None else int(opts["cutoff"])
    unsupported = {
        "pnd": {"pgrd", "png"},
        "fidelity-scan": {"pgrd", "png"},
        "zero-profile": {"pgrd", "png"},
        "fixtures": {"csv", "pgrd", "png"},
    }.get(cmd, set())
    bad = unsupported.intersection(formats)
    if bad:
        raise SpecError(f"{cmd} cannot produce {', '.join(sorted(bad))} output")
    return params


# --- job evaluation ---------------------------------------------------------


def _build_state(desc: dict):
    try:
        return state_from_dict(desc)
    except (ValueError, TypeError) as exc:
        raise SpecError(f"invalid state: {exc}") from exc


def _grid_spec(params: dict) -> GridSpec:
    return GridSpec(**params["grid"])


def _grid_outputs(grid, params, palette, files, meta):
    stem = params["prefix"]
    if "csv" in params["formats"]:
        files[f"{stem}.csv"] = grid_to_csv(grid)
    if "pgrd" in params["formats"]:
        files[f"{stem}.pgrd"] = grid_to_pgrd(grid)
    if "png" in params["formats"]:
        data, info = render_png(grid, palette)
        files[f"{stem}.png"] = data
        meta["colorbar"] = info


def _rows_csv(header: str, rows, missing: str = "none-found") -> bytes:
    lines = [header]
    for row in rows:
        lines.append(",".join(missing if v is None else (repr(float(v)) if isinstance(v, float) else str(v)) for v in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def run_job(params: dict, threads: int | None = None) -> tuple[dict, dict]:
    """Evaluate a job. Returns ({file name: bytes}, extra manifest metadata)."""
    cmd = params["command"]
    stem = params["prefix"]
    files: dict = {}
    meta: dict = {}
    want_json = "json" in params["formats"]

    if cmd in ("wigner", "sensitivity"):
        state = _build_state(params["state"])
        grid = eval_grid(state, cmd, _grid_spec(params), workers=threads)
        _grid_outputs(grid, params, "diverging" if cmd == "wigner" else "sequential", files, meta)
        if want_json:
            files[f"{stem}.json"] = dumps_json(
                {
                    "quantity": cmd,
                    "state": params["state"],
                    "grid": params["grid"],
                    "min": float(grid.values.min()),
                    "max": float(grid.values.max()),
                }
            )

    elif cmd == "pnd":
        state = _build_state(params["state"])
        n = np.arange(params["n_max"] + 1)
        probs = _pnd(state, n)
        if "csv" in params["formats"]:
            files[f"{stem}.csv"] = _rows_csv("n,probability", zip(n.tolist(), probs.tolist()))
        if want_json:
            files[f"{stem}.json"] = dumps_json(
                {"state": params["state"], "n": n, "probability": probs, "total": float(np.sum(probs)), "mean": float(np.sum(n * probs))}
            )

    elif cmd == "fidelity-scan":
        sc = params["scan"]
        xs = np.linspace(sc["start"], sc["stop"], sc["num"])
        vals = [_fidelity_point(params["state"], sc["variable"], float(v)) for v in xs]
        if "csv" in params["formats"]:
            files[f"{stem}.csv"] = _rows_csv(f"{sc['variable']},fidelity", [(float(a), b) for a, b in zip(xs, vals)], "nan")
        if want_json:
            files[f"{stem}.json"] = dumps_json(
                {"state": params["state"], "scan": sc, "values": xs, "fidelity": vals, "undefined_points": sum(v is None for v in vals)}
            )

    elif cmd == "features":
        state = _build_state(params["state"])
        grid = eval_grid(state, "wigner", _grid_spec(params), workers=threads)
        report = central_feature(grid, params["threshold_frac"])
        _grid_outputs(grid, dict(params, formats=[f for f in params["formats"] if f != "csv"]), "diverging", files, meta)
        if "csv" in params["formats"]:
            files[f"{stem}.csv"] = _rows_csv("x,p", [(float(a), float(b)) for a, b in report.contour])
        if want_json:
            files[f"{stem}.json"] = dumps_json(dict(report.to_dict(), state=params["state"], grid=params["grid"]))

    elif cmd == "zero-profile":
        state = _build_state(params["state"])
        prof = zero_profile(state, params["n_angles"], params["r_max"], params["zero_tol"])
        if "csv" in params["formats"]:
            files[f"{stem}.csv"] = _rows_csv("angle,first_zero_radius", zip(prof.angles, prof.first_zero_radius))
        if want_json:
            files[f"{stem}.json"] = dumps_json(dict(prof.to_dict(), state=params["state"], max_radius=prof.max_radius))

    elif cmd == "fixtures":
        state = _build_state(params["state"])
        files[f"{stem}.json"] = dumps_json(_fixture(state, params))

    return files, meta


def _pnd(state, n):
    if not isinstance(state, DeformedState):
        if state.family != "coherent":
            raise SpecError("pnd is available for the coherent family only")
        alpha = complex(state.alphas[0])
        return closedform.pnd_sa_coherent(alpha, 0, 0, n)
    if state.family != "coherent":
        raise SpecError("pnd is available for the coherent family only")
    alpha = complex(state.base.alphas[0])
    fn = closedform.pnd_sa_coherent if state.recipe.mode == "sa" else closedform.pnd_as_coherent
    return np.asarray(fn(alpha, state.recipe.r, state.recipe.q, n), dtype=float)


def _fidelity_point(template: dict, variable: str, value: float):
    """Fidelity at one scan point; None where the state is undefined (e.g. null)."""
    desc = dict(template)
    if variable == "alpha":
        desc["alpha"] = [value, 0.0]
    else:
        desc["c0"] = value
    try:
        state = state_from_dict(desc)
    except (ValueError, TypeError):
        return None
    if not isinstance(state, DeformedState):
        raise SpecError("fidelity-scan needs a deformation")
    return float(closedform.fidelity_deformed_vs_base(state))


def _fixture(state, params: dict) -> dict:
    q = params["quantity"]
    cutoff = params["cutoff"]
    out = {"params": {"state": params["state"], "quantity": q}}
    if q in ("wigner", "sensitivity"):
        spec = _grid_spec(params)
        out["params"]["grid"] = params["grid"]
        x, p = np.meshgrid(spec.x, spec.p)
        pts = (x + 1j * p) / math.sqrt(2.0)
        if q == "wigner":
            need = int(math.ceil(4.0 * float(np.max(np.abs(pts))) ** 2)) + 1
            n = cutoff if cutoff is not None else max(fock.auto_cutoff(state), need)
            v = fock.state_to_fock(state, n)
            vals = fock.wigner_fock(v, pts)
        else:
            n = cutoff
            vals = fock.sensitivity_fock(state, pts, cutoff=cutoff)
            if n is None:
                n = fock.auto_cutoff(state)
        out["values"] = [[float(a), float(b), float(c)] for a, b, c in zip(x.ravel(), p.ravel(), np.ravel(vals))]
    elif q == "pnd":
        n = cutoff if cutoff is not None else max(fock.auto_cutoff(state), params["n_max"])
        v = fock.state_to_fock(state, n)
        probs = np.abs(v.amps) ** 2 / v.norm2
        out["params"]["n_max"] = params["n_max"]
        out["values"] = [[k, float(probs[k])] for k in range(params["n_max"] + 1)]
    else:
        n = cutoff if cutoff is not None else fock.auto_cutoff(state)
        v = fock.state_to_fock(state, n)
        out["values"] = [v.norm2]
    out["cutoff"] = int(n)
    return out


# --- manifest ---------------------------------------------------------------


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def build_manifest(params: dict, files: dict, meta: dict) -> dict:
    man = {
        "tool": "subplanck",
        "version": __version__,
        "params": params,
        "files": {name: _sha256(data) for name, data in sorted(files.items())},
    }
    man.update(meta)
    return man


def _manifest_name(params: dict) -> str:
    return f"{params['prefix']}.manifest.json"


def _compare(manifest: dict, files: dict, directory: str) -> list[str]:
    problems = []
    recorded = manifest.get("files", {})
    for name, data in sorted(files.items()):
        want = recorded.get(name)
        if want is None:
            problems.append(f"{name}: not listed in the manifest")
        elif want != _sha256(data):
            problems.append(f"{name}: recomputed checksum differs")
        path = os.path.join(directory, name)
        if os.path.exists(path):
            with open(path, "rb") as fh:
                if _sha256(fh.read()) != want:
                    problems.append(f"{name}: file on disk differs from the manifest")
        else:
            problems.append(f"{name}: missing from {directory}")
    for name in sorted(set(recorded) - set(files)):
        problems.append(f"{name}: listed in the manifest but not produced")
    return problems


def _verify_manifest(path: str, threads=None) -> list[str]:
    with open(path) as fh:
        manifest = json.load(fh)
    files, _ = run_job(manifest["params"], threads)
    return _compare(manifest, files, os.path.dirname(path) or ".")


# --- entry point ------------------------------------------------------------


def _err(msg: str) -> None:
    print(f"subplanck: {msg}", file=sys.stderr)


def _execute(ns: argparse.Namespace) -> int:
    if ns.command == "verify":
        paths = sorted(glob.glob(os.path.join(ns.directory, "*.manifest.json")))
        if not paths:
            raise SpecError(f"no manifests found in {ns.directory}")
        bad = 0
        for path in paths:
            problems = _verify_manifest(path)
            for msg in problems:
                print(f"{os.path.basename(path)}: {msg}")
            bad += bool(problems)
            if not problems:
                print(f"{os.path.basename(path)}: ok")
        return EXIT_MISMATCH if bad else EXIT_OK

    opts = _merge_config(vars(ns), ns.config)
    opts["command"] = ns.command
    params = resolve(opts)
    out_dir = opts["out"]
    files, meta = run_job(params, opts.get("threads"))
    manifest = build_manifest(params, files, meta)
    man_path = os.path.join(out_dir, _manifest_name(params))

    if opts.get("verify"):
        try:
            with open(man_path) as fh:
                old = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"--verify needs an existing manifest at {man_path}: {exc}") from exc
        problems = _compare(old, files, out_dir)
        if old.get("params") != json.loads(dumps_json(params)):
            problems.append("job parameters differ from the manifest")
        for msg in problems:
            print(msg)
        if not problems:
            print(f"{man_path}: ok")
        return EXIT_MISMATCH if problems else EXIT_OK

    try:
        os.makedirs(out_dir, exist_ok=True)
        for name, data in sorted(files.items()):
            with open(os.path.join(out_dir, name), "wb") as fh:
                fh.write(data)
        with open(man_path, "wb") as fh:
            fh.write(dumps_json(manifest))
    except OSError as exc:
        raise SpecError(f"cannot write outputs to {out_dir}: {exc}") from exc
    for name in sorted(files):
        print(os.path.join(out_dir, name))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    try:
        ns = parser.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _execute(ns)
    except (NumericalGuardError, TruncationError) as exc:
        _err(f"numerical guard: {type(exc).__module__}.{type(exc).__name__}: {exc}")
        return EXIT_GUARD
    except (SpecError, ValueError, TypeError, KeyError, OSError) as exc:
        _err(f"invalid job: {exc}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
