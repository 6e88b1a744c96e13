"""``sheetfield`` command line.

Every subcommand takes its parameters either as flags (``--t-max 1``) or from a
flat ``key = value`` file given with ``--config`` (flags win).  The resolved
parameters are echoed as a config file next to the primary output, so that
``--config`` on the echo reproduces the run.

Exit codes: 0 success, 1 invalid input, 2 numerical failure (non-finite
values, stability violation, failed verification).
"""
from __future__ import annotations

import argparse
import glob
import json
import math
import os
import sys
import tempfile
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArgumentError, ConfigurationError, NumericalError, SheetfieldError
from .sheet import GridSpec, cumulate, default_workers, sample_increments

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class UsageError(SheetfieldError):
    pass


# ---------------------------------------------------------------------------
# output helpers


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def _json_text(obj, indent=0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_json_text(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _json_text(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    """JSON with floats at 17 significant digits and a trailing newline."""
    return _json_text(obj) + "\n"


def atomic_write(path, text: str) -> None:
    """Write UTF-8 text with LF endings via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# parameters and flat config files


def _intlist(s):
    return [int(v) for v in str(s).split(",") if v.strip()]


def _nodelist(s):
    """``"1:1,0.5:1"`` -> ``[(1.0, 1.0), (0.5, 1.0)]``."""
    out = []
    for item in str(s).split(","):
        item = item.strip()
        if not item:
            continue
        t, x = item.split(":")
        out.append((float(t), float(x)))
    return out


def _nodes_str(nodes):
    return ",".join(f"{fmt(t)}:{fmt(x)}" for t, x in nodes)


@dataclass(frozen=True)
class Param:
    name: str
    kind: type | object
    default: object
    help: str = ""

    def parse(self, raw):
        if raw is None:
            return None
        try:
            if self.kind is bool:
                s = str(raw).lower()
                if s not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError
                return s in ("true", "1", "yes")
            if self.kind in (int, float, str):
                v = self.kind(raw)
                if self.kind is float and not math.isfinite(v):
                    raise ValueError
                return v
            return self.kind(raw)
        except (ValueError, TypeError):
            raise UsageError(f"invalid value for {self.name}: {raw!r}")

    def show(self, v) -> str:
        if v is None:
            return ""
        if self.kind is _intlist:
            return ",".join(str(i) for i in v)
        if self.kind is _nodelist:
            return _nodes_str(v)
        if self.kind is float:
            return fmt(v)
        if self.kind is bool:
            return "true" if v else "false"
        return str(v)


GRID = [Param("t_max", float, 1.0, "time extent"), Param("x_max", float, 1.0, "space extent"),
        Param("nt", int, 32, "time cells"), Param("nx", int, 32, "space cells")]
COMMON = [Param("seed", int, 0, "RNG seed"),
          Param("workers", int, None, "worker threads (default: SHEETFIELD_WORKERS or CPU count)")]

SCHEMAS = {
    "sample": GRID + COMMON + [
        Param("paths", int, 1, "number of sheet paths"),
        Param("out", str, "sheet.csv", "output CSV")],
    "simulate": GRID + COMMON + [
        Param("coeff", str, "constant", "coefficient tag: constant | mean-field-linear"),
        Param("a", float, 0.0, "drift parameter"),
        Param("b", float, 1.0, "diffusion parameter"),
        Param("lipschitz", float, None, "Lipschitz constant K (default per coefficient)"),
        Param("y0", float, 0.0, "initial/axis value"),
        Param("M", int, 1000, "number of paths"),
        Param("tol", float, 1e-10, "Picard tolerance on the squared M-distance"),
        Param("max_iters", int, 50, "Picard iteration cap"),
        Param("nodes", _nodelist, None, "output nodes t:x,... (default: terminal node)"),
        Param("out_dir", str, "simulate-out", "output directory")],
    "chaos": GRID + COMMON + [
        Param("n_list", _intlist, [5, 10, 20, 40, 80], "particle counts"),
        Param("a", float, 0.5, "interaction weight a_j"),
        Param("y", float, 1.0, "initial value"),
        Param("reps", int, 2000, "replications M"),
        Param("z", _nodelist, [(1.0, 1.0)], "evaluation node t:x"),
        Param("out", str, "chaos.csv", "output CSV")],
    "fokker-planck": GRID + COMMON + [
        Param("alpha", float, 0.0, "drift constant"),
        Param("beta", float, 1.0, "diffusion constant"),
        Param("y0", float, 0.0, "start value"),
        Param("y_lo", float, None, "lower end of y-domain (default: automatic)"),
        Param("y_hi", float, None, "upper end of y-domain (default: automatic)"),
        Param("h", float, 0.05, "y spacing"),
        Param("s0", float, None, "mollifier width (default 6h)"),
        Param("scheme", str, "factorized", "factorized | explicit"),
        Param("stride", int, 8, "write every stride-th (t, x) node to the CSV"),
        Param("snapshots", _nodelist, None, "t:x nodes for .dat slices (default: terminal node)"),
        Param("mc_paths", int, 0, "Monte Carlo paths for cross-validation (0: off)"),
        Param("out", str, "density.csv", "output CSV")],
    "verify": [Param("M", int, 20000, "Monte Carlo paths for the Dynkin and parts checks"),
               Param("seed", int, 0, "RNG seed"),
               Param("workers", int, None, "worker threads")],
    "report": [Param("in_dir", str, ".", "directory with run outputs"),
               Param("out", str, None, "summary JSON (default: IN_DIR/report.json)")],
}


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}")
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def resolve(command: str, flags: dict, config_path=None) -> dict:
    schema = {p.name: p for p in SCHEMAS[command]}
    raw = read_config(config_path) if config_path else {}
    unknown = sorted(set(raw) - set(schema) - {"grid"})
    if unknown:
        raise UsageError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    if "grid" in raw:
        raw.update(_grid_keys(raw.pop("grid")))
    if flags.get("grid") is not None:
        raw.update(_grid_keys(flags["grid"]))
    for k, v in flags.items():
        if k in schema and v is not None:
            raw[k] = v
    cfg = {}
    for name, p in schema.items():
        v = p.parse(raw[name]) if raw.get(name) not in (None, "") else p.default
        cfg[name] = v
    return cfg


def _grid_keys(s):
    parts = [v.strip() for v in str(s).split(",")]
    if len(parts) != 4:
        raise UsageError("grid must be t_max,x_max,nt,nx")
    return dict(zip(("t_max", "x_max", "nt", "nx"), parts))


def config_text(command: str, cfg: dict) -> str:
    lines = [f"# sheetfield {command} resolved configuration"]
    for p in SCHEMAS[command]:
        if cfg.get(p.name) is not None:
            lines.append(f"{p.name} = {p.show(cfg[p.name])}")
    return "\n".join(lines) + "\n"


def _echo_config(command, cfg, path):
    atomic_write(path, config_text(command, cfg))


def _grid(cfg) -> GridSpec:
    return GridSpec(cfg["t_max"], cfg["x_max"], cfg["nt"], cfg["nx"])


def _workers(cfg):
    w = cfg.get("workers")
    if w is not None and w < 1:
        raise ArgumentError("workers must be >= 1")
    return default_workers() if w is None else w


def _positive(cfg, *names):
    for n in names:
        if cfg[n] is not None and not cfg[n] > 0:
            raise ArgumentError(f"{n} must be positive, got {cfg[n]}")


# ---------------------------------------------------------------------------
# subcommands

HELP = {
    "sample": "write Brownian sheet paths on the lattice as CSV",
    "simulate": "solve the equation (Picard for law-dependent drift) and write the ensemble",
    "chaos": "propagation-of-chaos table for the N-particle system",
    "fokker-planck": "march the density equation and compare with Gaussian and Monte Carlo",
    "verify": "run the fast built-in identity checks",
    "report": "aggregate a directory of outputs into report.json",
}


def cmd_sample(cfg, out, err) -> int:
    grid = _grid(cfg)
    _positive(cfg, "paths")
    inc = sample_increments(grid, cfg["seed"], np.arange(cfg["paths"]), workers=_workers(cfg))
    vals = cumulate(inc)
    t, x = grid.t, grid.x
    lines = ["path_id,i,j,t,x,B"]
    tt = [fmt(v) for v in t]
    xx = [fmt(v) for v in x]
    for p in range(cfg["paths"]):
        for i in range(grid.nt + 1):
            row = vals[p, i]
            lines.extend(f"{p},{i},{j},{tt[i]},{xx[j]},{fmt(row[j])}" for j in range(grid.nx + 1))
    atomic_write(cfg["out"], "\n".join(lines) + "\n")
    _echo_config("sample", cfg, cfg["out"] + ".cfg")
    print(f"wrote {cfg['out']} ({cfg['paths']} paths, {grid.n_nodes} nodes each)", file=out)
    return EXIT_OK


def _coefficient(cfg):
    from .spde_solver import Constant, MeanFieldLinear
    tag = cfg["coeff"].replace("_", "-")
    if tag == "constant":
        k = 1.0 if cfg["lipschitz"] is None else cfg["lipschitz"]
        return Constant(cfg["a"], cfg["b"], lipschitz=k)
    if tag == "mean-field-linear":
        return MeanFieldLinear(cfg["a"], cfg["b"], lipschitz=cfg["lipschitz"])
    raise ArgumentError(f"unknown coefficient tag {cfg['coeff']!r} "
                        "(expected constant or mean-field-linear)")


def cmd_simulate(cfg, out, err) -> int:
    from .spde_solver import mckean_vlasov_solve
    grid = _grid(cfg)
    coeff = _coefficient(cfg)
    _positive(cfg, "M", "max_iters", "tol")
    nodes_tx = cfg["nodes"] or [(grid.t_max, grid.x_max)]
    nodes = [grid.node_index(t, x) for t, x in nodes_tx]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = mckean_vlasov_solve(grid, coeff, cfg["M"], max_iters=cfg["max_iters"],
                                  tol=cfg["tol"], seed=cfg["seed"], y0=cfg["y0"],
                                  workers=_workers(cfg))
    d = Path(cfg["out_dir"])
    vals = res.ensemble.values
    rows = [(int(pid), i, j, vals[p, i, j])
            for p, pid in enumerate(res.ensemble.path_ids) for i, j in nodes]
    atomic_write(d / "ensemble.csv", csv_text(["path_id", "i", "j", "Y"], rows))
    law = {"nodes": []}
    for (i, j) in nodes:
        mu = res.law.measure(i, j)
        law["nodes"].append({"i": i, "j": j, "t": grid.t[i], "x": grid.x[j],
                             "atoms": mu.atoms, "weights": mu.weights})
    atomic_write(d / "lawflow.json", dumps_json(law))
    diag = res.diagnostics.to_dict()
    diag["coefficient"] = coeff.params() | {"tag": coeff.tag}
    diag["terminal_mean"] = float(np.mean(vals[:, -1, -1]))
    diag["terminal_std_error"] = float(np.std(vals[:, -1, -1], ddof=1) / math.sqrt(vals.shape[0]))
    atomic_write(d / "diagnostics.json", dumps_json(diag))
    _echo_config("simulate", cfg, d / "resolved.cfg")
    for w in res.diagnostics.warnings:
        print(f"WARNING {w}", file=err)
    state = "converged" if res.diagnostics.converged else "did not converge"
    print(f"Picard {state} after {res.diagnostics.iterations} sweeps; outputs in {d}", file=out)
    return EXIT_OK


def cmd_chaos(cfg, out, err) -> int:
    from .chaos import chaos_gap, loglog_slope
    grid = _grid(cfg)
    _positive(cfg, "reps")
    if len(cfg["z"]) != 1:
        raise ArgumentError("chaos takes a single evaluation node z")
    rows = chaos_gap(cfg["n_list"], cfg["a"], cfg["y"], grid, cfg["z"][0], M=cfg["reps"],
                     seed=cfg["seed"])
    atomic_write(cfg["out"], csv_text(["N", "distance_sq", "var_I", "stderr"],
                                      [(r.N, r.distance_sq, r.var_I, r.stderr) for r in rows]))
    _echo_config("chaos", cfg, cfg["out"] + ".cfg")
    slope = loglog_slope([r.N for r in rows], [r.var_I for r in rows])
    print(f"wrote {cfg['out']}; log-log slope of var_I = {slope:.4f}", file=out)
    return EXIT_OK


def cmd_fokker_planck(cfg, out, err) -> int:
    from . import fokker_planck as fp
    from .spde_solver import Constant
    grid = _grid(cfg)
    _positive(cfg, "h", "s0", "stride")
    op = fp.FpOperatorSpec(cfg["alpha"], cfg["beta"])
    s0 = 6.0 * cfg["h"] if cfg["s0"] is None else cfg["s0"]
    if cfg["y_lo"] is None and cfg["y_hi"] is None:
        y = fp.default_y_nodes(op, grid, cfg["y0"], cfg["h"], s0)
    elif cfg["y_lo"] is None or cfg["y_hi"] is None:
        raise ArgumentError("give both y_lo and y_hi, or neither")
    else:
        y = fp.uniform_y_nodes(cfg["y_lo"], cfg["y_hi"], cfg["h"])
    dens = fp.fp_march(grid, op, y, fp.mollified_delta(y, cfg["y0"], s0), scheme=cfg["scheme"])
    st = cfg["stride"]
    ii = sorted(set(range(0, grid.nt + 1, st)) | {grid.nt})
    jj = sorted(set(range(0, grid.nx + 1, st)) | {grid.nx})
    ys = [fmt(v) for v in y]
    lines = ["i,j,k,t,x,y,m"]
    for i in ii:
        for j in jj:
            ti, xj = fmt(grid.t[i]), fmt(grid.x[j])
            m = dens.m[i, j]
            lines.extend(f"{i},{j},{k},{ti},{xj},{ys[k]},{fmt(m[k])}" for k in range(y.size))
    atomic_write(cfg["out"], "\n".join(lines) + "\n")

    snaps = cfg["snapshots"] or [(grid.t_max, grid.x_max)]
    stem = str(Path(cfg["out"]).with_suffix(""))
    blocks = []
    summary = {"snapshots": []}
    mc = None
    if cfg["mc_paths"] > 0:
        mc = fp.fp_vs_monte_carlo(grid, Constant(cfg["alpha"], cfg["beta"]), cfg["mc_paths"],
                                  cfg["seed"], y_nodes=y,
                                  nodes=[grid.node_index(t, x) for t, x in snaps],
                                  y0=cfg["y0"], s0=s0, scheme=cfg["scheme"],
                                  workers=_workers(cfg))
    for n, (t, x) in enumerate(snaps):
        i, j = grid.node_index(t, x)
        m = dens.m[i, j]
        cols = [y, m]
        head = f"# t={fmt(grid.t[i])} x={fmt(grid.x[j])}\n# y m"
        snap = {"i": i, "j": j, "t": grid.t[i], "x": grid.x[j],
                "mean": dens.moments(i, j)[0], "variance": dens.moments(i, j)[1]}
        if t * x > 0 or s0 > 0:
            ref = fp.reference_density(op, grid.t[i], grid.x[j], y, cfg["y0"], s0)
            snap["l1_vs_reference"] = fp.l1_distance(m, ref, y)
            cols.append(ref)
            head += " reference"
        if mc is not None:
            snap["l1_vs_monte_carlo"] = mc.l1[n]
            cols.append(mc.mc_density[n])
            head += " monte_carlo"
        summary["snapshots"].append(snap)
        body = "\n".join(" ".join(fmt(c[k]) for c in cols) for k in range(y.size))
        blocks.append(head + "\n" + body)
    atomic_write(stem + "_slices.dat", "\n\n\n".join(blocks) + "\n")
    summary["diagnostics"] = dens.diagnostics
    summary["s0"] = s0
    summary["h"] = cfg["h"]
    summary["scheme"] = cfg["scheme"]
    if mc is not None:
        summary["mc_paths"] = cfg["mc_paths"]
    atomic_write(stem + "_summary.json", dumps_json(summary))
    _echo_config("fokker-planck", cfg, cfg["out"] + ".cfg")
    if dens.diagnostics["mass_flag"]:
        print(f"WARNING mass drift {dens.diagnostics['mass_drift']:.3g} exceeds 5%", file=err)
    if dens.diagnostics["negative_flag"]:
        print(f"WARNING negative density {dens.diagnostics['min_value']:.3g}", file=err)
    print(f"wrote {cfg['out']}, {stem}_slices.dat, {stem}_summary.json", file=out)
    return EXIT_OK


# verification suite ---------------------------------------------------------


def _check_r0(cfg):
    from .special_fn import compute_r0
    r0 = compute_r0(1e-6)
    return r0, abs(r0 - 1.4458) <= 1e-4, "|r0 - 1.4458| <= 1e-4"


def _check_gronwall(cfg):
    from .special_fn import gronwall_sequence
    x = gronwall_sequence(100)
    c = [1.0]
    for j in range(1, 101):
        c.append(-c[-1] / (j * j))
    worst = 0.0
    for n in range(101):
        s = math.fsum(c[j] * x[n - j] for j in range(n + 1))
        worst = max(worst, abs(s - (1.0 if n == 0 else 0.0)))
    return worst, worst <= 1e-12, "<= 1e-12"


def _check_lemma41(cfg):
    from .fokker_planck import lemma41_kernel_check
    one = lambda s, a: np.ones_like(s)
    r = lemma41_kernel_check(one, one, (1.0, 1.0))
    ok = abs(r.H - 0.25) <= 1e-6 and abs(r.lhs - 1.0) <= 1e-4 and abs(r.rhs - 1.0) <= 1e-12
    return r.abs_diff, ok, "H = 0.25, lhs = rhs = 1 within 1e-4"


def _residual_cloud(n=100, seed=12345):
    from .fokker_planck import fp_relative_residual
    rng = np.random.default_rng(seed)
    t, x = rng.uniform(0.2, 2.0, n), rng.uniform(0.2, 2.0, n)
    y0 = rng.uniform(-1.0, 1.0, n)
    y = y0 + rng.uniform(-4.0, 4.0, n)
    return float(np.max(fp_relative_residual(t, x, y, y0)))


def _check_fp_residual(cfg):
    r = _residual_cloud()
    return r, r < 1e-10, "< 1e-10 relative"


def _check_dynkin(cfg):
    from .spde_solver import Constant, dynkin_check
    r = dynkin_check(Constant(1.0, 1.0), "square", M=cfg["M"], seed=cfg["seed"],
                     workers=_workers(cfg))
    return r.z_score, abs(r.z_score) <= 3.0, "|z| <= 3"


def _check_parts(cfg):
    from .spde_solver import Constant, parts_check
    r = parts_check(Constant(0.0, 1.0), Constant(0.0, 1.0), M=cfg["M"], seed=cfg["seed"],
                    workers=_workers(cfg))
    return r.z_score, abs(r.z_score) <= 3.0, "|z| <= 3"


CHECKS = {
    "r0": _check_r0,
    "gronwall": _check_gronwall,
    "lemma41": _check_lemma41,
    "fp-residual": _check_fp_residual,
    "dynkin": _check_dynkin,
    "parts": _check_parts,
}


def cmd_verify(cfg, out, err, names=None) -> int:
    names = list(CHECKS) if not names else names
    bad = [n for n in names if n not in CHECKS]
    if bad:
        raise UsageError(f"unknown check(s): {', '.join(bad)}; choose from {', '.join(CHECKS)}")
    _positive(cfg, "M")
    failed = 0
    print(f"{'check':<12} {'value':>24}  {'criterion':<36} result", file=out)
    for n in names:
        t0 = time.perf_counter()
        value, ok, crit = CHECKS[n](cfg)
        dt = time.perf_counter() - t0
        failed += not ok
        print(f"{n:<12} {value:>24.17g}  {crit:<36} {'PASS' if ok else 'FAIL'} ({dt:.3g} s)",
              file=out)
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


# report -----------------------------------------------------------------------


def _read_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    return header, rows


def cmd_report(cfg, out, err) -> int:
    from .chaos import loglog_slope
    d = Path(cfg["in_dir"])
    if not d.is_dir():
        raise UsageError(f"{d} is not a directory")
    doc = {"chaos": [], "fokker_planck": [], "picard": []}
    dat = {}
    for path in sorted(glob.glob(str(d / "**" / "*.csv"), recursive=True)):
        header, rows = _read_csv(path)
        if header != ["N", "distance_sq", "var_I", "stderr"] or len(rows) < 2:
            continue
        rel = os.path.relpath(path, d)
        N = [r[0] for r in rows]
        entry = {"source": rel, "N": [int(n) for n in N],
                 "distance_sq": [r[1] for r in rows], "var_I": [r[2] for r in rows],
                 "stderr": [r[3] for r in rows],
                 "slope_var_I": loglog_slope(N, [r[2] for r in rows])}
        if all(r[1] > 0 for r in rows):
            entry["slope_distance_sq"] = loglog_slope(N, [r[1] for r in rows])
        doc["chaos"].append(entry)
        dat[Path(rel).with_suffix("").as_posix().replace("/", "_") + "_loglog.dat"] = (
            "# log N, log distance_sq, log var_I\n" + "\n".join(
                f"{fmt(math.log(r[0]))} {fmt(math.log(r[1])) if r[1] > 0 else 'nan'} "
                f"{fmt(math.log(r[2])) if r[2] > 0 else 'nan'}" for r in rows) + "\n")
    for path in sorted(glob.glob(str(d / "**" / "*_summary.json"), recursive=True)):
        with open(path, encoding="utf-8") as fh:
            s = json.load(fh)
        if "snapshots" not in s:
            continue
        doc["fokker_planck"].append({"source": os.path.relpath(path, d),
                                     "snapshots": s["snapshots"],
                                     "mass_drift": s.get("diagnostics", {}).get("mass_drift")})
    for path in sorted(glob.glob(str(d / "**" / "diagnostics.json"), recursive=True)):
        with open(path, encoding="utf-8") as fh:
            s = json.load(fh)
        if "distances" not in s:
            continue
        doc["picard"].append({"source": os.path.relpath(path, d),
                              "distances": s["distances"], "converged": s.get("converged"),
                              "warnings": s.get("warnings", [])})
    if not any(doc.values()):
        raise UsageError(f"no run outputs found in {d}")
    target = Path(cfg["out"]) if cfg["out"] else d / "report.json"
    atomic_write(target, dumps_json(doc))
    for name, text in dat.items():
        atomic_write(target.parent / name, text)
    print(f"wrote {target} ({sum(len(v) for v in doc.values())} entries)", file=out)
    return EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "simulate": cmd_simulate,
    "chaos": cmd_chaos,
    "fokker-planck": cmd_fokker_planck,
    "verify": cmd_verify,
    "report": cmd_report,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sheetfield", description="Brownian-sheet SPDE simulation and law checks.")
    p.add_argument("--version", action="version", version=f"sheetfield {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name, help=HELP[name], description=HELP[name])
        sp.add_argument("--config", help="flat key = value configuration file")
        if any(q.name == "t_max" for q in schema):
            sp.add_argument("--grid", help="t_max,x_max,nt,nx")
        for q in schema:
            flag = "--" + q.name.replace("_", "-")
            extra = {"dest": q.name, "default": None}
            shown = q.default if isinstance(q.default, (int, float)) else q.show(q.default)
            hint = q.help if q.default is None else f"{q.help} [default: {shown}]"
            sp.add_argument(flag, help=hint, **extra)
        if name == "verify":
            sp.add_argument("checks", nargs="*", help=f"subset of: {', '.join(CHECKS)}")
    return p


def run(argv=None, out=None, err=None) -> int:
    """Run the CLI and return the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand; choose from " + ", ".join(COMMANDS))
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "checks")}
        cfg = resolve(args.command, flags, args.config)
        if args.command == "verify":
            return cmd_verify(cfg, out, err, args.checks)
        return COMMANDS[args.command](cfg, out, err)
    except (ConfigurationError, NumericalError, OverflowError, FloatingPointError) as e:
        print(f"sheetfield: numerical failure: {e}", file=err)
        return EXIT_NUMERIC
    except (UsageError, ArgumentError, ValueError) as e:
        print(f"sheetfield: error: {e}", file=err)
        return EXIT_INPUT
    except OSError as e:
        print(f"sheetfield: error: {e}", file=err)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
