"""Command-line front end.

Subcommands: solve | mpass | evolve | radial | kpz | sweep.  Every run
resolves its configuration (defaults < config file < explicit flags),
echoes it to ``output_dir/config.resolved`` as key = value lines, and
writes a single ``summary.json`` next to the solution fields and
convergence logs.  Identical resolved configs produce bit-identical
binary outputs.

Exit codes: 0 success, 2 validated non-convergence (reported as data),
1 usage or configuration errors.
"""

from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .energy import energy as energy_fn, setup_geometry as setup_geometry_fn
from .evolution import FlowConfig, flow_to_steady
from .grid import (BoundaryKind, Field, Grid2D, norm_linf, read_field_csv,
                   read_field_epx1, write_field_csv, write_field_epx1)
from .kpz import KpzAdmissibilityError, solve_kpz
from .mpass import classify_stability, find_local_min, find_mountain_pass
from .picard import PicardConfig, lambda_threshold, pde_residual, solve_fixed_point
from .radial import radial_threshold, solve_radial
from .report import Outcome

__all__ = ["main", "run", "RunConfig"]

COMMANDS = ("solve", "mpass", "evolve", "radial", "kpz", "sweep")

DEFAULTS: dict[str, object] = {
    "nx": 65, "ny": 65, "x0": 0.0, "x1": 1.0, "y0": 0.0, "y1": 1.0,
    "bc": "navier", "lambda": 1.0, "f": "constant:1",
    "tol": 1e-10, "max_iter": 200, "dt": 1e-3, "steps": 2000,
    "k1": 0.5, "k2": 1.0, "flow_tol": 1e-8,
    "seed": 0, "workers": 1, "output_dir": "epx-out",
    "lambda_lo": 1.0, "lambda_hi": 1000.0, "count": 9,
    "threshold": 0, "snapshot_every": 0, "dump_system": 0,
    "n_points": 33, "gtol": 1e-6,
}
_FLOAT_KEYS = {"x0", "x1", "y0", "y1", "lambda", "tol", "dt", "k1", "k2",
               "flow_tol", "lambda_lo", "lambda_hi", "gtol"}
_INT_KEYS = {"nx", "ny", "max_iter", "steps", "seed", "workers", "count",
             "threshold", "snapshot_every", "dump_system", "n_points"}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    options: dict

    def __getitem__(self, key):
        return self.options[key]

    @property
    def grid(self) -> Grid2D:
        o = self.options
        return Grid2D(o["nx"], o["ny"], o["x0"], o["x1"], o["y0"], o["y1"])

    @property
    def bc(self) -> BoundaryKind:
        return BoundaryKind(self.options["bc"])

    @property
    def lam(self) -> float:
        return self.options["lambda"]


def _parse_config_file(path: Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _coerce(key: str, raw) -> object:
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_KEYS:
        return int(raw)
    return str(raw)


def resolve_config(command: str, file_values: dict, cli_values: dict) -> RunConfig:
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}")
    if "command" in file_values and file_values["command"] != command:
        raise UsageError(f"config file is for {file_values['command']!r}, not {command!r}")
    options = dict(DEFAULTS)
    for src in (file_values, cli_values):
        for key, raw in src.items():
            if key == "command":
                continue
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            options[key] = _coerce(key, raw)
    if options["bc"] not in ("dirichlet", "navier"):
        raise UsageError(f"bad bc {options['bc']!r}")
    return RunConfig(command, options)


def _echo_config(cfg: RunConfig, outdir: Path) -> None:
    lines = [f"command = {cfg.command}"]
    for key in sorted(cfg.options):
        val = cfg.options[key]
        lines.append(f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}")
    (outdir / "config.resolved").write_text("\n".join(lines) + "\n")


def _make_forcing(cfg: RunConfig) -> tuple[Grid2D, Field]:
    spec = cfg.options["f"]
    kind, _, arg = spec.partition(":")
    if kind == "file":
        path = Path(arg)
        field = read_field_epx1(path) if path.suffix == ".epx1" else read_field_csv(path)
        return field.grid, field
    grid = cfg.grid
    if kind == "constant":
        return grid, Field.full(grid, float(arg))
    if kind == "gaussian-bump":
        try:
            x0, y0, sigma, amp = (float(v) for v in arg.split(","))
        except ValueError as exc:
            raise UsageError(f"gaussian-bump needs x0,y0,sigma,amp: {spec!r}") from exc
        X, Y = grid.meshgrid()
        vals = amp * np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / (2.0 * sigma ** 2))
        return grid, Field(grid, vals)
    raise UsageError(f"unknown forcing spec {spec!r}")


def _f_radial(cfg: RunConfig):
    spec = cfg.options["f"]
    kind, _, arg = spec.partition(":")
    if kind != "constant":
        raise UsageError("the radial command supports constant forcings only")
    c = float(arg)
    return lambda r: np.full_like(np.asarray(r, dtype=float), c)


def _write_field(outdir: Path, name: str, field: Field) -> None:
    write_field_csv(field, outdir / f"{name}.csv")
    write_field_epx1(field, outdir / f"{name}.epx1")


def _summary(outdir: Path, **payload) -> None:
    base = {"command": None, "lambda": None, "bc": None, "energies": None,
            "residuals": None, "threshold": None, "outcome": None}
    base.update(payload)
    (outdir / "summary.json").write_text(json.dumps(base, indent=2, sort_keys=True) + "\n")


def _energy_dict(u: Field, f: Field, lam: float) -> dict:
    parts = energy_fn(u, f, lam)
    return {"quad": parts.quad, "cubic": parts.cubic,
            "linear": parts.linear, "total": parts.total}


# ---------------------------------------------------------------------------
# Command bodies (each returns the exit code)
# ---------------------------------------------------------------------------

def _cmd_solve(cfg: RunConfig, outdir: Path) -> int:
    grid, f = _make_forcing(cfg)
    pcfg = PicardConfig(lam=cfg.lam, bc=cfg.bc, tol=cfg.options["tol"],
                        max_iter=cfg.options["max_iter"])
    u, rep = solve_fixed_point(pcfg, f)
    rep.write_csv(outdir / "convergence.csv")
    _write_field(outdir, "u", u)
    if cfg.options["dump_system"]:
        from .linsolve import assemble_system, dump_system
        which = "navier" if cfg.bc == BoundaryKind.NAVIER else "dirichlet"
        dump_system(assemble_system(f, which), outdir / "operator.mtx")
    res = pde_residual(u, cfg.lam, f, cfg.bc)
    scale = max(1.0, cfg.lam * norm_linf(f))
    _summary(outdir, command=cfg.command, **{"lambda": cfg.lam}, bc=cfg.bc.value,
             energies=_energy_dict(u, f, cfg.lam),
             residuals={"pde_inf_scaled": norm_linf(res) / scale,
                        "final_step": rep.residual_history[-1] if rep.residual_history else 0.0},
             outcome=rep.outcome.value)
    return 0 if rep.outcome == Outcome.CONVERGED else 2


def _cmd_mpass(cfg: RunConfig, outdir: Path) -> int:
    grid, f = _make_forcing(cfg)
    if cfg.bc != BoundaryKind.DIRICHLET:
        raise UsageError("mpass requires --bc dirichlet (the variational setting)")
    geom = setup_geometry_fn(f, cfg.lam, seed=cfg.options["seed"])
    u0, j0 = find_local_min(f, cfg.lam, geom)
    u_star, j_star, rep = find_mountain_pass(
        f, cfg.lam, u0, geom, n_points=cfg.options["n_points"],
        gtol=cfg.options["gtol"], path_csv=outdir / "path_energies.csv")
    rep.write_csv(outdir / "convergence.csv")
    _write_field(outdir, "u0", u0)
    _write_field(outdir, "u_star", u_star)
    with open(outdir / "energies.csv", "w") as fh:
        fh.write("quad,cubic,linear,total\n")
        for u in (u0, u_star):
            energy_fn(u, f, cfg.lam).write_csv_row(fh)
    from .mpass import scaled_residual
    tags = {"u0": classify_stability(u0, f, cfg.lam, bc=cfg.bc).value,
            "u_star": classify_stability(u_star, f, cfg.lam, bc=cfg.bc).value}
    _summary(outdir, command=cfg.command, **{"lambda": cfg.lam}, bc=cfg.bc.value,
             energies={"u0": _energy_dict(u0, f, cfg.lam),
                       "u_star": _energy_dict(u_star, f, cfg.lam)},
             residuals={"u0_scaled": scaled_residual(u0, f, cfg.lam),
                        "u_star_scaled": scaled_residual(u_star, f, cfg.lam)},
             outcome=rep.outcome.value, stability=tags,
             minorant={"c1": geom.c1, "c2": geom.c2, "lambda0": geom.lambda0,
                       "r0": geom.r0, "r1": geom.r1, "r_max": geom.r_max,
                       "g_at_r_max": geom.g(geom.r_max)})
    return 0 if (rep.outcome == Outcome.CONVERGED and j0 < 0.0 < j_star) else 2


def _cmd_evolve(cfg: RunConfig, outdir: Path) -> int:
    grid, f = _make_forcing(cfg)
    fcfg = FlowConfig(k1=cfg.options["k1"], k2=cfg.options["k2"],
                      dt=cfg.options["dt"], steps=cfg.options["steps"], bc=cfg.bc)
    u0 = Field.zeros(grid)
    every = cfg.options["snapshot_every"]
    if every > 0:
        from .evolution import flow_step
        from .report import ConvergenceReport

        u, rep = u0, ConvergenceReport()
        for k in range(1, fcfg.steps + 1):
            u_next = flow_step(u, f, cfg.lam, fcfg)
            rate = norm_linf(Field(grid, u_next.values - u.values)) / fcfg.dt
            rep.record(rate)
            u = u_next
            if k % every == 0:
                write_field_epx1(u, outdir / f"snapshot_{k:06d}.epx1")
            if rate <= cfg.options["flow_tol"]:
                rep.outcome = Outcome.CONVERGED
                break
    else:
        u, rep = flow_to_steady(u0, f, cfg.lam, fcfg, cfg.options["flow_tol"])
    rep.write_csv(outdir / "convergence.csv")
    _write_field(outdir, "u", u)
    res = pde_residual(u, cfg.lam, f, cfg.bc)
    _summary(outdir, command=cfg.command, **{"lambda": cfg.lam}, bc=cfg.bc.value,
             energies=_energy_dict(u, f, cfg.lam),
             residuals={"pde_inf": norm_linf(res),
                        "final_rate": rep.residual_history[-1] if rep.residual_history else 0.0},
             outcome=rep.outcome.value)
    return 0 if rep.outcome == Outcome.CONVERGED else 2


def _cmd_radial(cfg: RunConfig, outdir: Path) -> int:
    f_rad = _f_radial(cfg)
    threshold = None
    outcome = Outcome.CONVERGED.value
    if cfg.options["threshold"]:
        trace: list = []
        try:
            lam_star = radial_threshold(f_rad, cfg.bc, trace_out=trace)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        with open(outdir / "threshold_trace.csv", "w") as fh:
            fh.write("lambda,beta_lo,beta_hi\n")
            for lam, blo, bhi in trace:
                fh.write(f"{lam:.17g},{blo:.17g},{bhi:.17g}\n")
        threshold = lam_star
        shot = solve_radial(0.5 * lam_star, f_rad, cfg.bc)
    else:
        try:
            shot = solve_radial(cfg.lam, f_rad, cfg.bc)
        except ValueError:
            _summary(outdir, command=cfg.command, **{"lambda": cfg.lam},
                     bc=cfg.bc.value, outcome="no_root")
            return 2
    shot.write_csv(outdir / "radial_profile.csv")
    _summary(outdir, command=cfg.command, **{"lambda": cfg.lam}, bc=cfg.bc.value,
             residuals={"terminal": shot.terminal_residual},
             threshold=threshold, outcome=outcome,
             beta=shot.beta)
    return 0


def _cmd_kpz(cfg: RunConfig, outdir: Path) -> int:
    grid, f = _make_forcing(cfg)
    try:
        sol = solve_kpz(f, cfg.lam)
    except KpzAdmissibilityError as exc:
        _summary(outdir, command=cfg.command, **{"lambda": cfg.lam}, bc="navier",
                 outcome="inadmissible", residuals={"detail": str(exc)})
        return 2
    for name, field in (("u", sol.u), ("v", sol.v), ("w", sol.w),
                        ("residual_v", sol.residual_v),
                        ("residual_composed", sol.residual_composed)):
        _write_field(outdir, name, field)
    _summary(outdir, command=cfg.command, **{"lambda": cfg.lam}, bc="navier",
             residuals={"v_equation_inf": norm_linf(sol.residual_v),
                        "composed_inf": norm_linf(sol.residual_composed)},
             outcome="converged")
    return 0


def _one_sweep_solve(args) -> tuple[float, str, int, float]:
    lam, grid_args, bc_value, f_spec, tol, max_iter = args
    grid = Grid2D(*grid_args)
    cfg = RunConfig("solve", dict(DEFAULTS))
    cfg.options.update({"nx": grid.nx, "ny": grid.ny, "f": f_spec})
    _, f = _make_forcing(cfg)
    pcfg = PicardConfig(lam=lam, bc=BoundaryKind(bc_value), tol=tol, max_iter=max_iter)
    _, rep = solve_fixed_point(pcfg, f)
    final = rep.residual_history[-1] if rep.residual_history else math.nan
    return lam, rep.outcome.value, rep.iterates, final


def _cmd_sweep(cfg: RunConfig, outdir: Path) -> int:
    grid, f = _make_forcing(cfg)
    lo, hi = cfg.options["lambda_lo"], cfg.options["lambda_hi"]
    if not 0 < lo < hi:
        raise UsageError("need 0 < lambda_lo < lambda_hi")
    lams = np.geomspace(lo, hi, cfg.options["count"])
    grid_args = (grid.nx, grid.ny, grid.x0, grid.x1, grid.y0, grid.y1)
    jobs = [(float(lam), grid_args, cfg.bc.value, cfg.options["f"],
             cfg.options["tol"], cfg.options["max_iter"]) for lam in lams]
    if cfg.options["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg.options["workers"]) as pool:
            rows = list(pool.map(_one_sweep_solve, jobs))
    else:
        rows = [_one_sweep_solve(j) for j in jobs]
    with open(outdir / "sweep.csv", "w") as fh:
        fh.write("lambda,outcome,iterates,final_residual\n")
        for lam, out, iters, final in rows:
            fh.write(f"{lam:.17g},{out},{iters},{final:.17g}\n")

    threshold = None
    statuses = [r[1] == Outcome.CONVERGED.value for r in rows]
    if statuses[0] and not statuses[-1]:
        k = statuses.index(False)
        lam_ok, lam_fail = lambda_threshold(f, cfg.bc, rows[k - 1][0], rows[k][0],
                                            tol=cfg.options["tol"],
                                            max_iter=cfg.options["max_iter"])
        threshold = {"lambda_ok": lam_ok, "lambda_fail": lam_fail,
                     "rel_width": (lam_fail - lam_ok) / lam_fail}
        with open(outdir / "threshold.csv", "w") as fh:
            fh.write("lambda_ok,lambda_fail\n")
            fh.write(f"{lam_ok:.17g},{lam_fail:.17g}\n")
    _summary(outdir, command=cfg.command, **{"lambda": None}, bc=cfg.bc.value,
             threshold=threshold,
             outcome="bracketed" if threshold else "no_bracket")
    return 0 if threshold is not None else 2


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_USAGE = f"""usage: epx COMMAND [--key value ...] [--config FILE]

commands: {', '.join(COMMANDS)}

options (any resolved key; defaults in parentheses):
  --nx/--ny INT            grid nodes per axis (65)
  --x0/--x1/--y0/--y1 F    rectangle corners (unit square)
  --bc {{dirichlet,navier}}  boundary conditions (navier)
  --lambda F               forcing scale (1.0)
  --f SPEC                 constant:V | gaussian-bump:x0,y0,sigma,amp | file:PATH
  --tol F                  Picard stopping tolerance (1e-10)
  --max-iter INT           Picard iteration cap (200)
  --dt F / --steps INT     flow step and horizon (1e-3, 2000)
  --k1 F / --k2 F          flow coefficients (0.5, 1.0)
  --flow-tol F             steady-state tolerance (1e-8)
  --n-points INT           mpass path resolution (33)
  --gtol F                 mpass gradient tolerance (1e-6)
  --lambda-lo/--lambda-hi  sweep bracket (1, 1000)
  --count INT              sweep ladder size (9)
  --workers INT            sweep worker pool (1)
  --threshold 1            radial: estimate the fold location
  --snapshot-every INT     evolve: binary snapshot cadence (0 = off)
  --dump-system 1          solve: Matrix Market dump of the operator
  --seed INT               probe-family seed (0)
  --output-dir PATH        output directory (epx-out)
  --config FILE            key = value file; explicit flags win
"""


def _parse_argv(argv: list[str]) -> tuple[str, dict, Path | None]:
    if not argv or argv[0] in ("-h", "--help"):
        print(_USAGE)
        raise SystemExit(0)
    command, rest = argv[0], argv[1:]
    cli_values: dict[str, str] = {}
    config_path: Path | None = None
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--"):
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if i + 1 >= len(rest):
            raise UsageError(f"missing value for {tok}")
        val = rest[i + 1]
        i += 2
        if key == "config":
            config_path = Path(val)
        else:
            cli_values[key] = val
    return command, cli_values, config_path


def run(cfg: RunConfig) -> int:
    """Execute a resolved configuration; returns the process exit code."""
    outdir = Path(cfg.options["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg, outdir)
    body = {"solve": _cmd_solve, "mpass": _cmd_mpass, "evolve": _cmd_evolve,
            "radial": _cmd_radial, "kpz": _cmd_kpz, "sweep": _cmd_sweep}[cfg.command]
    return body(cfg, outdir)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        command, cli_values, config_path = _parse_argv(argv)
        file_values = _parse_config_file(config_path) if config_path else {}
        cfg = resolve_config(command, file_values, cli_values)
        return run(cfg)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, ValueError, OSError) as exc:
        print(f"epx: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
