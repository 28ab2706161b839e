"""Command-line front end: JSON run configuration, subcommand dispatch, and
CSV / SVG artifact emission.

Configs are flat JSON objects with snake_case keys carrying explicit units
(p_max_dbm, r_min_bps, ...). dBm values are converted to Watt once, at
config load; outputs convert back only for formatting.

Exit codes: 0 success, 1 config error, 2 infeasible solve, 3 internal
error (including a failed verify run).
"""

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .dinkelbach import OuterOptions, baseline_capacity_solve, dinkelbach_solve
from .harness import (
    SweepConfig,
    SweepRow,
    brute_force_solve,
    convergence_trace,
    run_trials,
    sweep,
)
from .dinkelbach import InfeasibleProblemError
from .sysmodel import SystemParams, dbm_to_watt, generate_channel, watt_to_dbm

__all__ = ["RunConfig", "ConfigError", "load_config", "emit_csv", "emit_svg",
           "run", "main"]

CSV_HEADER = ("p_max_dbm,inr_db,scheme,avg_ee_bit_per_joule,avg_capacity_bps,"
              "avg_harvested_dbm,avg_rho,feasibility_rate,n_trials")


class ConfigError(ValueError):
    """Malformed run configuration (unknown key, bad type, bad value)."""


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; field names double as the JSON schema."""

    # scenario (dBm/dB at this boundary, Watt inside SystemParams)
    bandwidth_hz: float = 1e6
    n_subcarriers: int = 128
    sigma_za_dbm: float = -128.0
    sigma_zs_dbm: float = -125.0
    inr_db: float = 10.0
    p_c_dbm: float = 40.0
    epsilon: float = 1.0 / 0.38
    eta: float = 0.8
    p_max_dbm: float = 22.0
    p_pg_dbm: float = 50.0
    p_min_req_dbm: float = 0.0
    p_max_req_dbm: float = 20.0
    r_min_bps: float = 1e7
    carrier_hz: float = 470e6
    distance_m: float = 10.0
    antenna_gain_db: float = 40.0
    shadowing_lin: float = 1.0
    rician_k_db: float = 6.0
    rho_grid_m: int = 100
    pathloss_breakpoint_m: float = 5.0
    pathloss_exp_near: float = 2.0
    pathloss_exp_far: float = 4.5
    # run controls
    seed: int = 0
    n_trials: int = 1000
    scheme: str = "both"
    p_max_dbm_grid: tuple = (6.0, 10.0, 14.0, 18.0, 22.0, 26.0, 30.0, 36.0)
    inr_db_list: tuple = (0.0, 10.0, 50.0)
    outer_l_max: int = 20
    outer_eps: float = 1e-4
    csv_path: str = ""
    svg_path: str = ""

    def system_params(self) -> SystemParams:
        return SystemParams(
            bandwidth_hz=self.bandwidth_hz,
            n_subcarriers=self.n_subcarriers,
            sigma_za_w=dbm_to_watt(self.sigma_za_dbm),
            sigma_zs_w=dbm_to_watt(self.sigma_zs_dbm),
            inr_db=self.inr_db,
            p_c_w=dbm_to_watt(self.p_c_dbm),
            epsilon=self.epsilon,
            eta=self.eta,
            p_max_w=dbm_to_watt(self.p_max_dbm),
            p_pg_w=dbm_to_watt(self.p_pg_dbm),
            p_min_req_w=dbm_to_watt(self.p_min_req_dbm),
            p_max_req_w=dbm_to_watt(self.p_max_req_dbm),
            r_min_bps=self.r_min_bps,
            carrier_hz=self.carrier_hz,
            distance_m=self.distance_m,
            antenna_gain_db=self.antenna_gain_db,
            shadowing_lin=self.shadowing_lin,
            rician_k_db=self.rician_k_db,
            rho_grid_m=self.rho_grid_m,
            pathloss_breakpoint_m=self.pathloss_breakpoint_m,
            pathloss_exp_near=self.pathloss_exp_near,
            pathloss_exp_far=self.pathloss_exp_far,
        )

    def outer_options(self) -> OuterOptions:
        return OuterOptions(l_max=self.outer_l_max, eps=self.outer_eps)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p_max_dbm_grid"] = list(self.p_max_dbm_grid)
        d["inr_db_list"] = list(self.inr_db_list)
        return d


_INT_KEYS = {"n_subcarriers", "rho_grid_m", "seed", "n_trials", "outer_l_max"}
_LIST_KEYS = {"p_max_dbm_grid", "inr_db_list"}
_STR_KEYS = {"scheme", "csv_path", "svg_path"}


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from a parsed JSON object, rejecting unknown keys."""
    known = {f.name for f in fields(RunConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown config key: {key!r}")
    kwargs = {}
    for key, value in data.items():
        if key in _LIST_KEYS:
            if not isinstance(value, list) or not value \
                    or not all(isinstance(v, (int, float)) for v in value):
                raise ConfigError(f"key {key!r} must be a non-empty number list")
            kwargs[key] = tuple(float(v) for v in value)
        elif key in _STR_KEYS:
            if not isinstance(value, str):
                raise ConfigError(f"key {key!r} must be a string")
            kwargs[key] = value
        elif key in _INT_KEYS:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"key {key!r} must be an integer")
            kwargs[key] = value
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"key {key!r} must be a number")
            kwargs[key] = float(value)
    cfg = RunConfig(**kwargs)
    if cfg.scheme not in ("proposed", "baseline", "both"):
        raise ConfigError("scheme must be 'proposed', 'baseline', or 'both'")
    try:
        cfg.system_params()          # unit validation happens in one place
        cfg.outer_options()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON in {path} at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a single JSON object")
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# Artifact emission
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    """Render one CSV cell: ints verbatim, floats with 9 significant digits."""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.9g" % float(x)


def csv_lines(rows: list[SweepRow]) -> list[str]:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in (
            r.p_max_dbm, r.inr_db, r.scheme, r.avg_ee_bit_per_joule,
            r.avg_capacity_bps, r.avg_harvested_dbm, r.avg_rho,
            r.feasibility_rate, r.n_trials)))
    return lines


def emit_csv(rows: list[SweepRow], path: str = "") -> str:
    """Write the sweep table; empty path prints to stdout. Returns the text."""
    if not rows:
        raise ValueError("emit_csv needs at least one row")
    text = "\n".join(csv_lines(rows)) + "\n"
    _write_text(text, path)
    return text


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#17becf", "#e377c2")


def emit_svg(series: dict, path: str = "", x_label: str = "p_max_dbm",
             y_label: str = "avg_ee_bit_per_joule") -> str:
    """Plot one polyline per series onto a simple SVG line chart.

    series maps a label (e.g. "inr=10dB proposed") to a list of (x, y)
    points. The markup is emitted directly so the artifact has no charting
    dependency.
    """
    if not series:
        raise ValueError("emit_svg needs at least one series")
    width, height, margin = 640, 420, 60
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 15}" text-anchor="middle" '
        f'font-size="14">{x_label}</text>',
        f'<text x="18" y="{height // 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {height // 2})">{y_label}</text>',
    ]
    for k in range(5):
        xv = x_lo + k * (x_hi - x_lo) / 4
        yv = y_lo + k * (y_hi - y_lo) / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{height - margin + 18}" '
                   f'text-anchor="middle" font-size="11">{_fmt(xv)}</text>')
        out.append(f'<text x="{margin - 6}" y="{sy(yv):.1f}" '
                   f'text-anchor="end" font-size="11">{_fmt(yv)}</text>')
    for idx, (label, pts) in enumerate(series.items()):
        color = _SVG_COLORS[idx % len(_SVG_COLORS)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts
                          if np.isfinite(x) and np.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{coords}"/>')
        ly = margin + 16 * idx + 10
        out.append(f'<line x1="{width - margin - 150}" y1="{ly - 4}" '
                   f'x2="{width - margin - 130}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{width - margin - 125}" y="{ly}" '
                   f'font-size="11">{label}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    _write_text(text, path)
    return text


def _write_text(text: str, path: str) -> None:
    if not path:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_solve(cfg: RunConfig, out_path: str) -> int:
    params = cfg.system_params()
    ch = generate_channel(params, cfg.seed)
    solver = baseline_capacity_solve if cfg.scheme == "baseline" else dinkelbach_solve
    r = solver(ch, params, cfg.outer_options())
    doc = {
        "seed": cfg.seed,
        "scheme": "baseline" if cfg.scheme == "baseline" else "proposed",
        "feasible": bool(r.feasible),
        "q_star_bit_per_joule": r.q_star,
        "capacity_bps": r.capacity_bps,
        "harvested_w": r.harvested_w,
        "u_tp_w": r.u_tp_w,
        "rho": r.alloc.rho,
        "p_w": [float(p) for p in r.alloc.p_w],
        "outer_trace_bit_per_joule": list(r.outer_trace),
    }
    _write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", out_path)
    return 0 if r.feasible else 2


def _sweep_config(cfg: RunConfig) -> SweepConfig:
    return SweepConfig(
        params=cfg.system_params(),
        p_max_dbm_grid=cfg.p_max_dbm_grid,
        inr_db_list=cfg.inr_db_list,
        n_trials=cfg.n_trials,
        base_seed=cfg.seed,
        scheme=cfg.scheme,
        outer=cfg.outer_options(),
    )


def _cmd_sweep(cfg: RunConfig, out_path: str) -> int:
    rows = sweep(_sweep_config(cfg))
    emit_csv(rows, out_path or cfg.csv_path)
    if cfg.svg_path:
        series = {}
        for r in rows:
            series.setdefault(f"inr={_fmt(r.inr_db)}dB {r.scheme}", []).append(
                (r.p_max_dbm, r.avg_ee_bit_per_joule))
        emit_svg(series, cfg.svg_path)
    return 0


def _cmd_convergence(cfg: RunConfig, out_path: str) -> int:
    params = cfg.system_params()
    lines = ["p_max_dbm,inr_db,iteration,avg_ee_bit_per_joule"]
    for p_max_dbm in cfg.p_max_dbm_grid:
        for inr_db in cfg.inr_db_list:
            trace = convergence_trace(params, inr_db, p_max_dbm,
                                      cfg.n_trials, cfg.seed,
                                      cfg.outer_options())
            for it, value in enumerate(trace, start=1):
                lines.append(",".join(_fmt(v) for v in
                                      (p_max_dbm, inr_db, it, value)))
    _write_text("\n".join(lines) + "\n", out_path)
    return 0


def _cmd_verify(cfg: RunConfig, out_path: str, instances: int) -> int:
    """Compare the solver with the exhaustive oracle on small instances."""
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    checked = 0
    opts = OuterOptions(l_max=cfg.outer_l_max, eps=cfg.outer_eps, rho_grid_m=20)
    for k in range(instances):
        n_f = 2 if k % 2 == 0 else 4
        params = cfg.system_params().with_(
            n_subcarriers=n_f,
            rho_grid_m=20,
            r_min_bps=cfg.r_min_bps * n_f / cfg.n_subcarriers,
        )
        seed = int(rng.integers(0, 2 ** 31))
        ch = generate_channel(params, seed)
        r = dinkelbach_solve(ch, params, opts)
        try:
            _, q_oracle = brute_force_solve(ch, params, rho_grid_m=20)
        except InfeasibleProblemError:
            if r.feasible:
                worst = float("inf")
            continue
        if not r.feasible:
            worst = float("inf")
            continue
        checked += 1
        worst = max(worst, abs(r.q_star - q_oracle) / q_oracle)
    _write_text("instances=%d compared=%d max_relative_gap=%s\n"
                % (instances, checked, _fmt(worst)), out_path)
    return 0 if worst <= 5e-3 else 3


def _cmd_plot(in_path: str, out_path: str) -> int:
    with open(in_path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{in_path} is not a sweep CSV (bad header)")
    series: dict[str, list] = {}
    for ln in lines[1:]:
        cells = ln.split(",")
        p_max, inr, scheme, ee = (float(cells[0]), float(cells[1]),
                                  cells[2], float(cells[3]))
        series.setdefault(f"inr={_fmt(inr)}dB {scheme}", []).append((p_max, ee))
    emit_svg(series, out_path)
    return 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="swipt-ee",
        description="Energy-efficiency-optimal OFDM power allocation with "
                    "simultaneous wireless information and power transfer")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, desc in (
            ("solve", "solve one channel realization, print JSON"),
            ("sweep", "Monte-Carlo sweep over P_max x INR, print CSV"),
            ("convergence", "trial-averaged EE per outer iteration"),
            ("verify", "compare solver against the exhaustive oracle")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--output", default="", help="output path (default stdout)")
        if name == "verify":
            p.add_argument("--instances", type=int, default=10,
                           help="number of random oracle instances")
    p = sub.add_parser("plot", help="render a sweep CSV as an SVG line chart")
    p.add_argument("--input", required=True, help="sweep CSV path")
    p.add_argument("--output", default="", help="SVG path (default stdout)")
    return ap


def run(argv: list[str] | None = None) -> int:
    """Dispatch one CLI invocation; returns the process exit code."""
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:             # argparse errors are config errors
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "plot":
            return _cmd_plot(args.input, args.output)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.command == "solve":
            return _cmd_solve(cfg, args.output)
        if args.command == "sweep":
            return _cmd_sweep(cfg, args.output)
        if args.command == "convergence":
            return _cmd_convergence(cfg, args.output)
        return _cmd_verify(cfg, args.output, args.instances)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:              # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
