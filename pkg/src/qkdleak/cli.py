"""Command-line interface: run a scenario sweep or compare two scenarios.

Config files are flat ``key = value`` text, one scenario per file, ``#``
starting a comment.  Unspecified keys take their defaults (see ``DEFAULTS``).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ChannelParams
from .engine import CharacterizedTha, ExtraPm, GeneralEpsilon, GridSpec, KeyRatePoint, SolverSettings, SourceScenario, sweep
from .source import UNIFORM, discrete

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNCERTIFIED = 3

COLUMNS = ("distance_km", "mu", "nu", "Q_muZ", "E_muZ", "Y1_lower", "eph1_upper", "lambda_EC", "rate", "status")

DEFAULTS: dict[str, str] = {
    "model": "general_epsilon",
    "epsilon": "1e-8",
    "phase.kind": "uniform",
    "phase.N": "8",
    "I": "1e-8",
    "I_l": "0",
    "N": "8",
    "intensity.omega": "0",
    "n_cut": "10",
    "channel.eta_det": "0.65",
    "channel.p_d": "7.2e-8",
    "channel.alpha_db": "0.2",
    "channel.delta_A": "0.08",
    "channel.f_ec": "1.16",
    "distance.start": "0",
    "distance.stop": "200",
    "distance.step": "10",
    "grid.mu_min": "0.05",
    "grid.mu_max": "1.0",
    "grid.nu_min": "0.005",
    "grid.n_mu": "6",
    "grid.n_nu": "4",
    "grid.rounds": "2",
    "grid.shrink": "5",
    "solver.restarts": "50",
    "solver.sdp_tol": "1e-8",
    "solver.polish": "2",
    "seed": "0",
    "plot": "true",
}

MODELS = ("general_epsilon", "characterized_tha", "extra_pm")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scenario: SourceScenario
    distances: tuple[float, ...]
    plot: bool
    resolved: dict[str, str]


def parse_config_text(text: str, source: str = "<config>") -> tuple[dict[str, str], dict[str, int]]:
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS and key != "distances":
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        values[key] = val
        lines[key] = lineno
    return values, lines


def build_config(values: dict[str, str], lines: dict[str, int], source: str = "<config>", seed: int | None = None) -> RunConfig:
    merged = dict(DEFAULTS)
    merged.update(values)
    if seed is not None:
        merged["seed"] = str(seed)

    def where(key):
        return f"{source}:{lines[key]}" if key in lines else f"{source}: default for"

    def num(key, kind=float, lo=None, hi=None, lo_open=False):
        raw = merged[key]
        try:
            v = kind(raw)
        except ValueError:
            raise ConfigError(f"{where(key)} {key!r}: cannot parse {raw!r} as {kind.__name__}") from None
        if kind is float and not math.isfinite(v):
            raise ConfigError(f"{where(key)} {key!r}: value must be finite")
        if lo is not None and (v <= lo if lo_open else v < lo):
            raise ConfigError(f"{where(key)} {key!r}: value {raw} must be {'>' if lo_open else '>='} {lo}")
        if hi is not None and v > hi:
            raise ConfigError(f"{where(key)} {key!r}: value {raw} must be <= {hi}")
        return v

    def flag(key):
        raw = merged[key].lower()
        if raw in ("true", "yes", "1", "on"):
            return True
        if raw in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{where(key)} {key!r}: expected true or false, got {merged[key]!r}")

    model_name = merged["model"]
    if model_name not in MODELS:
        raise ConfigError(f"{where('model')} 'model': expected one of {', '.join(MODELS)}, got {model_name!r}")
    if model_name == "general_epsilon":
        kind = merged["phase.kind"]
        if kind == "uniform":
            dist = UNIFORM
        elif kind == "discrete":
            dist = discrete(num("phase.N", int, lo=2))
        else:
            raise ConfigError(f"{where('phase.kind')} 'phase.kind': expected uniform or discrete, got {kind!r}")
        model = GeneralEpsilon(num("epsilon", lo=0, hi=1), dist)
    elif model_name == "characterized_tha":
        model = CharacterizedTha(num("I", lo=0), num("N", int, lo=2))
    else:
        model = ExtraPm(num("I", lo=0), num("I_l", lo=0), num("N", int, lo=1))

    try:
        channel = ChannelParams(
            eta_det=num("channel.eta_det", lo=0, hi=1),
            p_d=num("channel.p_d", lo=0, hi=1),
            alpha_db=num("channel.alpha_db", lo=0),
            delta_A=num("channel.delta_A", lo=0),
            f_ec=num("channel.f_ec", lo=0),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: channel parameters: {exc}") from None
    grid = GridSpec(
        mu_min=num("grid.mu_min", lo=0, lo_open=True),
        mu_max=num("grid.mu_max", lo=0, lo_open=True),
        nu_min=num("grid.nu_min", lo=0, lo_open=True),
        n_mu=num("grid.n_mu", int, lo=1),
        n_nu=num("grid.n_nu", int, lo=1),
        rounds=num("grid.rounds", int, lo=0),
        shrink=num("grid.shrink", lo=1, lo_open=True),
    )
    if grid.mu_max < grid.mu_min:
        raise ConfigError(f"{where('grid.mu_max')} 'grid.mu_max': must be >= grid.mu_min")
    solver = SolverSettings(
        restarts=num("solver.restarts", int, lo=1),
        seed=num("seed", int, lo=0, hi=2**64 - 1),
        sdp_tol=num("solver.sdp_tol", lo=0, lo_open=True),
        polish=num("solver.polish", int, lo=0),
    )
    scenario = SourceScenario(
        model=model,
        channel=channel,
        omega=num("intensity.omega", lo=0),
        n_cut=num("n_cut", int, lo=1),
        grid=grid,
        solver=solver,
    )
    if scenario.omega >= grid.nu_min:
        raise ConfigError(f"{where('intensity.omega')} 'intensity.omega': must be below grid.nu_min")

    if "distances" in values:
        raw = values["distances"]
        try:
            distances = tuple(float(x) for x in raw.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"{where('distances')} 'distances': expected numbers, got {raw!r}") from None
        if any(d < 0 for d in distances) or list(distances) != sorted(distances):
            raise ConfigError(f"{where('distances')} 'distances': must be nonnegative and ascending")
    else:
        start = num("distance.start", lo=0)
        stop = num("distance.stop")
        step = num("distance.step", lo=0, lo_open=True)
        count = int(math.floor((stop - start) / step + 1e-9)) + 1 if stop >= start else 0
        distances = tuple(float(start + i * step) for i in range(count))
    resolved = dict(merged)
    resolved["distances"] = " ".join(f"{d:g}" for d in distances)
    return RunConfig(scenario, distances, flag("plot"), resolved)


def load_config(path: Path, seed: int | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    values, lines = parse_config_text(text, str(path))
    return build_config(values, lines, str(path), seed)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{x:.9g}"


def write_csv(path: Path, points: list[KeyRatePoint], resolved: dict[str, str]) -> None:
    out = ["# qkdleak rates"]
    out += [f"# {k} = {resolved[k]}" for k in sorted(resolved)]
    out.append(",".join(COLUMNS))
    for p in points:
        row = (p.L, p.mu, p.nu, p.Q_muZ, p.E_muZ, p.Y1_lower, p.eph1_upper, p.lambda_EC, p.rate, p.status)
        out.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(out) + "\n")


def svg_plot(series: dict[str, tuple[list[float], list[float]]], title: str = "") -> str:
    """Static rate-vs-distance plot with a logarithmic rate axis."""
    W, H, ml, mr, mt, mb = 640, 420, 70, 20, 30, 50
    pw, ph = W - ml - mr, H - mt - mb
    xs = [x for xv, _ in series.values() for x in xv]
    pos = [y for _, yv in series.values() for y in yv if y > 0]
    xmin, xmax = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if xmax == xmin:
        xmax = xmin + 1
    if pos:
        dmin = math.floor(math.log10(min(pos)))
        dmax = math.ceil(math.log10(max(pos)))
    else:
        dmin, dmax = -6, 0
    if dmax == dmin:
        dmax = dmin + 1

    def px(x):
        return ml + (x - xmin) / (xmax - xmin) * pw

    def py(y):
        return mt + (dmax - math.log10(y)) / (dmax - dmin) * ph

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for d in range(dmin, dmax + 1):
        y = mt + (dmax - d) / (dmax - dmin) * ph
        parts.append(f'<line x1="{ml}" y1="{y:.2f}" x2="{ml + pw}" y2="{y:.2f}" stroke="#dddddd"/>')
        parts.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" font-size="11" text-anchor="end">1e{d}</text>')
    for x in np.linspace(xmin, xmax, 6):
        parts.append(f'<text x="{px(x):.2f}" y="{mt + ph + 18}" font-size="11" text-anchor="middle">{x:g}</text>')
    parts.append(f'<text x="{ml + pw / 2}" y="{H - 10}" font-size="12" text-anchor="middle">distance (km)</text>')
    parts.append(f'<text x="16" y="{mt + ph / 2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {mt + ph / 2})">key rate</text>')
    if title:
        parts.append(f'<text x="{ml + pw / 2}" y="18" font-size="13" text-anchor="middle">{title}</text>')
    for k, (name, (xv, yv)) in enumerate(series.items()):
        color = colors[k % len(colors)]
        run: list[str] = []
        segments = []
        for x, y in zip(xv, yv):
            if y > 0:
                run.append(f"{px(x):.2f},{py(y):.2f}")
            elif run:
                segments.append(run)
                run = []
        if run:
            segments.append(run)
        for seg in segments:
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(seg)}"/>')
        ly = mt + 16 + 16 * k
        parts.append(f'<line x1="{ml + pw - 150}" y1="{ly - 4}" x2="{ml + pw - 130}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{ml + pw - 125}" y="{ly}" font-size="11">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _run_sweep(cfg: RunConfig) -> list[KeyRatePoint]:
    return sweep(cfg.scenario, cfg.distances)


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    points = _run_sweep(cfg)
    write_csv(out / "rates.csv", points, cfg.resolved)
    if cfg.plot and not args.no_plot:
        data = {cfg.resolved["model"]: ([p.L for p in points], [p.rate for p in points])}
        (out / "rates.svg").write_text(svg_plot(data, Path(args.config).name))
    if any(p.status == "uncertified" for p in points):
        logging.error("at least one bound could not be certified")
        return EXIT_UNCERTIFIED
    return EXIT_OK


def rate_ratio(a: float, b: float) -> float:
    if b == 0:
        return 1.0 if a == 0 else math.inf
    return a / b


def cmd_compare(args) -> int:
    ca = load_config(args.a, args.seed)
    cb = load_config(args.b, args.seed)
    if ca.distances != cb.distances:
        raise ConfigError(f"distance grids differ between {args.a} and {args.b}")
    pa, pb = _run_sweep(ca), _run_sweep(cb)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["distance_km,rate_a,rate_b,ratio"]
    for x, y in zip(pa, pb):
        lines.append(",".join(_fmt(v) for v in (x.L, x.rate, y.rate, rate_ratio(x.rate, y.rate))))
    text = "\n".join(lines) + "\n"
    (out / "compare.csv").write_text(text)
    sys.stdout.write(text)
    if not args.no_plot:
        data = {
            f"a: {Path(args.a).name}": ([p.L for p in pa], [p.rate for p in pa]),
            f"b: {Path(args.b).name}": ([p.L for p in pb], [p.rate for p in pb]),
        }
        (out / "compare.svg").write_text(svg_plot(data, "rate comparison"))
    if any(p.status == "uncertified" for p in pa + pb):
        return EXIT_UNCERTIFIED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkdleak", description="Certified decoy-state BB84 key rates under source leakage.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="sweep one scenario over distance")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", default=".", type=Path)
    run.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    run.add_argument("--no-plot", action="store_true")
    run.set_defaults(func=cmd_run)
    cmp_ = sub.add_parser("compare", help="per-distance rate ratios of two scenarios")
    cmp_.add_argument("--a", required=True, type=Path)
    cmp_.add_argument("--b", required=True, type=Path)
    cmp_.add_argument("--out", default=".", type=Path)
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--no-plot", action="store_true")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
