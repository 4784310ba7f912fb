"""Command-line entry point.

    soliton-engine design  --gi -0.1 --gf -0.2 --n 100 --tf 0.15 --out run1
    soliton-engine stroke  --kind sta --backend gpe --tf 0.15 --out run2
    soliton-engine cycle   --nc 100 --ne 90 --tf 10 --kind tra --out run3
    soliton-engine sweep   --tf 0.05:5:20 --parallel 4 --out run4

Parameters come from defaults, then an optional ``--config`` file, then
flags, later sources winning. The config file is flat ``key = value`` text
with keys named like the flags (``grid-n`` or ``grid_n``); a previous
``manifest.json`` is accepted as well, which replays that run. Every command
writes its files plus one ``manifest.json`` into ``--out``.

Exit status: 0 on success, 2 for invalid input, 3 for numerical failure,
with a one-line ``error[validation]:`` or ``error[numerical]:`` message on
stderr.
"""
from __future__ import annotations

import argparse
import configparser
import datetime as dt
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import thermo as th
from .errors import NumericalError, ValidationError
from .gpe import SERIES_COLUMNS, Grid
from .pulse import StrokeConfig, sta_pulse, tra_pulse

DEFAULTS = {
    "gi": -0.1,
    "gf": -0.2,
    "n": 100.0,
    "nc": 100.0,
    "ne": 90.0,
    "tf": "0.15",
    "kind": "sta",
    "backend": "gpe",
    "grid-n": 1024,
    "grid-l": 16.0,
    "dt": 1e-4,
    "samples": 1001,
    "parallel": 1,
    "out": ".",
}
SWEEP_TF = "0.05:5:20"

_CASTS = {
    "gi": float, "gf": float, "n": float, "nc": float, "ne": float, "tf": str,
    "kind": str, "backend": str, "grid-n": int, "grid-l": float, "dt": float,
    "samples": int, "parallel": int, "out": str,
}


def _fmt(v: float) -> str:
    return "%.17g" % v


def read_config(path: str) -> dict:
    """Flat key/value config, or the ``config`` block of a manifest."""
    text = Path(path).read_text()
    if path.endswith(".json"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path}: {exc}") from None
        raw = raw.get("config", raw)
    else:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string("[run]\n" + text)
        except configparser.Error as exc:
            raise ValidationError(f"config {path}: {exc.message.splitlines()[0]}") from None
        raw = dict(parser["run"])
    out = {}
    for key, value in raw.items():
        name = key.strip().replace("_", "-")
        if name not in _CASTS:
            raise ValidationError(f"config {path}: unknown key {key!r}")
        out[name] = value
    return out


def merge_config(command: str, flags: dict, config_path: str | None) -> dict:
    merged = dict(DEFAULTS)
    if command == "sweep":
        merged["tf"] = SWEEP_TF
    if config_path:
        merged.update(read_config(config_path))
    merged.update({k: v for k, v in flags.items() if v is not None})
    for key, cast in _CASTS.items():
        try:
            merged[key] = cast(merged[key])
        except (TypeError, ValueError):
            raise ValidationError(f"{key}: cannot read {merged[key]!r} as {cast.__name__}") from None
    merged["kind"] = merged["kind"].lower()
    merged["backend"] = merged["backend"].lower()
    if merged["kind"] not in ("sta", "tra"):
        raise ValidationError(f"kind must be sta or tra, got {merged['kind']!r}")
    if merged["backend"] not in ("gpe", "variational"):
        raise ValidationError(f"backend must be gpe or variational, got {merged['backend']!r}")
    if merged["parallel"] < 1:
        raise ValidationError(f"parallel must be at least 1, got {merged['parallel']}")
    if not merged["dt"] > 0:
        raise ValidationError(f"dt must be positive, got {merged['dt']}")
    return merged


def parse_tf_values(text: str) -> list[float]:
    """``0.15``, ``0.1,0.2,0.5`` or a log range ``start:stop:count``."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            return [float(t) for t in np.geomspace(float(start), float(stop), int(count))]
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise ValidationError(f"tf: cannot parse {text!r}") from None


def _single_tf(cfg: dict) -> float:
    values = parse_tf_values(cfg["tf"])
    if len(values) != 1:
        raise ValidationError(f"tf: this command takes one value, got {len(values)}")
    return values[0]


def _settings(cfg: dict) -> th.SolverSettings:
    return th.SolverSettings(grid=Grid(cfg["grid-l"], cfg["grid-n"]), dt=cfg["dt"])


def _stroke_config(cfg: dict) -> StrokeConfig:
    return StrokeConfig(cfg["gi"], cfg["gf"], cfg["n"], _single_tf(cfg), cfg["samples"])


def _cycle_template(cfg: dict, T_f: float) -> th.CycleConfig:
    return th.CycleConfig(cfg["gi"], cfg["gf"], cfg["nc"], cfg["ne"], T_f,
                          protocol=cfg["kind"].upper(), samples=cfg["samples"])


def _kv_lines(pairs) -> str:
    return "".join(f"{k}={_fmt(v) if isinstance(v, float) else v}\n" for k, v in pairs)


def cmd_design(cfg: dict, out: Path) -> list[str]:
    sc = _stroke_config(cfg)
    sta = sta_pulse(sc)
    tra = tra_pulse(sc)
    (out / "pulse_sta.csv").write_text(sta.to_csv())
    (out / "pulse_tra.csv").write_text(tra.to_csv())
    print(f"STA g range [{_fmt(sta.g_values.min())}, {_fmt(sta.g_values.max())}], "
          f"min |gN| = {_fmt(sta.min_abs_gN())}")
    return ["pulse_sta.csv", "pulse_tra.csv"]


def cmd_stroke(cfg: dict, out: Path) -> list[str]:
    sc = _stroke_config(cfg)
    rec = th.run_stroke(sc, cfg["kind"].upper(), cfg["backend"].upper(), _settings(cfg), keep_series=True)
    kind = cfg["kind"]
    rows = "".join(",".join(_fmt(v) for v in row) + "\n" for row in rec.series)
    (out / f"series_{kind}.csv").write_text(",".join(SERIES_COLUMNS) + "\n" + rows)
    summary = _kv_lines([
        ("kind", rec.kind.value), ("backend", rec.backend.value),
        ("g_initial", sc.g_initial), ("g_final", sc.g_final), ("N", sc.N), ("T_f", sc.T_f),
        ("work", rec.work), ("adiabatic_work", rec.adiabatic_work),
        ("irreversible_work", rec.irreversible_work), ("fidelity", rec.fidelity),
        ("initial_energy", rec.initial_energy), ("final_energy", rec.final_energy),
        ("shortcut_energy", rec.shortcut_energy), ("bures_angle", rec.bures_angle),
    ])
    (out / f"stroke_{kind}.txt").write_text(summary)
    sys.stdout.write(summary)
    return [f"series_{kind}.csv", f"stroke_{kind}.txt"]


def cmd_cycle(cfg: dict, out: Path) -> list[str]:
    tpl = _cycle_template(cfg, _single_tf(cfg))
    rep = th.run_cycle(tpl, cfg["backend"].upper(), _settings(cfg))
    point = th.SweepPoint(tpl.T_f, rep)
    (out / "cycle.csv").write_text(th.sweep_to_csv([point], tpl))
    (out / "cycle_summary.txt").write_text(rep.summary() + "\n")
    print(rep.summary())
    return ["cycle.csv", "cycle_summary.txt"]


def cmd_sweep(cfg: dict, out: Path) -> list[str]:
    T_values = parse_tf_values(cfg["tf"])
    tpl = _cycle_template(cfg, T_values[0])
    points = th.sweep(tpl, T_values, cfg["backend"].upper(), _settings(cfg), workers=cfg["parallel"])
    (out / "sweep.csv").write_text(th.sweep_to_csv(points, tpl))
    failed = sum(p.report is None for p in points)
    print(f"{len(points)} points, {failed} failed; wrote sweep.csv")
    return ["sweep.csv"]


COMMANDS = {"design": cmd_design, "stroke": cmd_stroke, "cycle": cmd_cycle, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soliton-engine", description="Bright-soliton Otto engine toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--gi", type=float, help="initial interaction g_i")
        p.add_argument("--gf", type=float, help="final interaction g_f")
        p.add_argument("--n", type=float, help="particle number of a single stroke")
        p.add_argument("--nc", type=float, help="particle number on compression")
        p.add_argument("--ne", type=float, help="particle number on expansion")
        p.add_argument("--tf", type=str, help="stroke time; sweep also takes a,b,c or start:stop:count")
        p.add_argument("--kind", type=str.lower, choices=["sta", "tra"])
        p.add_argument("--backend", type=str.lower, choices=["gpe", "variational"])
        p.add_argument("--grid-n", dest="grid-n", type=int)
        p.add_argument("--grid-l", dest="grid-l", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--samples", type=int)
        p.add_argument("--parallel", type=int)
        p.add_argument("--out", type=str)
        p.add_argument("--config", type=str)
    return parser


def write_manifest(out: Path, command: str, cfg: dict, outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config": cfg,
        "version": __version__,
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs": sorted(outputs),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def run(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    cfg = merge_config(command, args, config_path)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    outputs = COMMANDS[command](cfg, out)
    write_manifest(out, command, cfg, outputs)
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except ValidationError as exc:
        print(f"error[validation]: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error[numerical]: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error[validation]: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 2


def _one_line(exc) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
