"""Config-driven runner: executes verification suites, writes JSON and CSV.

Config is a flat key=value file; every key can also be set (or overridden)
by a command-line flag.  Reports carry no timestamps so identical config
and seed produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import fem2d, oplab, tracescale
from .errors import ConfigParseError, TracelabError
from .report import SuiteReport

VALID_SUITES = ("oplab", "pde", "hhalf", "h1", "necas", "interp", "dual")
VALID_MESHES = fem2d.KINDS

_DRIFT_LIMIT = 0.25       # successive-refinement drift gate for hhalf constants
_GROWTH_LIMIT = 3.0       # growth gate for h1 / necas constants

_STABILITY_METRICS = {
    "hhalf": (("quotient_cmin", "quotient_cmax"), "drift", _DRIFT_LIMIT),
    "h1": (("h1_cmin", "h1_cmax", "seminorm_cmin", "seminorm_cmax"), "growth", _GROWTH_LIMIT),
    "necas": (
        ("trace_rough_max", "trace_smooth_max", "flux_rough_max", "flux_smooth_max", "rellich_max"),
        "growth",
        _GROWTH_LIMIT,
    ),
}


@dataclass(frozen=True)
class RunConfig:
    suites: tuple[str, ...]
    meshes: tuple[str, ...] = ("square",)
    ns: tuple[int, ...] = (8,)
    seed: int = 0
    trials: int = 100
    tol_overrides: dict[str, float] = field(default_factory=dict)
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if not self.suites:
            raise ConfigParseError("no suites selected")
        for s in self.suites:
            if s not in VALID_SUITES:
                raise ConfigParseError(f"unknown suite {s!r}")
        for m in self.meshes:
            if m not in VALID_MESHES:
                raise ConfigParseError(f"unknown mesh kind {m!r}")
        if not self.meshes:
            raise ConfigParseError("no mesh kinds selected")
        if not self.ns:
            raise ConfigParseError("no refinement levels selected")
        for n in self.ns:
            if n < 1:
                raise ConfigParseError(f"refinement {n} must be positive")
        if "lshape" in self.meshes and any(n % 2 for n in self.ns):
            raise ConfigParseError("lshape meshes need even refinement levels")
        if self.trials < 1:
            raise ConfigParseError("trials must be at least 1")
        if not -(2**63) <= self.seed < 2**64:
            raise ConfigParseError("seed does not fit in 64 bits")

    def as_dict(self) -> dict:
        return {
            "suites": list(self.suites),
            "meshes": list(self.meshes),
            "ns": list(self.ns),
            "seed": self.seed,
            "trials": self.trials,
            "tol_overrides": dict(sorted(self.tol_overrides.items())),
            "out_dir": self.out_dir,
        }


def cell_seed(master: int, name: str) -> int:
    """Deterministic per-cell seed: master XOR 64-bit hash of the cell name."""
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return (master ^ int.from_bytes(digest, "big")) & (2**64 - 1)


def _split_csv(values: list[str]) -> list[str]:
    out: list[str] = []
    for v in values:
        out.extend(p.strip() for p in v.split(",") if p.strip())
    return out


def parse_config_file(path: str) -> dict[str, object]:
    """Flat key=value text.  Blank lines and #-comments are skipped.

    Keys: suites, meshes, ns (comma lists), seed, trials (integers),
    out (path), tol.NAME (real override for tolerance family NAME).
    """
    raw: dict[str, object] = {}
    tols: dict[str, float] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigParseError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key.startswith("tol."):
            name = key[len("tol.") :]
            if not name:
                raise ConfigParseError(f"{path}:{lineno}: empty tolerance name")
            try:
                tols[name] = float(value)
            except ValueError as exc:
                raise ConfigParseError(f"{path}:{lineno}: bad tolerance value {value!r}") from exc
        elif key in ("suites", "meshes", "ns"):
            raw[key] = _split_csv([value])
        elif key in ("seed", "trials"):
            try:
                raw[key] = int(value)
            except ValueError as exc:
                raise ConfigParseError(f"{path}:{lineno}: bad integer {value!r}") from exc
        elif key == "out":
            raw[key] = value
        else:
            raise ConfigParseError(f"{path}:{lineno}: unknown key {key!r}")
    if tols:
        raw["tol_overrides"] = tols
    return raw


def _parse_tol_flag(items: list[str]) -> dict[str, float]:
    tols: dict[str, float] = {}
    for item in items:
        if "=" not in item:
            raise ConfigParseError(f"--tol expects NAME=VALUE, got {item!r}")
        name, _, value = item.partition("=")
        name = name.strip()
        try:
            tols[name] = float(value)
        except ValueError as exc:
            raise ConfigParseError(f"bad tolerance value in {item!r}") from exc
    return tols


def build_config(args: argparse.Namespace) -> RunConfig:
    raw: dict[str, object] = {}
    if args.config:
        raw.update(parse_config_file(args.config))
    if args.suite:
        raw["suites"] = _split_csv(args.suite)
    if args.mesh:
        raw["meshes"] = _split_csv(args.mesh)
    if args.n:
        raw["ns"] = _split_csv(args.n)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.trials is not None:
        raw["trials"] = args.trials
    if args.tol:
        merged = dict(raw.get("tol_overrides", {}))
        merged.update(_parse_tol_flag(args.tol))
        raw["tol_overrides"] = merged
    if args.out:
        raw["out"] = args.out

    try:
        ns = tuple(int(v) for v in raw.get("ns", [8]))
    except ValueError as exc:
        raise ConfigParseError(f"bad refinement value: {exc}") from exc

    def _dedupe(items) -> tuple[str, ...]:
        seen: list[str] = []
        for it in items:
            if it not in seen:
                seen.append(it)
        return tuple(seen)

    out_dir = raw.get("out") or os.environ.get("TRACELAB_OUT") or "tracelab_out"
    return RunConfig(
        suites=_dedupe(raw.get("suites", [])),
        meshes=_dedupe(raw.get("meshes", ["square"])),
        ns=ns,
        seed=int(raw.get("seed", 0)),
        trials=int(raw.get("trials", 100)),
        tol_overrides=dict(raw.get("tol_overrides", {})),
        out_dir=str(out_dir),
    )


def _mesh_cells(config: RunConfig, suite: str, assemblies) -> list[SuiteReport]:
    reports: list[SuiteReport] = []
    tols = config.tol_overrides or None
    for mesh in config.meshes:
        per_level: list[SuiteReport] = []
        for n in config.ns:
            a = assemblies[(mesh, n)]
            seed = cell_seed(config.seed, f"{suite}:{mesh}:{n}")
            if suite == "pde":
                rep = tracescale.suite_pde(a, trials=config.trials, seed=seed, tolerances=tols)
            elif suite == "hhalf":
                rep = tracescale.suite_hhalf(a, trials=config.trials, seed=seed, tolerances=tols)
            elif suite == "h1":
                rep = tracescale.suite_h1(a, tolerances=tols)
            elif suite == "necas":
                rep = tracescale.necas_constants(a, n_samples=config.trials, seed=seed, tolerances=tols)
            elif suite == "interp":
                rep = tracescale.suite_interp(a, trials=config.trials, seed=seed, tolerances=tols)
            elif suite == "dual":
                rep = tracescale.suite_dual(a, seed=seed, tolerances=tols)
            else:  # pragma: no cover - guarded by RunConfig validation
                raise ConfigParseError(f"unknown suite {suite!r}")
            per_level.append(rep)
        reports.extend(per_level)
        if suite in _STABILITY_METRICS and len(per_level) >= 2:
            metrics, mode, limit = _STABILITY_METRICS[suite]
            series = {
                m: [rep.constants[m] for rep in per_level]
                for m in metrics
                if all(m in rep.constants for rep in per_level)
            }
            if series:
                reports.append(tracescale.refinement_stability(suite, mesh, series, limit, mode))
    return reports


def execute(config: RunConfig) -> tuple[list[SuiteReport], str]:
    """Run every selected cell; returns (reports, verdict)."""
    reports: list[SuiteReport] = []
    tols = config.tol_overrides or None
    if "oplab" in config.suites:
        reports.append(
            oplab.identity_suite(
                trials=config.trials,
                seed=cell_seed(config.seed, "oplab:identity"),
                tolerances=tols,
            )
        )
        reports.append(
            oplab.douglas_suite(
                pairs=max(1, config.trials // 2),
                seed=cell_seed(config.seed, "oplab:douglas"),
                tolerances=tols,
            )
        )

    mesh_suites = [s for s in config.suites if s != "oplab"]
    if mesh_suites:
        assemblies = {
            (mesh, n): fem2d.assemble(fem2d.gen_mesh(mesh, n))
            for mesh in config.meshes
            for n in config.ns
        }
        for suite in mesh_suites:
            reports.extend(_mesh_cells(config, suite, assemblies))

    verdict = "pass" if all(rep.passed for rep in reports) else "fail"
    return reports, verdict


def write_reports(config: RunConfig, reports: list[SuiteReport], verdict: str) -> tuple[Path, Path]:
    out = Path(config.out_dir or "tracelab_out")
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": config.as_dict(),
        "results": [rep.as_dict() for rep in reports],
        "verdict": verdict,
    }
    json_path = out / "report.json"
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    csv_path = out / "report.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["suite", "mesh", "n", "metric", "value"])
        for rep in reports:
            for name in sorted(rep.residuals):
                writer.writerow([rep.suite, rep.mesh, rep.n, name, repr(rep.residuals[name])])
            for name in sorted(rep.constants):
                writer.writerow([rep.suite, rep.mesh, rep.n, name, repr(rep.constants[name])])
    return json_path, csv_path


def run(config: RunConfig) -> int:
    """Execute the configured cells and write report files.

    Returns 0 when every gated verdict passes, 1 otherwise.
    """
    reports, verdict = execute(config)
    json_path, _ = write_reports(config, reports, verdict)
    failed = [
        f"{rep.suite}:{rep.mesh}:{rep.n}:{name}"
        for rep in reports
        for name, ok in rep.verdicts.items()
        if not ok
    ]
    print(f"{len(reports)} reports -> {json_path} [{verdict}]")
    for item in failed:
        print(f"  FAIL {item}")
    return 0 if verdict == "pass" else 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracelab",
        description="Run tracelab verification suites and emit JSON/CSV reports.",
    )
    parser.add_argument("config", nargs="?", help="flat key=value config file")
    parser.add_argument("--suite", action="append", help="suite name (repeatable / comma list)")
    parser.add_argument("--mesh", action="append", help="mesh kind (repeatable / comma list)")
    parser.add_argument("--n", action="append", help="refinement level (repeatable / comma list)")
    parser.add_argument("--seed", type=int, default=None, help="master seed (64-bit)")
    parser.add_argument("--trials", type=int, default=None, help="random trials per cell")
    parser.add_argument("--tol", action="append", help="tolerance override NAME=VALUE")
    parser.add_argument("--out", default=None, help="output directory (default $TRACELAB_OUT)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        config = build_config(args)
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(config)
    except TracelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
