"""Command-line front end: ``sim``, ``batch``, ``pso`` and ``replay``.

Values resolve in the order built-in default < ``--config`` file < ``--params``
preset/file < individual flags. Every output directory gets a ``manifest.json``
holding the fully resolved job; ``replay`` re-runs it and reproduces the CSV/JSONL
artifacts byte for byte.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import shutil
import sys
import time
from pathlib import Path

import yaml

from . import __version__, kernel
from .engine import evaluate_fitness, run_batch, run_simulation
from .optimizer import PsoConfig, SearchSpace, load_checkpoint, run_campaign
from .outputs import (
    load_config_file,
    write_batch,
    write_history_csv,
    write_json,
    write_summary_csv,
    write_trace_jsonl,
)
from .params import PRESETS, ParameterBoundsError, ParameterSet, SimConfig


class UsageError(Exception):
    pass


def _on_off(value: str) -> bool:
    low = value.lower()
    if low in ("on", "true", "1", "yes"):
        return True
    if low in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


def _fills(value: str) -> list[float]:
    try:
        fills = [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fill list {value!r}") from None
    if not fills:
        raise argparse.ArgumentTypeError("empty fill list")
    return fills


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--config", help="YAML/JSON config file with params/sim/pso sections")
    g.add_argument("--params", help=f"parameter preset ({', '.join(PRESETS)}) or parameter file")
    g.add_argument("--feedback", type=_on_off, help="positive feedback on|off")
    g.add_argument("--tau", type=int, help="observation interval in steps")
    g.add_argument("--s", type=int, help="random-forward bound in steps")
    g.add_argument("--d", type=int, help="collision trigger distance in mm")
    g.add_argument("--h", type=int, help="hysteresis in observations")
    g.add_argument("--pc", type=float, help="credibility threshold")
    g.add_argument("--fill", type=float, help="arena fill ratio")
    g.add_argument("--robots", type=int, help="number of robots")
    g.add_argument("--tmax", type=int, help="horizon in simulation steps")
    g.add_argument("--count-received", type=_on_off,
                   help="count received colours toward the hysteresis counter")
    g.add_argument("--backend", choices=sorted(kernel.BACKENDS), help="simulation kernel")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarminspect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="run one simulation and write its trace")
    _add_model_flags(p)
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("batch", help="randomized runs per fill ratio")
    _add_model_flags(p)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--fills", type=_fills, default=None, help="comma-separated fill ratios")
    p.add_argument("--seed", type=int, default=None, help="base seed")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pso", help="noise-resistant PSO campaign")
    _add_model_flags(p)
    p.add_argument("--particles", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--noise-evals", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--topology", choices=["global", "ring"])
    p.add_argument("--reevaluate", type=_on_off, help="re-evaluate personal bests each iteration")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--resume", help="checkpoint file to continue from")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("replay", help="re-run the job recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True)
    return parser


# ---------------------------------------------------------------------------
# resolution


def load_params(source: str) -> dict:
    if source in PRESETS:
        return PRESETS[source].to_dict()
    path = Path(source)
    if not path.exists():
        raise UsageError(f"--params: {source!r} is neither a preset ({', '.join(PRESETS)}) "
                         f"nor an existing file")
    data = yaml.safe_load(path.read_text()) or {}
    if not isinstance(data, dict):
        raise UsageError(f"--params: {source} must hold a mapping")
    return data


def resolve_params(args, file_cfg: dict) -> ParameterSet:
    d = ParameterSet().to_dict()
    d.update(file_cfg.get("params") or {})
    if args.params:
        d.update(load_params(args.params))
    for flag, key in (("tau", "tau"), ("s", "s"), ("d", "d"), ("h", "h"), ("pc", "p_c"),
                      ("feedback", "feedback")):
        v = getattr(args, flag)
        if v is not None:
            d[key] = v
    return ParameterSet.from_dict(d).validate()


def resolve_sim(args, file_cfg: dict) -> SimConfig:
    d = SimConfig().to_dict()
    sim = dict(file_cfg.get("sim") or {})
    motion = sim.pop("motion", None) or {}
    d.update(sim)
    d["motion"].update(motion)
    for flag, key in (("fill", "fill"), ("robots", "n_robots"), ("tmax", "T_max"),
                      ("count_received", "count_received")):
        v = getattr(args, flag)
        if v is not None:
            d[key] = v
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    return SimConfig.from_dict(d).validate()


def resolve_job(args) -> dict:
    file_cfg = load_config_file(args.config) if args.config else {}
    params = resolve_params(args, file_cfg)
    sim = resolve_sim(args, file_cfg)
    backend = args.backend or kernel.BACKEND
    if args.command == "sim":
        return {"command": "sim", "params": params.to_dict(), "sim": sim.to_dict(),
                "backend": backend}
    if args.command == "batch":
        batch = file_cfg.get("batch") or {}
        fills = args.fills or batch.get("fills") or [sim.fill]
        runs = args.runs
        if runs < 1:
            raise UsageError("--runs must be at least 1")
        base_seed = args.seed if args.seed is not None else int(batch.get("seed", sim.seed))
        return {"command": "batch", "params": params.to_dict(), "sim": sim.to_dict(),
                "fills": [float(f) for f in fills], "runs": runs, "base_seed": base_seed,
                "backend": backend}
    # pso
    d = PsoConfig().to_dict()
    pso_file = file_cfg.get("pso") or {}
    d.update(pso_file)
    # the campaign's feedback mode follows the resolved parameters unless pinned
    d["feedback"] = args.feedback if args.feedback is not None else pso_file.get(
        "feedback", params.feedback)
    for flag, key in (("particles", "n_particles"), ("iters", "n_iterations"),
                      ("noise_evals", "n_noise_evals"), ("gamma", "gamma"),
                      ("topology", "topology"), ("reevaluate", "reevaluate"),
                      ("seed", "seed"), ("fill", "fill")):
        v = getattr(args, flag)
        if v is not None:
            d[key] = v
    d["base_params"] = params.to_dict()
    d["sim"] = sim.to_dict()
    d["workers"] = 1
    cfg = PsoConfig.from_dict(d).validate()
    return {"command": "pso", "pso": cfg.to_dict(), "backend": backend}


# ---------------------------------------------------------------------------
# execution


def execute(job: dict, out: Path, workers: int = 1, resume: str | None = None) -> dict:
    """Run a resolved job into ``out``; returns manifest fields."""
    out.mkdir(parents=True, exist_ok=True)
    cmd = job["command"]
    backend = job.get("backend") or kernel.BACKEND
    info: dict = {}
    if cmd == "sim":
        params = ParameterSet.from_dict(job["params"])
        sim = SimConfig.from_dict(job["sim"])
        trace = run_simulation(params, sim, backend)
        record = evaluate_fitness(trace)
        write_trace_jsonl(trace, record, out / "trace.jsonl")
        write_summary_csv(trace, record, out / "summary.csv")
        trace.pattern.save(out / "pattern.txt")
        info["artifacts"] = ["trace.jsonl", "summary.csv", "pattern.txt"]
        info["fit"] = record.fit
        info["seed"] = sim.seed
    elif cmd == "batch":
        params = ParameterSet.from_dict(job["params"])
        sim = SimConfig.from_dict(job["sim"])
        result = run_batch(params, job["fills"], job["runs"], job["base_seed"], config=sim,
                           workers=workers, backend=backend, on_error="collect")
        info["artifacts"] = write_batch(result, out, sim.n_robots)
        info["failed_runs"] = [{"fill": f, "run": r, "error": e} for f, r, e in result.failed]
        info["medians"] = {str(f): result.median(f) for f in result.fills if result.runs.get(f)}
        info["seed"] = job["base_seed"]
    elif cmd == "pso":
        cfg = dataclasses.replace(PsoConfig.from_dict(job["pso"]), workers=workers)
        ckpt = out / "checkpoint.json"
        if resume:
            src = Path(resume)
            if src.resolve() != ckpt.resolve():
                shutil.copyfile(src, ckpt)
        result = run_campaign(cfg, checkpoint=ckpt, resume=bool(resume))
        space = SearchSpace.parameter_box()
        write_history_csv(result.history, out / "history.csv", space.names)
        best = cfg.base_params.with_vector(result.best_position)
        best = dataclasses.replace(best, feedback=cfg.feedback)
        write_json(out / "best_params.json", best.to_dict())
        info["artifacts"] = ["history.csv", "best_params.json", "checkpoint.json"]
        info["best_fitness"] = result.best_fitness
        info["seed"] = cfg.seed
    else:
        raise UsageError(f"unknown command {cmd!r}")
    return info


def _write_manifest(out: Path, job: dict, info: dict, started: float) -> None:
    manifest = {
        "tool": "swarminspect",
        "version": __version__,
        "subcommand": job["command"],
        "resolved": job,
        "wall_clock_s": round(time.time() - started, 3),
        **info,
    }
    manifest["artifacts"] = sorted(set(info.get("artifacts", [])) | {"manifest.json"})
    write_json(out / "manifest.json", manifest)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    out = Path(args.out)
    try:
        if args.command == "replay":
            manifest = yaml.safe_load(Path(args.manifest).read_text())
            job = manifest["resolved"]
            resume = None
        elif args.command == "pso" and args.resume:
            state = load_checkpoint(args.resume)
            job = {"command": "pso", "pso": state["config"],
                   "backend": args.backend or kernel.BACKEND}
            resume = args.resume
        else:
            job = resolve_job(args)
            resume = None
    except (UsageError, ParameterBoundsError, ValueError, KeyError, OSError) as exc:
        print(f"swarminspect {args.command}: error: {exc}", file=sys.stderr)
        return 2

    try:
        info = execute(job, out, workers=getattr(args, "workers", 1), resume=resume)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"swarminspect {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    _write_manifest(out, job, info, started)
    return 0


if __name__ == "__main__":
    sys.exit(main())
