"""Artifact files: JSONL traces, CSV tables, manifests and config loading.

Everything written here is a pure function of the inputs (no timestamps, stable
key order, ``repr`` floats) so that re-running an invocation reproduces the files
byte for byte. Only ``manifest.json`` carries wall-clock data.
"""

from __future__ import annotations

import csv
import heapq
import json
from pathlib import Path
from typing import Iterable, Iterator

import yaml

from .engine import BatchResult, FitnessRecord, RunSummary, SimTrace
from .params import TUNED

_TYPE_ORDER = {"message": 0, "decision": 1, "sample": 2}


def load_config_file(path: str | Path) -> dict:
    """Read a YAML (or JSON) config with optional ``params``, ``sim`` and ``pso`` sections."""
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    unknown = set(data) - {"params", "sim", "pso", "batch"}
    if unknown:
        raise ValueError(f"{path}: unknown config sections {sorted(unknown)}")
    return data


def _trace_records(trace: SimTrace) -> Iterator[tuple]:
    n = trace.config.n_robots
    dt = trace.config.motion.dt

    def samples():
        for i, step in enumerate(trace.sample_step.tolist()):
            robots = [{"alpha": float(trace.alpha[i, k]), "beta": float(trace.beta[i, k]),
                       "d_f": int(trace.d_f[i, k]), "x": float(trace.x[i, k]),
                       "y": float(trace.y[i, k]), "heading": float(trace.heading[i, k])}
                      for k in range(n)]
            yield (step, _TYPE_ORDER["sample"],
                   {"type": "sample", "step": step, "t": step * dt,
                    "coverage": float(trace.coverage[i]), "robots": robots})

    def decisions():
        for ev in trace.events:
            yield (ev.step, _TYPE_ORDER["decision"],
                   {"type": "decision", "step": ev.step, "t": ev.time_s, "robot": ev.robot,
                    "d_f": ev.d_f, "correct": ev.correct})

    def messages():
        for step, sender, receiver, bit, kind in trace.deliveries():
            yield (step, _TYPE_ORDER["message"],
                   {"type": "message", "step": step, "sender": sender, "receiver": receiver,
                    "bit": bit, "kind": "decision" if kind else "observation"})

    return heapq.merge(messages(), decisions(), samples(), key=lambda r: (r[0], r[1]))


def write_trace_jsonl(trace: SimTrace, record: FitnessRecord, path: str | Path) -> None:
    cfg = trace.config
    header = {
        "type": "run", "seed": cfg.seed, "fill": cfg.fill,
        "actual_fill": trace.pattern.actual_fill, "truth": trace.truth,
        "n_robots": cfg.n_robots, "T_max": cfg.T_max, "dt": cfg.motion.dt,
        "params": trace.params.to_dict(),
        "pattern": trace.pattern.to_text().split(),
        "initial_poses": trace.initial_poses.tolist(),
    }
    final = {
        "type": "final", "step": cfg.T_max, "d_f": trace.final_d_f.tolist(),
        "alpha": trace.final_alpha.tolist(), "beta": trace.final_beta.tolist(),
        "o_total": trace.final_o_total.tolist(), "pose": trace.final_pose.tolist(),
        "f": record.f.tolist(), "n_events": record.n_events.tolist(), "fit": record.fit,
        "final_correct": record.final_correct.tolist(),
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for _, _, rec in _trace_records(trace):
            fh.write(json.dumps(rec) + "\n")
        fh.write(json.dumps(final) + "\n")


def _run_row(run: int, fill: float, seed: int, actual_fill: float, record: FitnessRecord,
             ttc: float | None) -> list:
    return ([run, fill, seed, actual_fill, record.fit]
            + record.f.tolist()
            + [int(c) for c in record.final_correct]
            + record.n_events.tolist()
            + ["" if ttc is None else ttc])


def _run_header(n_robots: int) -> list[str]:
    return (["run", "fill", "seed", "actual_fill", "fit"]
            + [f"f_{k}" for k in range(n_robots)]
            + [f"correct_{k}" for k in range(n_robots)]
            + [f"events_{k}" for k in range(n_robots)]
            + ["time_to_consensus_s"])


def _write_csv(path: str | Path, header: list, rows: Iterable[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_summary_csv(trace: SimTrace, record: FitnessRecord, path: str | Path) -> None:
    cfg = trace.config
    _write_csv(path, _run_header(cfg.n_robots),
               [_run_row(0, cfg.fill, cfg.seed, trace.pattern.actual_fill, record,
                         trace.time_to_consensus_s())])


def fill_tag(fill: float) -> str:
    return f"{fill:g}"


def write_batch(result: BatchResult, out: Path, n_robots: int) -> list[str]:
    """Per-fill distribution and curve CSVs plus a medians table; returns file names."""
    written = []
    medians = []
    for fill in result.fills:
        runs: list[RunSummary] = result.runs.get(fill, [])
        name = f"fitness_f{fill_tag(fill)}.csv"
        _write_csv(out / name, _run_header(n_robots),
                   [_run_row(r.run, r.fill, r.seed, r.actual_fill, r.record,
                             r.time_to_consensus_s) for r in runs])
        written.append(name)
        if not runs:
            continue
        t, belief, cov = result.curves(fill)
        name = f"curves_f{fill_tag(fill)}.csv"
        _write_csv(out / name, ["t_s", "mean_belief", "mean_coverage"],
                   ([float(a), "" if b != b else float(b), float(c)]
                    for a, b, c in zip(t, belief, cov)))
        written.append(name)
        fits = result.fits(fill)
        medians.append([fill, len(runs), result.median(fill), float(fits.mean()),
                        float(sum(r.record.final_correct.all() for r in runs) / len(runs))])
    _write_csv(out / "medians.csv",
               ["fill", "n_runs", "median_fit", "mean_fit", "all_correct_fraction"], medians)
    written.append("medians.csv")
    return written


def write_history_csv(history: list[dict], path: str | Path, names: tuple = TUNED) -> None:
    dim = len(history[0]["position"]) if history else len(names)
    cols = list(names) if len(names) == dim else [f"x{j}" for j in range(dim)]
    header = ["iteration", "particle", *cols, "fitness", "personal_best", "global_best",
              "swarm_mean", "mean_personal_best"]
    rows = ([h["iteration"], h["particle"], *[int(v) if float(v).is_integer() else v
                                              for v in h["position"]],
             h["fitness"], h["personal_best"], h["global_best"], h["swarm_mean"],
             h["mean_personal_best"]] for h in history)
    _write_csv(path, header, rows)


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(path: str | Path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
