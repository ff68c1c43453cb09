"""Three-agent exploration experiment: run every (mode, run) pair, write
per-run artifacts, then aggregate exploration progress and accuracy."""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Dict, List, Mapping, Optional, Sequence, Tuple

from llcexplore.accuracy import AccuracyReport, data_path, \
    evaluate_accuracy, load_perfect_models, load_test_states, percent
from llcexplore.controller import AgentMode, ControllerConfig, Grounding, \
    run, write_run_log
from llcexplore.environment import GridWorld
from llcexplore.learner import save_models
from llcexplore.llc import generate_llcs
from llcexplore.pddl import DomainModel, PDDLError, ProblemInstance, \
    parse_domain, parse_problem, write_interaction_log

MODES = tuple(m.value for m in AgentMode)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    scenario: Path
    out: Path
    modes: Tuple[str, ...] = MODES
    runs: int = 3
    steps: int = 4000
    llc_size: int = 2
    seed: int = 0
    grounding: str = Grounding.UNIFORM.value
    domain: Optional[Path] = None
    tests: Optional[Path] = None
    max_negatives: Optional[int] = None
    workers: Optional[int] = None

    def validate(self) -> Tuple[DomainModel, ProblemInstance]:
        """Check every field and parse the inputs; raise ConfigError."""
        bad = [m for m in self.modes if m not in MODES]
        if not self.modes or bad:
            raise ConfigError(f"modes must be drawn from {list(MODES)}, "
                              f"got {list(self.modes)}")
        if len(set(self.modes)) != len(self.modes):
            raise ConfigError("modes must not repeat")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.steps < 0:
            raise ConfigError("steps must be non-negative")
        if self.llc_size < 1:
            raise ConfigError("llc size must be at least 1")
        if self.grounding not in {g.value for g in Grounding}:
            raise ConfigError(f"unknown grounding {self.grounding!r}")
        if self.max_negatives is not None and self.max_negatives < 0:
            raise ConfigError("max negatives must be non-negative")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be at least 1")
        domain_path = Path(self.domain or data_path("dcss_domain.pddl"))
        for label, p in (("scenario", Path(self.scenario)),
                         ("domain", domain_path)):
            if not p.is_file():
                raise ConfigError(f"{label} file not found: {p}")
        if self.tests is not None and not Path(self.tests).is_dir():
            raise ConfigError(f"test-state directory not found: {self.tests}")
        try:
            domain = parse_domain(domain_path.read_text(encoding="utf-8"))
            problem = parse_problem(
                Path(self.scenario).read_text(encoding="utf-8"), domain)
        except PDDLError as exc:
            raise ConfigError(str(exc)) from exc
        return domain, problem

    def to_json(self) -> dict:
        d = asdict(self)
        for k in ("scenario", "out", "domain", "tests"):
            d[k] = None if d[k] is None else str(d[k])
        d["modes"] = list(self.modes)
        return d

    def run_seed(self, index: int) -> int:
        # The same seed list is used for every mode.
        return self.seed + index


@dataclass
class RunSummary:
    mode: str
    index: int
    seed: int
    progress: List[int]
    learned: List[str]
    planner_calls: int
    plans: int
    accuracy: Dict[str, Tuple[int, int, int]] = field(default_factory=dict)

    @property
    def final_tiles(self) -> int:
        return self.progress[-1] if self.progress else 1


def run_dir(out: Path, mode: str, index: int) -> Path:
    return Path(out) / mode / f"run{index}"


def _execute(job: Tuple[dict, str, int]) -> RunSummary:
    """Worker: one (mode, run) pair. Reparses everything from paths so that
    it shares no state with the parent."""
    cfg_json, mode, index = job
    cfg = ExperimentConfig(**{
        **cfg_json, "modes": tuple(cfg_json["modes"]),
        "scenario": Path(cfg_json["scenario"]),
        "out": Path(cfg_json["out"])
    })
    domain, problem = cfg.validate()
    seed = cfg.run_seed(index)
    llcs = generate_llcs(domain, cfg.llc_size)
    ctl_cfg = ControllerConfig(mode=AgentMode(mode),
                               llc_size=cfg.llc_size,
                               grounding=Grounding(cfg.grounding),
                               max_negatives=cfg.max_negatives)
    result = run(GridWorld(problem), domain, mode, cfg.steps, seed, ctl_cfg,
                 llcs)
    target = run_dir(cfg.out, mode, index)
    target.mkdir(parents=True, exist_ok=True)
    with open(target / "interactions.jsonl", "w", encoding="utf-8") as fh:
        write_interaction_log(result.history, fh)
    with open(target / "run.log", "w", encoding="utf-8") as fh:
        write_run_log(result.trace, fh)
    save_models(result.models, target / "models.json")
    (target / "rules.txt").write_text(
        "".join(result.models[k].rule_text() + "\n"
                for k in sorted(result.models)),
        encoding="utf-8")
    report = evaluate_accuracy(result.models, load_perfect_models(domain),
                               load_test_states(domain, cfg.tests))
    (target / "accuracy.csv").write_text(report.to_csv(), encoding="utf-8")
    (target / "accuracy.txt").write_text(report.to_text(), encoding="utf-8")
    return RunSummary(mode, index, seed, result.progress, report.learned(),
                      result.planner_calls, result.plans,
                      _accuracy_triples(report))


def _accuracy_triples(report: AccuracyReport) -> Dict[str, Tuple[int, int,
                                                                  int]]:
    return {
        s: (percent(report.rows[s].precision), percent(
            report.rows[s].recall), percent(report.rows[s].f1))
        for s in report.ordered()
    }


def emit_progress_table(traces: Mapping[str, Sequence[Sequence[int]]],
                        sink: IO[str]) -> int:
    """Write ``step`` plus min/mean/max columns per mode; return row count.

    Every trace of every mode must have the same length.
    """
    if not traces:
        raise ValueError("no modes given")
    lengths = set()
    for mode, runs in traces.items():
        if not runs:
            raise ValueError(f"mode {mode!r} has no traces")
        lengths.update(len(t) for t in runs)
    if len(lengths) != 1:
        raise ValueError(f"trace lengths differ: {sorted(lengths)}")
    (n, ) = lengths
    w = csv.writer(sink, lineterminator="\n")
    header = ["step"]
    for mode in traces:
        header += [f"{mode}_min", f"{mode}_mean", f"{mode}_max"]
    w.writerow(header)
    for i in range(n):
        row: List[object] = [i + 1]
        for runs in traces.values():
            vals = [t[i] for t in runs]
            row += [min(vals), f"{sum(vals) / len(vals):.3f}", max(vals)]
        w.writerow(row)
    return n


def summarize(summaries: Sequence[RunSummary],
              modes: Sequence[str]) -> Dict[str, dict]:
    out: Dict[str, dict] = {}
    for mode in modes:
        rs = sorted((s for s in summaries if s.mode == mode),
                    key=lambda s: s.index)
        finals = [s.final_tiles for s in rs]
        learned = [len(s.learned) for s in rs]
        out[mode] = {
            "final_tiles": finals,
            "mean_final_tiles": round(sum(finals) / len(finals), 3),
            "learned_counts": learned,
            "mean_learned": round(sum(learned) / len(learned), 3),
            "learned_schemas": [s.learned for s in rs],
            "planner_calls": [s.planner_calls for s in rs],
            "plans": [s.plans for s in rs],
            "seeds": [s.seed for s in rs],
        }
    return out


def _summary_text(summary: Mapping[str, dict], steps: int) -> str:
    lines = [f"Unique tiles after {steps} steps and learned schemas "
             f"(nonzero F1) per mode", ""]
    lines.append(f"{'mode':<10}{'mean tiles':>12}{'min':>6}{'max':>6}"
                 f"{'mean learned':>14}")
    for mode, s in summary.items():
        t = s["final_tiles"]
        lines.append(f"{mode:<10}{s['mean_final_tiles']:>12.3f}{min(t):>6}"
                     f"{max(t):>6}{s['mean_learned']:>14.3f}")
    lines.append("")
    for mode, s in summary.items():
        for i, names in enumerate(s["learned_schemas"]):
            lines.append(f"{mode} run{i}: " + (", ".join(names) or "-"))
    return "\n".join(lines) + "\n"


def run_experiment(config: ExperimentConfig) -> Path:
    """Run all (mode, run) pairs and write the artifact directory."""
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_json = config.to_json()
    jobs = [(cfg_json, mode, i) for mode in config.modes
            for i in range(config.runs)]
    workers = config.workers or min(len(jobs), os.cpu_count() or 1)
    if workers == 1:
        summaries = [_execute(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_execute, jobs))
    traces = {
        mode: [s.progress for s in summaries if s.mode == mode]
        for mode in config.modes
    }
    with open(out / "progress.csv", "w", encoding="utf-8") as fh:
        emit_progress_table(traces, fh)
    summary = summarize(summaries, config.modes)
    (out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n",
                                      encoding="utf-8")
    (out / "summary.txt").write_text(_summary_text(summary, config.steps),
                                     encoding="utf-8")
    (out / "config.json").write_text(json.dumps(cfg_json, indent=1) + "\n",
                                     encoding="utf-8")
    (out / "accuracy.csv").write_text(_mean_accuracy_csv(summaries,
                                                         config.modes),
                                      encoding="utf-8")
    return out


def _mean_accuracy_csv(summaries: Sequence[RunSummary],
                       modes: Sequence[str]) -> str:
    """Per mode and schema, the mean of the per-run P/R/F1 percentages."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "action", "precision", "recall", "f1"])
    for mode in modes:
        rs = [s for s in summaries if s.mode == mode]
        for schema in rs[0].accuracy:
            vals = [s.accuracy[schema] for s in rs]
            w.writerow([mode, schema] + [
                f"{sum(v[k] for v in vals) / len(vals):.1f}"
                for k in range(3)
            ])
    return buf.getvalue()
