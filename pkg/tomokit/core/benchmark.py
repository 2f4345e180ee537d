"""
Benchmark — MLE versus adversarial reconstruction on one noisy scenario,
repeated over seeded runs, with fidelity curves aligned on a common epoch axis.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tomokit.config import BenchmarkConfig
from tomokit.core.gan import gan_reconstruct
from tomokit.core.measurement import expectation, husimi_operators
from tomokit.core.mle import mle_reconstruct
from tomokit.core.noise import mix_with_random
from tomokit.core.states import StateLabel
from tomokit.errors import TomokitError
from tomokit.utils.io import fmt, write_csv, write_json
from tomokit.utils.parallel import parallel_map
from tomokit.utils.rng import derive_seed

METHODS = ("mle", "gan")
CSV_FILE = "benchmark.csv"
REPORT_FILE = "report.json"
TIMINGS_FILE = "timings.json"


@dataclass(eq=False)
class BenchmarkReport:
    scenario: dict
    epochs: list
    methods: dict
    timings: dict = field(default_factory=dict)

    def to_dict(self):
        """Deterministic report; wall times live in `timings`."""
        return {"scenario": self.scenario, "epochs": self.epochs, "methods": self.methods}


def epoch_axis(epochs, record_every):
    axis = list(range(0, epochs + 1, record_every))
    if axis[-1] != epochs:
        axis.append(epochs)
    return axis


def align_history(history, axis):
    """Value at each axis epoch, carrying the last record forward."""
    if not history:
        return [float("nan")] * len(axis)
    epochs = np.array([e for e, _ in history])
    values = np.array([v for _, v in history], dtype=float)
    idx = np.searchsorted(epochs, axis, side="right") - 1
    idx = np.clip(idx, 0, len(values) - 1)
    return values[idx].tolist()


def scenario_data(cfg, run):
    """(noisy reference state, exact Husimi expectations, measurement set) for one run."""
    label = StateLabel(family=cfg.family, params=cfg.params)
    truth = label.build(cfg.dim)
    noisy = mix_with_random(truth, cfg.zeta, derive_seed(cfg.seed, run, 0))
    mset = husimi_operators(cfg.dim, cfg.grid.xgrid(), cfg.grid.pgrid())
    return noisy, expectation(noisy, mset), mset


def _run_one(cfg, method, run):
    run_seed = derive_seed(cfg.seed, run)
    try:
        reference, data, mset = scenario_data(cfg, run)
        if method == "mle":
            solver_cfg = cfg.mle.model_copy(update={
                "max_epochs": cfg.epochs, "record_every": cfg.record_every, "seed": run_seed,
            })
            result = mle_reconstruct(data, mset, solver_cfg, reference=reference)
        else:
            solver_cfg = cfg.gan.model_copy(update={
                "epochs": cfg.epochs, "record_every": cfg.record_every, "seed": run_seed,
            })
            result = gan_reconstruct(data, mset, solver_cfg, reference=reference)
    except TomokitError as exc:
        return {"method": method, "run": run, "error": type(exc).__name__, "message": str(exc)}
    return {"method": method, "run": run, "result": result}


def _summarize(outcomes, axis, threshold):
    curves = [align_history(o["result"].fidelity_history, axis) for o in outcomes if "result" in o]
    failures = [
        {"run": o["run"], "error": o["error"], "message": o["message"]}
        for o in outcomes if "error" in o
    ]
    summary = {"runs_completed": len(curves), "failures": failures}
    if not curves:
        summary.update({"mean": [], "std": [], "final_mean": None, "final_std": None, "epochs_to_threshold": None})
        return summary

    stack = np.array(curves)
    mean, std = stack.mean(axis=0), stack.std(axis=0)
    reached = np.nonzero(mean >= threshold)[0]
    summary.update({
        "mean": mean.tolist(),
        "std": std.tolist(),
        "final_mean": float(mean[-1]),
        "final_std": float(std[-1]),
        "epochs_to_threshold": int(axis[reached[0]]) if reached.size else None,
        "best_epochs": [o["result"].best_epoch for o in outcomes if "result" in o],
    })
    return summary


def run_benchmark(cfg=None, workers=None):
    """Run every (method, run) pair; failed runs are reported, not raised."""
    cfg = cfg or BenchmarkConfig()
    axis = epoch_axis(cfg.epochs, cfg.record_every)
    pairs = [(method, run) for method in METHODS for run in range(cfg.runs)]
    outcomes = parallel_map(lambda pair: _run_one(cfg, *pair), pairs, workers=workers)

    methods, timings = {}, {}
    for method in METHODS:
        mine = [o for o in outcomes if o["method"] == method]
        methods[method] = _summarize(mine, axis, cfg.threshold)
        timings[method] = [o["result"].wall_time for o in mine if "result" in o]

    scenario = {
        "family": cfg.family,
        "params": cfg.params,
        "dim": cfg.dim,
        "zeta": cfg.zeta,
        "runs": cfg.runs,
        "epochs": cfg.epochs,
        "record_every": cfg.record_every,
        "seed": cfg.seed,
        "threshold": cfg.threshold,
        "grid": cfg.grid.model_dump(mode="json"),
        "data": "exact Husimi expectations of the mixed state",
    }
    return BenchmarkReport(scenario=scenario, epochs=axis, methods=methods, timings=timings)


def benchmark_rows(report):
    rows = []
    for i, epoch in enumerate(report.epochs):
        row = [epoch]
        for method in METHODS:
            summary = report.methods[method]
            if summary["mean"]:
                row.extend([fmt(summary["mean"][i]), fmt(summary["std"][i])])
            else:
                row.extend(["", ""])
        rows.append(row)
    return rows


def write_benchmark(report, out_dir):
    out_dir = Path(out_dir)
    header = ["epoch"] + [f"{m}_{stat}" for m in METHODS for stat in ("mean", "std")]
    write_csv(out_dir / CSV_FILE, header, benchmark_rows(report))
    write_json(out_dir / REPORT_FILE, report.to_dict())
    write_json(out_dir / TIMINGS_FILE, report.timings)
