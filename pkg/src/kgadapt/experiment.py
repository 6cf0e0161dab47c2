"""Seed x learning-rate experiment grids and the inference speed benchmark."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field


@dataclass
class GridResult:
    runs: list[dict] = field(default_factory=list)
    mean_metric: float = 0.0
    best_run: dict | None = None

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "mean_metric": self.mean_metric,
            "best_run": self.best_run,
        }


def run_grid(run_fn, seeds, learning_rates) -> GridResult:
    """Run ``run_fn(seed, lr) -> {"metric": float, ...}`` over the grid.

    Reports per-run values, the arithmetic mean, and the best run (kept
    for distillation). A failing cell aborts with its coordinates.
    """
    seeds, learning_rates = list(seeds), list(learning_rates)
    if not seeds or not learning_rates:
        raise ValueError("grid must contain at least one (seed, lr) cell")
    runs = []
    for seed in seeds:
        for lr in learning_rates:
            try:
                result = run_fn(seed, lr)
            except Exception as exc:
                raise RuntimeError(
                    f"grid cell (seed={seed}, lr={lr}) failed: {exc}") from exc
            runs.append({"seed": seed, "lr": lr, **result})
    mean_metric = sum(r["metric"] for r in runs) / len(runs)
    best_run = max(runs, key=lambda r: r["metric"])
    return GridResult(runs=runs, mean_metric=mean_metric, best_run=best_run)


def _median_per_example(infer_one, examples, repetitions: int) -> float:
    times = []
    for _ in range(repetitions):
        start = time.perf_counter()
        for example in examples:
            infer_one(example)
        times.append((time.perf_counter() - start) / len(examples))
    return statistics.median(times)


def speed_benchmark(teacher_infer_one, student_infer_one, examples,
                    repetitions: int = 5) -> dict:
    """Median wall-clock per example, batch size 1, single thread.

    ``*_infer_one`` take a single example and return its prediction.
    """
    import torch
    if not examples:
        raise ValueError("empty benchmark evaluation set")
    torch.set_num_threads(1)
    teacher_t = _median_per_example(teacher_infer_one, examples, repetitions)
    student_t = _median_per_example(student_infer_one, examples, repetitions)
    return {
        "teacher_per_example_s": teacher_t,
        "student_per_example_s": student_t,
        "speedup": teacher_t / student_t,
        "repetitions": repetitions,
    }
