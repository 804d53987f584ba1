"""Benchmark sweeps: hidden-layer width vs training effort, subject count vs accuracy.

Both report measurements only; nothing here asserts a trend.
"""
from __future__ import annotations

import time
from dataclasses import replace

from .corpus import face_corpus
from .neural import GOAL_REACHED
from .plots import format_csv
from .recognizer import PipelineConfig, evaluate, train_pipeline


def hidden_sweep(hidden_sizes=(5, 10, 20, 40), subjects: int = 10,
                 config: PipelineConfig = PipelineConfig(), seed: int = 0):
    """Rows of (hidden, epochs, seconds, final_mse, goal_reached)."""
    corpus = face_corpus(subjects=subjects, seed=seed)
    rows = []
    for hidden in hidden_sizes:
        cfg = replace(config, hidden=hidden)
        t0 = time.perf_counter()
        _, curve = train_pipeline(corpus.train, cfg, corpus.validation, strict=False)
        elapsed = time.perf_counter() - t0
        rows.append((hidden, curve.epochs, elapsed, curve.mse[-1],
                     int(curve.stop_reason == GOAL_REACHED)))
    return rows


def subject_sweep(subject_counts=(5, 10, 15, 20), config: PipelineConfig = PipelineConfig(),
                  seed: int = 0, gate: bool = False):
    """Rows of (subjects, probes, accuracy, epochs, goal_reached)."""
    rows = []
    for n in subject_counts:
        corpus = face_corpus(subjects=n, seed=seed)
        model, curve = train_pipeline(corpus.train, config, corpus.validation, strict=False)
        report = evaluate(model, corpus.probes, gate_enabled=gate)
        rows.append((n, len(corpus.probes), report.accuracy, curve.epochs,
                     int(curve.stop_reason == GOAL_REACHED)))
    return rows


def hidden_csv(rows) -> str:
    return format_csv(["hidden", "epochs", "seconds", "final_mse", "goal_reached"], rows)


def subject_csv(rows) -> str:
    return format_csv(["subjects", "probes", "accuracy", "epochs", "goal_reached"], rows)
