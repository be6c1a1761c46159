"""Sweep diagnostics: clamp counts, boundary evaluations and timing."""

from __future__ import annotations

import time


class SweepStats:
    """Track per-sweep interpolation clamps, boundary evaluations and time."""

    def __init__(self) -> None:
        self._start_time = time.monotonic()
        self._sweeps = 0
        self._total_clamps = 0
        self._total_boundary = 0
        self._sweep_clamps = 0
        self._sweep_boundary = 0
        self._sweep_started = self._start_time
        self._last_sweep_seconds = 0.0

    def begin_sweep(self) -> None:
        self._sweep_clamps = 0
        self._sweep_boundary = 0
        self._sweep_started = time.monotonic()

    def end_sweep(self) -> None:
        self._sweeps += 1
        self._last_sweep_seconds = time.monotonic() - self._sweep_started

    def record_clamps(self, count: int) -> None:
        self._sweep_clamps += count
        self._total_clamps += count

    def record_boundary(self, count: int = 1) -> None:
        self._sweep_boundary += count
        self._total_boundary += count

    @property
    def sweep_clamps(self) -> int:
        return self._sweep_clamps

    @property
    def total_clamps(self) -> int:
        return self._total_clamps

    def summary(self) -> dict:
        elapsed = time.monotonic() - self._start_time
        return {
            "sweeps": self._sweeps,
            "total_clamped_lookups": self._total_clamps,
            "last_sweep_clamped_lookups": self._sweep_clamps,
            "total_boundary_evaluations": self._total_boundary,
            "last_sweep_boundary_evaluations": self._sweep_boundary,
            "last_sweep_seconds": round(self._last_sweep_seconds, 3),
            "elapsed_seconds": round(elapsed, 1),
        }
