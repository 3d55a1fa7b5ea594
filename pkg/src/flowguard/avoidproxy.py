"""Collision-avoidance proxy: decision rules and the threaded frame runtime.

The proxy sits between the operator's desired steering and the actuator.
A classification network votes left/none/right; "none" passes the desired
steering through, the override classes command full deflection. The
runtime is three stages (parse, inference, control) joined by single-slot
latest-wins mailboxes, so a slow stage drops stale frames instead of
queueing them.

Between inference updates the last decision is held (zero-order hold).
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np

from .mvcodec import MotionVectorFrame

CLASSES = ("left", "none", "right")


@dataclass(frozen=True)
class Decision:
    klass: str
    probs: Tuple[float, float, float]
    final_steer: float
    source_seq: int = 0
    inference_age_us: int = 0
    failsafe: bool = False


def decide_classification(
    probs, desired_steer: float, source_seq: int = 0, inference_age_us: int = 0
) -> Decision:
    """Map class probabilities to a steering command.

    Ties break toward the lowest index (left < none < right); left/right
    command full deflection, none passes the desired steering through.
    """
    probs = tuple(float(p) for p in probs)
    if len(probs) != 3 or not all(np.isfinite(probs)):
        raise ValueError(f"bad probability vector {probs}")
    k = int(np.argmax(probs))
    final = (0.0, float(desired_steer), 1.0)[k]
    return Decision(CLASSES[k], probs, final, source_seq, inference_age_us)


def decide_regression(
    net_output: float, source_seq: int = 0, inference_age_us: int = 0
) -> Decision:
    """Clamp a regression output into a steering command."""
    steer = min(max(float(net_output), 0.0), 1.0)
    return Decision("none", (0.0, 1.0, 0.0), steer, source_seq, inference_age_us)


def failsafe_decision(desired_steer: float, source_seq: int = 0) -> Decision:
    """Pass-through decision used when inference fails."""
    return Decision(
        "none", (0.0, 1.0, 0.0), float(desired_steer), source_seq, failsafe=True
    )


class Mailbox:
    """Single-slot buffer where a new item replaces the old one.

    put never blocks; take blocks until an item arrives or the box is
    closed (then returns None once drained).
    """

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._item = None
        self._closed = False
        self.overwrites = 0

    def put(self, item) -> None:
        with self._cond:
            if self._item is not None:
                self.overwrites += 1
            self._item = item
            self._cond.notify()

    def take(self, timeout: Optional[float] = None):
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while self._item is None and not self._closed:
                if deadline is None:
                    self._cond.wait()
                else:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0 or not self._cond.wait(remaining):
                        if self._item is None:
                            return None
            item, self._item = self._item, None
            return item

    def take_nowait(self):
        with self._cond:
            item, self._item = self._item, None
            return item

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()


@dataclass
class PipelineConfig:
    """Runtime policy: failsafe steering source and optional rate limit."""

    desired_steer: object = 0.5  # float or zero-arg callable
    inference_min_interval: float = 0.0

    def desired(self) -> float:
        d = self.desired_steer
        return float(d() if callable(d) else d)


@dataclass
class PipelineStats:
    parsed: int = 0
    inferred: int = 0
    applied: int = 0
    errors: int = 0
    duration_s: float = 0.0
    latencies_s: List[float] = field(default_factory=list)

    @property
    def skipped(self) -> int:
        return self.parsed - self.inferred

    def _rate(self, count: int) -> float:
        return count / self.duration_s if self.duration_s > 0 else 0.0

    def latency_quantiles(self) -> Tuple[float, float, float]:
        if not self.latencies_s:
            return (0.0, 0.0, 0.0)
        arr = np.asarray(self.latencies_s)
        return (
            float(np.quantile(arr, 0.5)),
            float(np.quantile(arr, 0.95)),
            float(arr.max()),
        )

    def as_kv(self) -> str:
        p50, p95, mx = self.latency_quantiles()
        pairs = [
            ("parsed", self.parsed),
            ("inferred", self.inferred),
            ("skipped", self.skipped),
            ("applied", self.applied),
            ("errors", self.errors),
            ("duration_s", f"{self.duration_s:.3f}"),
            ("parse_rate_hz", f"{self._rate(self.parsed):.2f}"),
            ("infer_rate_hz", f"{self._rate(self.inferred):.2f}"),
            ("skip_rate_hz", f"{self._rate(self.skipped):.2f}"),
            ("latency_p50_us", f"{p50 * 1e6:.0f}"),
            ("latency_p95_us", f"{p95 * 1e6:.0f}"),
            ("latency_max_us", f"{mx * 1e6:.0f}"),
        ]
        return " ".join(f"{k}={v}" for k, v in pairs)

    def as_text(self) -> str:
        p50, p95, mx = self.latency_quantiles()
        return "\n".join(
            [
                "pipeline run statistics",
                f"  frames parsed    {self.parsed} ({self._rate(self.parsed):.1f}/s)",
                f"  frames inferred  {self.inferred} ({self._rate(self.inferred):.1f}/s)",
                f"  frames skipped   {self.skipped} ({self._rate(self.skipped):.1f}/s)",
                f"  decisions applied {self.applied}",
                f"  inference errors {self.errors}",
                f"  latency p50/p95/max {p50 * 1e3:.2f}/{p95 * 1e3:.2f}/{mx * 1e3:.2f} ms",
                f"  wall time        {self.duration_s:.2f} s",
            ]
        )


def run_pipeline(
    source: Iterable[MotionVectorFrame],
    infer: Callable[[MotionVectorFrame], Decision],
    apply: Callable[[Decision], None],
    cfg: Optional[PipelineConfig] = None,
    stop: Optional[threading.Event] = None,
) -> PipelineStats:
    """Run the three-stage runtime until the source ends or stop is set.

    Parse iterates the source and never blocks on downstream; inference
    takes the newest frame (an optional minimum interval throttles it for
    tests); control applies the newest decision. An inference exception
    yields a failsafe pass-through decision and bumps the error counter.
    """
    cfg = cfg or PipelineConfig()
    stop = stop or threading.Event()
    frames: Mailbox = Mailbox()
    decisions: Mailbox = Mailbox()
    stats = PipelineStats()

    def parse_stage() -> None:
        try:
            for frame in source:
                if stop.is_set():
                    break
                frames.put((frame, time.perf_counter()))
                stats.parsed += 1
        finally:
            frames.close()

    def infer_stage() -> None:
        last = -np.inf
        try:
            while not stop.is_set():
                item = frames.take()
                if item is None:
                    break
                if cfg.inference_min_interval > 0:
                    delay = last + cfg.inference_min_interval - time.perf_counter()
                    if delay > 0:
                        time.sleep(delay)
                        fresher = frames.take_nowait()
                        if fresher is not None:
                            item = fresher
                frame, t_arr = item
                last = time.perf_counter()
                try:
                    decision = infer(frame)
                except Exception:
                    decision = failsafe_decision(cfg.desired())
                    stats.errors += 1
                stats.inferred += 1
                decision = replace(
                    decision,
                    source_seq=frame.seq,
                    inference_age_us=int((time.perf_counter() - t_arr) * 1e6),
                )
                decisions.put((decision, t_arr))
        finally:
            decisions.close()

    def control_stage() -> None:
        while True:
            item = decisions.take()
            if item is None:
                break
            decision, t_arr = item
            apply(decision)
            stats.applied += 1
            stats.latencies_s.append(time.perf_counter() - t_arr)

    t0 = time.perf_counter()
    threads = [
        threading.Thread(target=parse_stage, name="parse", daemon=True),
        threading.Thread(target=infer_stage, name="inference", daemon=True),
        threading.Thread(target=control_stage, name="control", daemon=True),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    stats.duration_s = time.perf_counter() - t0
    return stats
