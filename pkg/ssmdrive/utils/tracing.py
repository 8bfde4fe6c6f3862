"""
Stage profiling on OpenTelemetry spans.

Model code wraps each runtime stage in ``stage(name)``. Nothing is recorded
until ``install_profiler`` puts a TracerProvider in place; its exporter then
accumulates wall time per span name.
"""

import json
import logging
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from typing import Any

from opentelemetry import trace
from opentelemetry.sdk.trace import ReadableSpan, TracerProvider
from opentelemetry.sdk.trace.export import SimpleSpanProcessor, SpanExporter, SpanExportResult

STAGES = (
    "backbone",
    "depth prediction",
    "bidirectional serialization",
    "view correspondence learning",
    "long-term temporal fusion",
    "task relation modeling",
    "task head inference",
    "temporal memory propagation",
)

_provider: TracerProvider | None = None
_noop = trace.NoOpTracer()


class StageTimingSpanExporter(SpanExporter):
    """
    A span exporter that keeps, per span name, the summed wall time and the
    number of finished spans instead of shipping spans anywhere.
    """

    def __init__(self, debug: bool = False) -> None:
        self.debug = debug
        self.totals: dict[str, float] = {}
        self.calls: dict[str, int] = {}

    def export(self, spans: Sequence[ReadableSpan]) -> SpanExportResult:
        for span in spans:
            if span.start_time is None or span.end_time is None:
                continue
            seconds = (span.end_time - span.start_time) / 1e9
            self.totals[span.name] = self.totals.get(span.name, 0.0) + seconds
            self.calls[span.name] = self.calls.get(span.name, 0) + 1
            if self.debug:
                logging.debug(json.dumps({"stage": span.name, "seconds": seconds}))
        return SpanExportResult.SUCCESS

    def shutdown(self) -> None:
        return None

    def reset(self) -> None:
        self.totals.clear()
        self.calls.clear()

    def report(self) -> dict[str, Any]:
        """Per-stage totals in milliseconds plus their share of the summed stage time."""
        overall = sum(self.totals.values()) or 1.0
        stages = {}
        for name in [*STAGES, *sorted(set(self.totals) - set(STAGES))]:
            total = self.totals.get(name, 0.0)
            stages[name] = {
                "total_ms": 1000.0 * total,
                "calls": self.calls.get(name, 0),
                "share": total / overall,
            }
        return {"stages": stages, "total_ms": 1000.0 * sum(self.totals.values())}


def install_profiler(exporter: StageTimingSpanExporter | None = None) -> StageTimingSpanExporter:
    """Start recording stage spans into ``exporter``."""
    global _provider
    exporter = exporter or StageTimingSpanExporter()
    provider = TracerProvider()
    provider.add_span_processor(SimpleSpanProcessor(exporter))
    _provider = provider
    return exporter


def uninstall_profiler() -> None:
    global _provider
    if _provider is not None:
        _provider.shutdown()
    _provider = None


def tracer() -> trace.Tracer:
    if _provider is None:
        return _noop
    return _provider.get_tracer("ssmdrive")


@contextmanager
def stage(name: str) -> Iterator[None]:
    with tracer().start_as_current_span(name):
        yield
