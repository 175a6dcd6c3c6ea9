from __future__ import annotations

import asyncio
import threading
import time

from dnlsist.services import workers


class _FakePsutil:
    def __init__(self, physical: int | None, logical: int | None) -> None:
        self.physical = physical
        self.logical = logical

    def cpu_count(self, logical: bool = True) -> int | None:
        return self.logical if logical else self.physical


def test_default_thread_count_prefers_physical_cores(monkeypatch) -> None:
    monkeypatch.setattr(workers, "psutil", _FakePsutil(physical=4, logical=8))

    assert workers.default_thread_count() == 4


def test_default_thread_count_falls_back(monkeypatch) -> None:
    monkeypatch.setattr(workers, "psutil", _FakePsutil(physical=None, logical=6))
    assert workers.default_thread_count() == 6

    monkeypatch.setattr(workers, "psutil", _FakePsutil(physical=None, logical=None))
    assert workers.default_thread_count() == 1


def test_parallel_map_keeps_input_order() -> None:
    def slow_square(n: int) -> int:
        time.sleep(0.001 * (10 - n))
        return n * n

    assert workers.parallel_map(slow_square, range(10), threads=4) == [n * n for n in range(10)]


def test_single_thread_runs_in_the_caller() -> None:
    caller = threading.get_ident()

    seen = workers.parallel_map(lambda _: threading.get_ident(), range(5), threads=1)

    assert set(seen) == {caller}


def test_parallel_map_uses_the_detected_count(monkeypatch) -> None:
    monkeypatch.setattr(workers, "psutil", _FakePsutil(physical=1, logical=1))
    caller = threading.get_ident()

    seen = workers.parallel_map(lambda _: threading.get_ident(), range(3))

    assert set(seen) == {caller}


def test_chunked_covers_the_range_without_gaps() -> None:
    parts = workers.chunked(10, 3)

    assert [(s.start, s.stop) for s in parts] == [(0, 3), (3, 7), (7, 10)]
    assert workers.chunked(2, 8) == [slice(0, 1), slice(1, 2)]
    assert workers.chunked(5, 0) == [slice(0, 5)]


def test_parallel_map_inside_a_running_event_loop() -> None:
    async def caller() -> list[int]:
        return workers.parallel_map(lambda n: n * n, range(8), threads=2)

    assert asyncio.run(caller()) == [n * n for n in range(8)]
