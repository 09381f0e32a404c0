"""Show how the deadline bounds a concurrent fan-out over uneven backends.

Run with:  python3 demos/gateway_deadline.py

Five mock backends answer with very different latencies and one always
fails.  The fan-out queries all of them in parallel and returns within
the deadline plus a small scheduling allowance, reporting slow backends
as timeouts instead of waiting for them.  Tightening the deadline trades
candidate coverage for latency; the session layer simply presents
whatever arrived in time.
"""

import time

from quizcraft.domain import ModelDescriptor
from quizcraft.gateway import GenerationRequest, fan_out

BACKENDS = [
    ModelDescriptor("instant", "mock://template", "Instant"),
    ModelDescriptor("quick", "mock://fixed?text=A+quick+question%3F&delay_ms=30", "Quick"),
    ModelDescriptor("medium", "mock://fixed?text=A+medium+question%3F&delay_ms=90", "Medium"),
    ModelDescriptor("slow", "mock://fixed?text=A+slow+question%3F&delay_ms=400", "Slow"),
    ModelDescriptor("glacial", "mock://fixed?text=Too+late%3F&delay_ms=2000", "Glacial"),
    ModelDescriptor("broken", "mock://fail?message=model+crashed", "Broken"),
]

REQUEST = GenerationRequest(
    context="The Statue of Liberty was dedicated in 1886.",
    answer="1886",
    max_new_tokens=30,
    request_id="demo-1",
)


def main() -> None:
    for deadline_ms in (500, 150, 50):
        begin = time.perf_counter()
        results = fan_out(BACKENDS, REQUEST, deadline_ms=deadline_ms)
        wall_ms = (time.perf_counter() - begin) * 1000.0
        usable = sum(r.is_ok() for r in results)
        print(f"deadline {deadline_ms}ms  wall {wall_ms:6.1f}ms  usable {usable}/{len(results)}")
        for r in results:
            detail = r.question if r.is_ok() else (r.message or r.outcome.value)
            print(f"  {r.model_id:8s} {r.outcome.value:8s} {r.latency_ms:4d}ms  {detail}")
        print()


if __name__ == "__main__":
    main()
