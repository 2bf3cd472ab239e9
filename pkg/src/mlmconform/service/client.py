from __future__ import annotations

from collections.abc import Iterator

import httpx

from ..engine import Verdict
from ..eventlog.model import Trace
from ..wire import WireError, trace_to_wire, verdict_from_wire


class RemoteError(RuntimeError):
    pass


class RemoteEvaluator:
    """Evokes rules through a rule server; plugs into check_trace/check_log.

    With ``batch=False`` one /evoke call is made per event whose name has
    subscribers, mirroring a per-event server round trip. Events without
    subscribers are skipped client-side since they cannot yield verdicts.
    """

    def __init__(self, client: httpx.Client, batch: bool = True):
        self.client = client
        self.batch = batch
        self._subscriptions: frozenset[str] | None = None

    def _post(self, path: str, payload: dict) -> dict:
        resp = self.client.post(path, json=payload)
        if resp.status_code != 200:
            raise RemoteError(f"{path} returned {resp.status_code}: {resp.text[:200]}")
        return resp.json()

    def _verdicts(self, raw) -> list[Verdict]:
        try:
            return [verdict_from_wire(v) for v in raw]
        except WireError as exc:
            raise RemoteError(str(exc)) from None

    @property
    def subscriptions(self) -> frozenset[str]:
        if self._subscriptions is None:
            resp = self.client.get("/model")
            resp.raise_for_status()
            self._subscriptions = frozenset(resp.json()["subscriptions"])
        return self._subscriptions

    def __call__(self, trace: Trace) -> Iterator[list[Verdict]]:
        wire = trace_to_wire(trace)
        if self.batch:
            rows = self._post("/evoke_batch", {"trace": wire})["verdicts"]
            if len(rows) != len(trace.events):
                raise RemoteError("batch response does not cover every event")
            yield from (self._verdicts(r) for r in rows)
            return
        subs = self.subscriptions
        for i, event in enumerate(trace.events):
            if event.name not in subs:
                yield []
                continue
            yield self._verdicts(self._post("/evoke", {"trace": wire, "event": i})["verdicts"])
