"""WebSocket session service: one live session per service instance.

Clients connect to /ws and speak the JSON contract:

  outbound  {"type": "hello", ...}        once, on connect
            {"type": "state", ...}        at the engine rate while running
            {"type": "summary", ...}      when the session completes
            {"type": "error", "message"}  malformed input or session faults
  inbound   {"type": "intent", "u": f, "v": f}
            {"type": "control", "action": "start" | "abort" | "next_mode"}

The session loop runs in a worker thread; the socket layer only ever reads
immutable snapshots, so a slow or absent client never stalls the loop.
"""

from __future__ import annotations

import asyncio
import json
import threading
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .errors import AbortedSessionError, CortexLoopError
from .session import SessionConfig, SessionRunner
from .subject import Scenario


class SessionService:
    """Lobby plus at most one running session; thread-safe fan-out to clients."""

    def __init__(
        self,
        scenario: Scenario,
        test_modes: tuple[str, ...] = ("horizontal1D",),
        source: str = "surrogate",
        robot_endpoint: tuple[str, int] | None = None,
        out_dir: Path | None = None,
        ridge_lambda: float = 0.0,
    ):
        self.scenario = scenario
        self.test_modes = test_modes
        self.source = source
        self.robot_endpoint = robot_endpoint
        self.out_dir = out_dir
        self.ridge_lambda = ridge_lambda
        self.phase = "lobby"
        self.runner: SessionRunner | None = None
        self._thread: threading.Thread | None = None
        self._clients: dict[asyncio.Queue, asyncio.AbstractEventLoop] = {}
        self._lock = threading.Lock()
        self.last_summary: dict | None = None

    # --- client fan-out -------------------------------------------------------

    def attach(self, queue: asyncio.Queue, loop: asyncio.AbstractEventLoop) -> None:
        with self._lock:
            self._clients[queue] = loop

    def detach(self, queue: asyncio.Queue) -> None:
        with self._lock:
            self._clients.pop(queue, None)

    def broadcast(self, message: dict) -> None:
        with self._lock:
            clients = list(self._clients.items())
        for queue, loop in clients:
            def push(q=queue, m=message):
                if q.full():
                    try:
                        q.get_nowait()  # drop the oldest state, never block the loop
                    except asyncio.QueueEmpty:
                        pass
                q.put_nowait(m)
            loop.call_soon_threadsafe(push)

    # --- session lifecycle ------------------------------------------------------

    def hello(self) -> dict:
        return {
            "type": "hello",
            "phase": self.phase,
            "modes": list(self.test_modes),
            "summary": self.last_summary,
        }

    def start(self) -> dict | None:
        with self._lock:
            if self._thread is not None:
                return {"type": "error", "message": "session already started"}
            config = SessionConfig(
                scenario=self.scenario,
                test_modes=self.test_modes,
                clock="realtime",
                source=self.source,
                robot_endpoint=self.robot_endpoint,
                out_dir=self.out_dir,
                ridge_lambda=self.ridge_lambda,
            )
            try:
                self.runner = SessionRunner(config, observer=self._on_state)
            except CortexLoopError as exc:
                return {"type": "error", "message": str(exc)}
            self.phase = "running"
            self._thread = threading.Thread(target=self._run, daemon=True)
            self._thread.start()
        return None

    def _run(self) -> None:
        try:
            result = self.runner.run()
            self.last_summary = result.summary
            self.phase = "done"
            self.broadcast({"type": "summary", "summary": result.summary})
        except AbortedSessionError as exc:
            self.phase = "aborted"
            self.broadcast({"type": "error", "message": f"session aborted: {exc}"})
        except CortexLoopError as exc:
            self.phase = "failed"
            self.broadcast({"type": "error", "message": str(exc)})

    def _on_state(self, state: dict) -> None:
        self.broadcast(state)

    def handle_inbound(self, text: str) -> dict | None:
        """Apply one client message; returns a reply for protocol errors only."""
        try:
            message = json.loads(text)
        except json.JSONDecodeError:
            return {"type": "error", "message": "not valid JSON"}
        if not isinstance(message, dict):
            return {"type": "error", "message": "message must be a JSON object"}
        kind = message.get("type")
        if kind == "intent":
            try:
                u, v = float(message["u"]), float(message["v"])
            except (KeyError, TypeError, ValueError):
                return {"type": "error", "message": "intent needs numeric u and v"}
            if self.runner is not None:
                self.runner.submit_intent(u, v)
            return None
        if kind == "control":
            action = message.get("action")
            if action == "start":
                return self.start()
            if self.runner is None:
                return {"type": "error", "message": "no session running"}
            if action == "abort":
                self.runner.request_abort()
                return None
            if action == "next_mode":
                self.runner.request_next_mode()
                return None
            return {"type": "error", "message": f"unknown control action {action!r}"}
        return {"type": "error", "message": f"unknown message type {kind!r}"}


def make_app(service: SessionService, static_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="cortexloop session service")
    app.state.service = service

    @app.get("/healthz")
    def healthz():
        return {"phase": service.phase}

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        loop = asyncio.get_running_loop()
        queue: asyncio.Queue = asyncio.Queue(maxsize=64)
        service.attach(queue, loop)
        await websocket.send_json(service.hello())

        async def pump():
            while True:
                message = await queue.get()
                await websocket.send_json(message)

        sender = asyncio.create_task(pump())
        try:
            while True:
                text = await websocket.receive_text()
                reply = service.handle_inbound(text)
                if reply is not None:
                    await websocket.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            service.detach(queue)
            sender.cancel()

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")
    return app
