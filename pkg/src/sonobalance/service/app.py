"""Gateway HTTP/WebSocket surface.

All sway math happens in the engine; this layer only translates between
HTTP and engine calls. Commands that the state machine forbids come back
as 409 with the reason in the detail string. Telemetry is one JSON text
frame per sway sample on ``/ws/telemetry``.
"""

from __future__ import annotations

import asyncio
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse

from ..geometry import EmptyCalibration
from ..metrics import MissingCondition
from .engine import EngineBusy, LiveEngine
from .models import (
    BaselineModel,
    CalibrateRequest,
    DispersionResponse,
    ReportResponse,
    StateResponse,
    StopResponse,
    TrialStartRequest,
    TrialStartResponse,
    TrialSummary,
    VolumeRequest,
    VolumeResponse,
)

__all__ = ["create_app"]


def create_app(engine: LiveEngine, console_dir: str | None = None) -> FastAPI:
    """Build the gateway app; optionally serve the operator console statics.

    ``console_dir`` points at a built frontend (index.html + dist/); it is
    mounted read-only under ``/console``.
    """
    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        engine.shutdown()

    app = FastAPI(title="sonobalance gateway", version="0.1.0", lifespan=lifespan)
    app.state.engine = engine

    if console_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    @app.post("/calibrate", response_model=BaselineModel)
    def calibrate(request: CalibrateRequest) -> BaselineModel:
        try:
            baseline = engine.calibrate(window=request.window_s)
        except EngineBusy as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except EmptyCalibration as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        return BaselineModel(x0=baseline.x0, y0=baseline.y0,
                             window=baseline.window, n_samples=baseline.n_samples)

    @app.post("/trial/start", response_model=TrialStartResponse)
    def trial_start(request: TrialStartRequest) -> TrialStartResponse:
        try:
            info = engine.start_trial(
                request.condition.to_condition(), request.abf_on, request.duration_s
            )
        except EngineBusy as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return TrialStartResponse(**info)

    @app.post("/trial/stop", response_model=StopResponse)
    def trial_stop() -> StopResponse:
        stopped = engine.stop_trial()
        return StopResponse(stopped=stopped, state=engine.state.value)

    @app.put("/volume", response_model=VolumeResponse)
    def set_volume(request: VolumeRequest) -> VolumeResponse:
        return VolumeResponse(reference_volume=engine.set_volume(request.reference_volume))

    @app.get("/state", response_model=StateResponse)
    def state() -> StateResponse:
        return StateResponse(**engine.snapshot())

    @app.get("/trials", response_model=list[TrialSummary])
    def trials() -> list[TrialSummary]:
        return [TrialSummary(**t) for t in engine.trials()]

    @app.get("/report")
    def report(format: str = "json"):
        try:
            table = engine.report()
        except MissingCondition as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if format == "csv":
            return PlainTextResponse(table.to_csv(), media_type="text/csv")
        return ReportResponse(**table.to_json_dict())

    @app.get("/dispersion/{trial_id}", response_model=DispersionResponse)
    def dispersion(trial_id: str) -> DispersionResponse:
        payload = engine.dispersion(trial_id)
        if payload is None:
            raise HTTPException(status_code=404, detail=f"unknown trial {trial_id!r}")
        return DispersionResponse(**payload)

    @app.websocket("/ws/telemetry")
    async def telemetry(websocket: WebSocket) -> None:
        await websocket.accept()
        loop = asyncio.get_running_loop()
        token, queue = engine.hub.subscribe(loop)
        try:
            while True:
                frame = await queue.get()
                await websocket.send_json(frame)
        except WebSocketDisconnect:
            pass
        finally:
            engine.hub.unsubscribe(token)

    return app
