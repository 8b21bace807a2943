#!/usr/bin/env python3
"""Record gateway fixtures for the frontend contract tests.

Runs a scripted 8-trial protocol against a simulated subject through the
real HTTP/WebSocket surface and snapshots the payloads the console
consumes: telemetry frames, the trial list after every trial (the grid
script), the final report, a dispersion dataset and a state snapshot.

Usage: python scripts/record_fixtures.py [output_dir]
"""

import json
import sys
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from sonobalance.ingest import SourceConfig, SourceKind
from sonobalance.service import LiveEngine, create_app
from sonobalance.simulate import SimConfig
from sonobalance.synth.params import RenderConfig

OUT = Path(sys.argv[1] if len(sys.argv) > 1 else "frontend/fixtures")
TRIAL_S = 2.0  # 100 samples per trial keeps fixtures small


def wait_idle(client):
    while client.get("/state").json()["state"] != "idle":
        time.sleep(0.01)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as store_dir:
        engine = LiveEngine(
            SourceConfig(kind=SourceKind.SIM, sample_rate=50.0, sim_seed=7),
            store_dir,
            render_config=RenderConfig(rng_seed=7),
            sim_config=SimConfig(seed=7),
            subject_id="fixture",
        )
        with TestClient(create_app(engine)) as client:
            client.post("/calibrate", json={"window_s": 1.0})

            # telemetry frames for one feedback-on trial
            frames = []
            with client.websocket_connect("/ws/telemetry") as ws:
                client.post("/trial/start", json={
                    "condition": {"eyes": "open", "surface": "floor"},
                    "abf_on": True, "duration_s": TRIAL_S,
                })
                while True:
                    frame = ws.receive_json()
                    frames.append(frame)
                    if frame["trial"] and frame["trial"]["samples_seen"] >= TRIAL_S * 50:
                        break
            wait_idle(client)
            (OUT / "telemetry_frames.json").write_text(json.dumps(frames, indent=1))

            # the remaining 7 cells of the protocol, snapshotting /trials
            # after each so the grid progression can be replayed
            trials_script = [client.get("/trials").json()]
            remaining = [("floor", "open", False)] + [
                (surface, eyes, abf)
                for surface in ("floor", "foam")
                for eyes in ("open", "closed")
                for abf in (False, True)
                if not (surface == "floor" and eyes == "open")
            ]
            for surface, eyes, abf_on in remaining:
                client.post("/trial/start", json={
                    "condition": {"eyes": eyes, "surface": surface},
                    "abf_on": abf_on, "duration_s": TRIAL_S,
                })
                wait_idle(client)
                trials_script.append(client.get("/trials").json())
            (OUT / "trials_scripted_protocol.json").write_text(
                json.dumps(trials_script, indent=1))

            report = client.get("/report").json()
            (OUT / "report.json").write_text(json.dumps(report, indent=1))

            first_trial = trials_script[-1][0]["trial_id"]
            dispersion = client.get(f"/dispersion/{first_trial}").json()
            (OUT / "dispersion.json").write_text(json.dumps(dispersion, indent=1))

            state = client.get("/state").json()
            (OUT / "state.json").write_text(json.dumps(state, indent=1))

        engine.shutdown()
    print(f"fixtures written to {OUT}/")


if __name__ == "__main__":
    main()
