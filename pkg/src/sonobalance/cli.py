"""Command-line interface.

``serve`` runs the engine behind the HTTP/WebSocket gateway; ``calibrate``,
``trial``, ``protocol``, ``volume`` and ``report`` are thin clients against
a running gateway. ``trial`` and ``protocol`` can also run ``--headless``
(engine in-process, no gateway), and ``render``/``analyze`` work purely on
local files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .config import AppConfig, load_config
from .geometry import SwayPoint, calibrate as calibrate_samples
from .ingest import (
    DropoutPolicy,
    Regularizer,
    ReplaySource,
    SourceConfig,
    SourceKind,
)
from .metrics import GroupReport, metrics_from_points
from .session import (
    ALL_CONDITIONS,
    Condition,
    Eyes,
    Group,
    Surface,
    run_protocol,
    run_trial,
    simulated_source_factory,
)
from .simulate import run_virtual_subject
from .store import TrialStore, report_from_store
from .synth.renderer import render_trial, timeline_to_json, write_wav

DEFAULT_URL = "http://127.0.0.1:8787"
DEFAULT_STORE = "trials"


def _die(message: str, code: int = 2):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(code)


def _parse_host_port(text: str, default_port: int = 8787) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host:
        return text, default_port
    return host, int(port)


def _apply_sim_overrides(args, cfg: AppConfig) -> None:
    if getattr(args, "seed", None) is not None:
        cfg.sim.seed = args.seed
    if getattr(args, "gains", None):
        from .geometry import WarningLevel

        try:
            low, med, high = (float(v) for v in args.gains.split(","))
        except ValueError:
            _die(f"--gains expects three comma-separated numbers, got {args.gains!r}")
        cfg.sim.feedback_gain = {
            WarningLevel.LOW: low, WarningLevel.MEDIUM: med, WarningLevel.HIGH: high,
        }


def _condition_from_args(args) -> Condition:
    return Condition(eyes=Eyes(args.eyes), surface=Surface(args.surface))


def _print_metrics(record) -> None:
    m = record.metrics
    occupancy = ", ".join(f"{k}={v:.3f}" for k, v in m.region_occupancy.items() if v > 0)
    status = "aborted" if record.aborted else "complete"
    print(f"trial {record.trial_id} [{status}] {record.condition.label} "
          f"abf={'on' if record.abf_on else 'off'}")
    print(f"  samples={m.n}  R={m.r:.4f} deg  V={m.v:.6f} deg^2")
    print(f"  occupancy: {occupancy}")


def _print_report(report: GroupReport) -> None:
    cols = report.group_order + ["overall"]
    header = "condition".ljust(14) + "".join(f"{g + ' P_R':>14}{g + ' P_V':>14}" for g in cols)
    print(header)
    for cond in report.condition_order:
        row = cond.ljust(14)
        for g in cols:
            p_r, p_v = report.cells[cond][g]
            row += f"{p_r:>14.2f}{p_v:>14.2f}"
        print(row)


# --------------------------------------------------------------------- serve

def cmd_serve(args) -> int:
    import uvicorn

    from .service import LiveEngine, create_app

    cfg = load_config(args.config)
    _apply_sim_overrides(args, cfg)
    source = _source_config_from_args(args, cfg, serving=True)
    engine = LiveEngine(
        source,
        args.store,
        render_config=cfg.render,
        sim_config=cfg.sim,
        subject_id=args.subject,
        group=Group(args.group),
        rate=args.rate if args.rate is not None else cfg.ingest_rate,
        audio=args.audio,
    )
    app = create_app(engine, console_dir=args.console)
    host, port = _parse_host_port(args.http)
    print(f"gateway on http://{host}:{port}  (source: {source.kind.value}, "
          f"store: {args.store})")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def _source_config_from_args(args, cfg: AppConfig, serving: bool = False) -> SourceConfig:
    rate = args.rate if args.rate is not None else cfg.ingest_rate
    realtime = args.realtime if serving else getattr(args, "realtime", False)
    if getattr(args, "replay", None):
        return SourceConfig(kind=SourceKind.REPLAY, path=args.replay,
                            sample_rate=rate, dropout_policy=cfg.dropout_policy,
                            realtime=realtime)
    if getattr(args, "listen", None):
        return SourceConfig(kind=SourceKind.UDP, address=_parse_host_port(args.listen, 9870),
                            sample_rate=rate, dropout_policy=cfg.dropout_policy)
    return SourceConfig(kind=SourceKind.SIM, sample_rate=rate,
                        dropout_policy=cfg.dropout_policy, realtime=realtime,
                        sim_seed=cfg.sim.seed)


# ------------------------------------------------------------- thin clients

def _client(args) -> httpx.Client:
    return httpx.Client(base_url=args.url, timeout=30.0)


def _checked(response: httpx.Response) -> dict:
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        _die(f"gateway returned {response.status_code}: {detail}")
    return response.json()


def cmd_calibrate(args) -> int:
    with _client(args) as client:
        data = _checked(client.post("/calibrate", json={"window_s": args.window}))
    print(f"baseline: x0={data['x0']:.4f} y0={data['y0']:.4f} "
          f"({data['n_samples']} samples over {data['window']} s)")
    return 0


def cmd_volume(args) -> int:
    with _client(args) as client:
        data = _checked(client.put("/volume", json={"reference_volume": args.value}))
    print(f"reference_volume: {data['reference_volume']}")
    return 0


def _wait_for_idle(client: httpx.Client, poll_s: float = 0.25) -> dict:
    import time

    while True:
        state = _checked(client.get("/state"))
        if state["state"] == "idle":
            return state
        trial = state.get("trial") or {}
        seen = trial.get("samples_seen", 0)
        print(f"\r  samples: {seen}", end="", flush=True)
        time.sleep(poll_s)


def cmd_trial(args) -> int:
    if args.headless:
        return _trial_headless(args)
    condition = _condition_from_args(args)
    payload = {
        "condition": {"eyes": condition.eyes.value, "surface": condition.surface.value},
        "abf_on": args.abf,
        "duration_s": args.duration,
    }
    with _client(args) as client:
        _checked(client.post("/trial/start", json=payload))
        print(f"trial started: {condition.label} abf={'on' if args.abf else 'off'}")
        state = _wait_for_idle(client)
        print()
        if state.get("last_error"):
            _die(f"trial failed: {state['last_error']}")
        trials = _checked(client.get("/trials"))
    if trials:
        last = trials[-1]
        print(f"done: R={last['metrics']['r']:.4f} V={last['metrics']['v']:.6f} "
              f"({last['n_samples']} samples)")
    return 0


def _trial_headless(args) -> int:
    cfg = load_config(args.config)
    _apply_sim_overrides(args, cfg)
    condition = _condition_from_args(args)
    if args.replay:
        source = ReplaySource(args.replay, realtime=args.realtime)
    else:
        source = simulated_source_factory(cfg.sim, rate=cfg.ingest_rate)(condition, args.abf)
    try:
        record = run_trial(
            source, condition, args.abf,
            self_calibrate=True,
            calibration_window=cfg.calibration_window,
            duration=args.duration,
            rate=cfg.ingest_rate,
            policy=cfg.dropout_policy,
            subject_id=args.subject,
            group=Group(args.group),
        )
    finally:
        source.close()
    if args.store:
        TrialStore(args.store).append(record)
        print(f"stored in {args.store}/{record.subject_id}.jsonl")
    _print_metrics(record)
    return 0


def cmd_protocol(args) -> int:
    if args.headless:
        return _protocol_headless(args)
    with _client(args) as client:
        for condition in ALL_CONDITIONS:
            if not args.yes:
                answer = input(f"set up condition '{condition.label}' and press enter "
                               f"(or type 'q' to stop): ")
                if answer.strip().lower().startswith("q"):
                    print("protocol stopped")
                    return 1
            for abf_on in (False, True):
                payload = {
                    "condition": {"eyes": condition.eyes.value,
                                  "surface": condition.surface.value},
                    "abf_on": abf_on,
                    "duration_s": args.duration,
                }
                _checked(client.post("/trial/start", json=payload))
                print(f"{condition.label} abf={'on' if abf_on else 'off'} ...")
                state = _wait_for_idle(client)
                print()
                if state.get("last_error"):
                    _die(f"trial failed: {state['last_error']}")
        report = _checked(client.get("/report"))
    print("protocol complete; report:")
    _print_report(GroupReport(
        condition_order=report["conditions"],
        group_order=[g for g in report["groups"] if g != "overall"],
        cells={c: {g: (cell["p_r"], cell["p_v"]) for g, cell in by_group.items()}
               for c, by_group in report["cells"].items()},
    ))
    return 0


def _protocol_headless(args) -> int:
    cfg = load_config(args.config)
    _apply_sim_overrides(args, cfg)
    if args.replay:
        def factory(condition, abf_on):
            return ReplaySource(args.replay, realtime=args.realtime)
    else:
        factory = simulated_source_factory(cfg.sim, rate=cfg.ingest_rate)

    def confirm(condition: Condition) -> bool:
        if args.yes:
            return True
        answer = input(f"set up condition '{condition.label}' and press enter "
                       f"(or type 'q' to stop): ")
        return not answer.strip().lower().startswith("q")

    store = TrialStore(args.store) if args.store else None
    result = run_protocol(
        args.subject,
        factory,
        group=Group(args.group),
        order=args.order,
        shuffle_seed=args.shuffle_seed,
        duration=args.duration,
        rate=cfg.ingest_rate,
        policy=cfg.dropout_policy,
        calibration_window=cfg.calibration_window,
        confirm=confirm,
        store=store,
        resume=args.resume,
    )
    print(f"{len(result.records)} trials run; complete={result.complete}")
    for label, imp in result.improvements.items():
        print(f"  {label}: P_R={imp.p_r:.2f}%  P_V={imp.p_v:.2f}%")
    if store is not None and result.complete:
        _print_report(report_from_store(store))
    return 0 if result.complete else 1


# -------------------------------------------------------------- local files

def cmd_report(args) -> int:
    if args.url:
        with _client(args) as client:
            if args.format == "csv":
                response = client.get("/report", params={"format": "csv"})
                if response.status_code >= 400:
                    _die(f"gateway returned {response.status_code}: {response.text}")
                text = response.text
            else:
                text = json.dumps(_checked(client.get("/report")), indent=2)
    else:
        report = report_from_store(TrialStore(args.store))
        text = report.to_csv() if args.format == "csv" else json.dumps(
            report.to_json_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="" if text.endswith("\n") else "\n")
    return 0


def _points_from_replay(path: str, rate: float, window: float,
                        policy: DropoutPolicy) -> list[SwayPoint]:
    samples = list(Regularizer(ReplaySource(path).samples(), rate, policy))
    if not samples:
        _die(f"no samples in {path}")
    n_cal = min(len(samples), int(round(window * rate)))
    baseline = calibrate_samples(samples[:n_cal], window=window)
    trial = samples[n_cal:] or samples
    t0 = trial[0].t
    return [SwayPoint(t=s.t - t0, x=s.pitch - baseline.x0, y=s.roll - baseline.y0)
            for s in trial]


def _points_from_sim(args, cfg: AppConfig) -> list[SwayPoint]:
    condition = _condition_from_args(args)
    run = run_virtual_subject(
        cfg.sim,
        eyes_closed=condition.eyes is Eyes.CLOSED,
        on_foam=condition.surface is Surface.FOAM,
        abf_on=args.abf,
        duration=args.duration,
        rate=cfg.ingest_rate,
        calibration_window=cfg.calibration_window,
    )
    return [SwayPoint(t=s.t, x=s.pitch - run.baseline.x0, y=s.roll - run.baseline.y0)
            for s in run.samples]


def cmd_render(args) -> int:
    cfg = load_config(args.config)
    _apply_sim_overrides(args, cfg)
    if args.rng_seed is not None:
        cfg.render.rng_seed = args.rng_seed
    if args.sample_rate is not None:
        cfg.render.sample_rate = args.sample_rate
    if args.reference_volume is not None:
        cfg.render.reference_volume = args.reference_volume
    if args.block_size is not None:
        cfg.render.block_size = args.block_size
    if args.crossfade is not None:
        cfg.render.crossfade = args.crossfade
    if args.param_smoothing is not None:
        cfg.render.param_smoothing = args.param_smoothing

    if args.replay:
        points = _points_from_replay(args.replay, cfg.ingest_rate,
                                     cfg.calibration_window, cfg.dropout_policy)
    else:
        points = _points_from_sim(args, cfg)

    buffer, timeline = render_trial(points, cfg.render, rate=cfg.ingest_rate)
    write_wav(args.out, buffer, cfg.render.sample_rate, args.bit_depth)
    timeline_path = args.timeline or str(Path(args.out).with_suffix(".timeline.json"))
    Path(timeline_path).write_text(timeline_to_json(timeline), encoding="utf-8")
    peak = float(abs(buffer).max()) if buffer.size else 0.0
    print(f"wrote {args.out} ({buffer.shape[0]} frames at {cfg.render.sample_rate} Hz, "
          f"peak {peak:.3f}) and {timeline_path} ({len(timeline)} parameter changes)")
    return 0


def cmd_analyze(args) -> int:
    if args.replay:
        cfg = load_config(args.config)
        points = _points_from_replay(args.replay, cfg.ingest_rate,
                                     cfg.calibration_window, cfg.dropout_policy)
        metrics = metrics_from_points(points)
        payload = {"source": args.replay, "n": metrics.n, "r": metrics.r, "v": metrics.v,
                   "region_occupancy": metrics.region_occupancy}
        print(json.dumps(payload, indent=2))
        return 0

    store = TrialStore(args.store)
    records = (store.load_subject(args.subject) if args.subject
               else list(store.load_all()))
    if args.trial:
        records = [r for r in records if r.trial_id == args.trial]
        if not records:
            _die(f"trial {args.trial!r} not found in {args.store}")
    failed = 0
    for record in records:
        recomputed = metrics_from_points(record.samples)
        ok = recomputed == record.metrics
        failed += 0 if ok else 1
        flag = "ok" if ok else "MISMATCH"
        print(f"{record.trial_id}  {record.condition.label:<13} "
              f"abf={'on ' if record.abf_on else 'off'}  R={recomputed.r:9.4f}  "
              f"V={recomputed.v:10.6f}  [{flag}]")
    if failed:
        _die(f"{failed} record(s) failed metric recomputation", code=1)
    return 0


# --------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sonobalance",
        description="Audio-biofeedback balance engine and gateway",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="INI config file")

    def add_url(p):
        p.add_argument("--url", default=DEFAULT_URL, help=f"gateway URL (default {DEFAULT_URL})")

    def add_source(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--sim", action="store_true", help="simulated subject (default)")
        group.add_argument("--replay", metavar="CSV", help="replay a t_s,pitch_deg,roll_deg file")
        group.add_argument("--listen", metavar="HOST:PORT", help="listen for UDP datagrams")
        pace = p.add_mutually_exclusive_group()
        pace.add_argument("--realtime", action="store_true", default=False,
                          help="pace samples against the wall clock")
        pace.add_argument("--fast", dest="realtime", action="store_false",
                          help="stream as fast as possible (default)")
        p.add_argument("--rate", type=float, default=None, help="sample rate, Hz (default 50)")
        p.add_argument("--seed", type=int, default=None, help="simulator seed")
        p.add_argument("--gains", metavar="LOW,MED,HIGH", default=None,
                       help="simulator feedback gains per warning level, e.g. 0.3,0.5,0.7")

    def add_condition(p):
        p.add_argument("--eyes", choices=["open", "closed"], default="open")
        p.add_argument("--surface", choices=["floor", "foam"], default="floor")

    def add_subject(p):
        p.add_argument("--subject", default="anonymous")
        p.add_argument("--group", choices=[g.value for g in Group],
                       default=Group.UNSPECIFIED.value)

    p = sub.add_parser("serve", help="run the engine behind the HTTP/WebSocket gateway")
    p.add_argument("--http", default="127.0.0.1:8787", help="bind address (host:port)")
    p.add_argument("--store", default=DEFAULT_STORE, help="trial store directory")
    p.add_argument("--audio", action="store_true", help="play warning audio on the default device")
    p.add_argument("--console", default=None, metavar="DIR",
                   help="serve a built operator console from DIR under /console")
    add_source(p)
    add_subject(p)
    add_config(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("calibrate", help="capture the natural-stance baseline (via gateway)")
    p.add_argument("--window", type=float, default=5.0, help="calibration window, seconds")
    add_url(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("volume", help="set the reference volume (via gateway)")
    p.add_argument("value", type=float, help="linear gain in (0, 1]")
    add_url(p)
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("trial", help="run one trial (gateway client, or --headless)")
    p.add_argument("--headless", action="store_true", help="run in-process without the gateway")
    p.add_argument("--abf", dest="abf", action="store_true", default=False,
                   help="audio feedback on")
    p.add_argument("--no-abf", dest="abf", action="store_false")
    p.add_argument("--duration", type=float, default=60.0, help="trial length, seconds")
    p.add_argument("--store", default=None, help="store directory (headless only)")
    add_condition(p)
    add_subject(p)
    add_source(p)
    add_url(p)
    add_config(p)
    p.set_defaults(func=cmd_trial)

    p = sub.add_parser("protocol", help="run the full 4x2 protocol")
    p.add_argument("--headless", action="store_true", help="run in-process without the gateway")
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--order", choices=["fixed", "shuffled"], default="fixed")
    p.add_argument("--shuffle-seed", type=int, default=None)
    p.add_argument("--resume", action="store_true", help="skip cells already in the store")
    p.add_argument("--store", default=DEFAULT_STORE)
    p.add_argument("--yes", action="store_true", help="skip condition confirmations")
    add_condition(p)
    add_subject(p)
    add_source(p)
    add_url(p)
    add_config(p)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("report", help="median improvement table (store or gateway)")
    p.add_argument("--store", default=DEFAULT_STORE)
    p.add_argument("--url", default=None, help="fetch from a gateway instead of a store")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=None, help="write to a file instead of stdout")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("render", help="render warning audio offline to a WAV file")
    p.add_argument("--out", required=True, help="output WAV path")
    p.add_argument("--timeline", default=None, help="parameter timeline JSON path")
    p.add_argument("--bit-depth", choices=["float32", "int16"], default="float32")
    p.add_argument("--duration", type=float, default=60.0, help="sim duration, seconds")
    p.add_argument("--abf", action="store_true", default=True,
                   help="simulate with feedback responses (default)")
    p.add_argument("--no-abf", dest="abf", action="store_false")
    p.add_argument("--sample-rate", type=int, default=None)
    p.add_argument("--reference-volume", type=float, default=None)
    p.add_argument("--rng-seed", type=int, default=None, help="renderer noise seed")
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--crossfade", type=float, default=None, help="region crossfade, seconds")
    p.add_argument("--param-smoothing", type=float, default=None,
                   help="gain/pan smoothing, seconds")
    add_condition(p)
    add_source(p)
    add_config(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("analyze", help="recompute metrics from stored trials or a replay file")
    p.add_argument("--store", default=DEFAULT_STORE)
    p.add_argument("--subject", default=None)
    p.add_argument("--trial", default=None, help="restrict to one trial id")
    p.add_argument("--replay", default=None, help="analyze a replay CSV instead of the store")
    add_config(p)
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("\ninterrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
