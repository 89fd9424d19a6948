"""Operational entry point: serve, replay, record, bench-latency.

Everything the library can do offline is reachable here for quick studies:
run the live loop for a browser or robot client, re-run a recorded tracking
session deterministically, capture a session off the wire, or characterize
transport latency with optional network emulation.
"""

from __future__ import annotations

import argparse
import http.server
import json
import logging
import sys
import threading
import time
from functools import partial

from . import __version__
from .chain import chain_to_dict
from .errors import XrTeleopError
from .simrobot import (
    NetworkEmulation,
    TeleopService,
    parse_emulation,
    run_session,
    save_state_trace,
)
from .streaming import (
    LatencySample,
    Publisher,
    StreamConfig,
    Subscriber,
    measure_latency,
    save_episode,
    save_session,
    load_session,
)
from .teleop import load_config
from .timing import now_ns

logger = logging.getLogger(__name__)


def _resolve_config(ref: str):
    """--config takes a file path or the name of a bundled mapping config."""
    import pathlib

    from . import resources

    if pathlib.Path(ref).exists():
        return load_config(ref)
    name = ref if ref.endswith(".yaml") else ref + ".yaml"
    path = resources.resource_path(name)
    if path.exists():
        return load_config(path)
    raise FileNotFoundError(f"no config file or bundled config named {ref!r}")


def _emulation_from_args(args) -> NetworkEmulation | None:
    if args.emulate is None and not args.drop:
        return None
    spec = args.emulate if args.emulate is not None else "constant:0"
    return parse_emulation(spec, drop=args.drop, seed=args.seed)


def _add_emulation_flags(parser):
    parser.add_argument("--emulate", metavar="SPEC", default=None,
                        help="delay model: constant:<ms> or uniform:<lo>:<hi>")
    parser.add_argument("--drop", type=float, default=0.0,
                        help="packet drop probability in [0, 1)")
    parser.add_argument("--seed", type=int, default=0, help="emulation RNG seed")


# --- serve ----------------------------------------------------------------------


class _UiHandler(http.server.SimpleHTTPRequestHandler):
    """Static files plus /chains.json describing the simulated robot."""

    def __init__(self, *a, chains_payload: bytes = b"{}", **kw):
        self._chains_payload = chains_payload
        super().__init__(*a, **kw)

    def do_GET(self):
        if self.path.split("?")[0] == "/chains.json":
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(self._chains_payload)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(self._chains_payload)
            return
        super().do_GET()

    def log_message(self, fmt, *args):
        logger.debug("ui: " + fmt, *args)


def _start_ui_server(directory: str, port: int, service: TeleopService):
    host, ws_port = service.address
    payload = json.dumps(
        {
            "ws_url": f"ws://{host}:{ws_port}",
            "rate_hz": service.rate_hz,
            "chains": {cid: chain_to_dict(ch) for cid, ch in sorted(service.chains.items())},
        },
        separators=(",", ":"),
        allow_nan=False,  # browsers parse this; Infinity/NaN literals are not JSON
    ).encode("utf-8")
    handler = partial(_UiHandler, directory=directory, chains_payload=payload)
    httpd = http.server.ThreadingHTTPServer(("127.0.0.1", port), handler)
    thread = threading.Thread(target=httpd.serve_forever, name="ui-http", daemon=True)
    thread.start()
    return httpd


def cmd_serve(args) -> int:
    cfg = _resolve_config(args.config)
    service = TeleopService(
        cfg,
        host=args.host,
        port=args.port,
        rate_hz=args.rate,
        session_path=args.record_session,
    )
    host, port = service.address
    print(f"teleop service on ws://{host}:{port} at {args.rate:g} Hz")

    upstream = None
    if args.tracking:
        upstream = Subscriber(
            args.tracking,
            on_packet=service.submit,
            on_error=lambda exc: logger.warning("upstream decode error: %s", exc),
            transport=args.transport,
        )
        print(f"subscribing to tracking publisher at "
              f"{args.tracking[0]}:{args.tracking[1]} ({args.transport})")

    state_publisher = None
    if args.state_port is not None:
        def state_frames():
            while True:
                yield service.state_frame()

        state_publisher = Publisher(
            state_frames(),
            StreamConfig(host=args.host, port=args.state_port, rate_hz=args.rate),
            stamp=False,
        )
        print(f"state frames on tcp://{args.host}:{state_publisher.address[1]}")

    ui_server = None
    if args.ui:
        ui_server = _start_ui_server(args.ui, args.ui_port, service)
        print(f"ui on http://127.0.0.1:{ui_server.server_address[1]}")

    try:
        if args.duration is not None:
            time.sleep(args.duration)
        else:
            while True:
                time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        if ui_server:
            ui_server.shutdown()
        if upstream:
            upstream.stop()
        if state_publisher:
            state_publisher.stop()
        service.stop()
    print(f"served {service.ticks} ticks, {service.packets_in} packets in")
    return 0


# --- replay ----------------------------------------------------------------------


def cmd_replay(args) -> int:
    cfg = _resolve_config(args.config)
    metadata, packets = load_session(args.session)
    if metadata:
        logger.info("session metadata: %s", metadata)
    emulation = _emulation_from_args(args)
    result = run_session(
        packets,
        cfg,
        rate_hz=args.rate,
        emulation=emulation,
        record_rate_hz=args.record_rate if args.episode else None,
    )

    acted = [s for s in result.consumed if s is not None]
    print(f"replayed {len(packets)} packets -> {len(result.states)} ticks "
          f"({len(set(acted))} distinct packets acted on)")
    final = result.states[-1]
    for cid in sorted(final.configurations):
        q = ", ".join(f"{v:+.4f}" for v in final.configurations[cid])
        print(f"  {cid}: [{q}]")
    x, y, heading = final.base
    print(f"  base: x={x:+.4f} y={y:+.4f} heading={heading:+.4f}")

    if args.trace:
        save_state_trace(result.states, args.trace)
        print(f"trace -> {args.trace}")
    if args.episode:
        save_episode(result.episode, args.episode)
        print(f"episode ({len(result.episode.frames)} frames at "
              f"{result.episode.rate_hz:g} Hz) -> {args.episode}")
    return 0


# --- record ----------------------------------------------------------------------


def cmd_record(args) -> int:
    packets = []
    done = threading.Event()

    def on_packet(packet):
        packets.append(packet)
        if args.max_packets and len(packets) >= args.max_packets:
            done.set()

    subscriber = Subscriber(
        args.source,
        on_packet=on_packet,
        on_error=lambda exc: logger.warning("decode error: %s", exc),
        transport=args.transport,
    )
    try:
        done.wait(timeout=args.duration)
    except KeyboardInterrupt:
        pass
    finally:
        subscriber.stop()
    if not packets:
        print("no packets received", file=sys.stderr)
        return 1
    save_session(packets, args.out, metadata={"recorded_at_ns": now_ns()})
    print(f"{len(packets)} packets -> {args.out}")
    return 0


# --- bench-latency -----------------------------------------------------------------


def _synthetic_packets():
    from .protocol import HeadState, TrackingPacket

    while True:
        yield TrackingPacket(timestamp=0, sequence=0, head=HeadState())


def bench_latency(rate_hz: float, duration_s: float, emulation: NetworkEmulation | None,
                  port: int = 0):
    """Loopback publisher -> subscriber latency window, optionally emulated.

    Real wire, real clocks: each sample is receive-time minus the packet's
    stamped send-time on the same host. The emulation model is then applied
    to the measured window (added delay, dropped samples) so transport
    studies stay reproducible.
    """
    samples = []

    def on_packet(packet):
        samples.append(
            LatencySample(sent_ns=packet.timestamp, received_ns=now_ns(),
                          sequence=packet.sequence)
        )

    publisher = Publisher(
        _synthetic_packets(), StreamConfig(port=port, rate_hz=rate_hz)
    )
    subscriber = Subscriber(publisher.address, on_packet=on_packet)
    time.sleep(duration_s)
    subscriber.stop()
    publisher.stop()

    if emulation is not None:
        rng = emulation.rng()
        emulated = []
        for sample in samples:
            dropped = emulation.draw_drop(rng)
            delay = emulation.draw_delay_ns(rng)
            if dropped:
                continue
            emulated.append(
                LatencySample(sample.sent_ns, sample.received_ns + delay, sample.sequence)
            )
        samples = emulated
    return measure_latency(samples)


def cmd_bench(args) -> int:
    emulation = _emulation_from_args(args)
    report = bench_latency(args.rate, args.duration, emulation, port=args.port)
    print(f"samples:  {report.samples}")
    print(f"mean:     {report.mean_ms:.3f} ms")
    print(f"std:      {report.std_ms:.3f} ms")
    print(f"p99:      {report.p99_ms:.3f} ms")
    print(f"loss:     {report.loss_fraction * 100.0:.1f}%")
    return 0


# --- argument plumbing ----------------------------------------------------------------


def _parse_address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"address must be host:port, got {text!r}")
    return host, int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xrteleop",
        description="Hardware-free XR teleoperation loop: serve, replay, record, bench.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the live teleop loop over websocket")
    serve.add_argument("--config", required=True, help="teleop mapping config (YAML)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765, help="websocket port (0 = ephemeral)")
    serve.add_argument("--rate", type=float, default=90.0, help="control/publish rate Hz")
    serve.add_argument("--record-session", metavar="FILE", default=None,
                       help="lossless tap of every received packet")
    serve.add_argument("--tracking", metavar="HOST:PORT", type=_parse_address, default=None,
                       help="subscribe to an upstream tracking publisher")
    serve.add_argument("--transport", choices=("tcp_framed", "websocket"),
                       default="tcp_framed", help="upstream transport")
    serve.add_argument("--state-port", type=int, default=None,
                       help="also publish state frames on framed TCP")
    serve.add_argument("--ui", metavar="DIR", default=None,
                       help="serve a static UI directory over HTTP")
    serve.add_argument("--ui-port", type=int, default=8080)
    serve.add_argument("--duration", type=float, default=None,
                       help="stop after N seconds (default: run until interrupted)")
    serve.set_defaults(func=cmd_serve)

    replay = sub.add_parser("replay", help="re-run a recorded tracking session offline")
    replay.add_argument("session", help="session file from record/--record-session")
    replay.add_argument("--config", required=True)
    replay.add_argument("--rate", type=float, default=90.0)
    replay.add_argument("--trace", metavar="FILE", default=None,
                        help="write the per-tick state trace (JSONL)")
    replay.add_argument("--episode", metavar="FILE", default=None,
                        help="record an episode file from the run")
    replay.add_argument("--record-rate", type=float, default=50.0,
                        help="episode sampling rate Hz")
    _add_emulation_flags(replay)
    replay.set_defaults(func=cmd_replay)

    record = sub.add_parser("record", help="capture tracking packets to a session file")
    record.add_argument("--out", required=True)
    record.add_argument("--source", required=True, metavar="HOST:PORT", type=_parse_address,
                        help="tracking publisher address")
    record.add_argument("--transport", choices=("tcp_framed", "websocket"),
                        default="tcp_framed")
    record.add_argument("--duration", type=float, default=5.0)
    record.add_argument("--max-packets", type=int, default=None)
    record.set_defaults(func=cmd_record)

    bench = sub.add_parser("bench-latency", help="loopback transport latency study")
    bench.add_argument("--rate", type=float, default=90.0)
    bench.add_argument("--duration", type=float, default=2.0)
    bench.add_argument("--port", type=int, default=0)
    _add_emulation_flags(bench)
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except XrTeleopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
