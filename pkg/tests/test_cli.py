"""Command-line interface tests: parsing, offline replay, live capture, bench."""

import itertools
import json
import socket
import threading
import time

import pytest

from xrteleop import cli, scripted
from xrteleop.streaming import Publisher, StreamConfig, load_session, save_session


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def short_session():
    return scripted.smooth_line_session(distance=0.05, duration_s=0.6, hold_s=0.3)


@pytest.fixture
def session_file(tmp_path):
    path = tmp_path / "session.jsonl"
    save_session(short_session().packets, path, metadata={"kind": "line"})
    return path


# --- parsing -------------------------------------------------------------------


class TestParser:
    def test_every_subcommand_parses(self):
        parser = cli.build_parser()
        parser.parse_args(["serve", "--config", "cfg.yaml"])
        parser.parse_args(["replay", "s.jsonl", "--config", "cfg.yaml", "--seed", "3"])
        parser.parse_args(["record", "--out", "o.jsonl", "--source", "h:1"])
        parser.parse_args(["bench-latency", "--emulate", "uniform:2:12", "--drop", "0.1"])

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args([])

    def test_malformed_source_address_rejected(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["record", "--out", "o", "--source", "nocolon"])

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.build_parser().parse_args(["--version"])
        assert exc.value.code == 0
        assert "xrteleop" in capsys.readouterr().out

    def test_emulation_flags_build_the_model(self):
        args = cli.build_parser().parse_args(
            ["replay", "s", "--config", "c", "--emulate", "uniform:2:12", "--drop", "0.2", "--seed", "9"]
        )
        emu = cli._emulation_from_args(args)
        assert emu.delay_ms == (2.0, 12.0)
        assert emu.drop_probability == 0.2 and emu.seed == 9

    def test_drop_alone_implies_zero_delay_model(self):
        args = cli.build_parser().parse_args(["replay", "s", "--config", "c", "--drop", "0.3"])
        emu = cli._emulation_from_args(args)
        assert emu.delay_ms == (0.0, 0.0) and emu.drop_probability == 0.3

    def test_no_emulation_flags_mean_no_model(self):
        args = cli.build_parser().parse_args(["replay", "s", "--config", "c"])
        assert cli._emulation_from_args(args) is None


# --- replay ----------------------------------------------------------------------


class TestReplay:
    def test_replay_runs_and_summarizes(self, session_file, capsys):
        code = cli.main(["replay", str(session_file), "--config", "right_arm"])
        assert code == 0
        out = capsys.readouterr().out
        assert "ticks" in out and "arm6" in out

    def test_replayed_traces_are_byte_identical(self, session_file, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        for path in (a, b):
            assert cli.main(
                ["replay", str(session_file), "--config", "right_arm",
                 "--trace", str(path), "--emulate", "uniform:2:12", "--drop", "0.2", "--seed", "7"]
            ) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.stat().st_size > 0

    def test_replay_writes_episode_file(self, session_file, tmp_path):
        episode = tmp_path / "episode.jsonl"
        assert cli.main(
            ["replay", str(session_file), "--config", "right_arm", "--episode", str(episode)]
        ) == 0
        header = json.loads(episode.read_bytes().splitlines()[0])
        assert header["format"] == "episode"
        assert header["rate_hz"] == 50.0

    def test_missing_session_file_is_a_clean_error(self, capsys):
        code = cli.main(["replay", "/nonexistent/session.jsonl", "--config", "right_arm"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_config_is_a_clean_error(self, session_file, capsys):
        code = cli.main(["replay", str(session_file), "--config", "no_such_config"])
        assert code == 1
        assert "no_such_config" in capsys.readouterr().err


# --- record ----------------------------------------------------------------------


class TestRecord:
    def test_record_captures_monotone_session(self, tmp_path):
        out = tmp_path / "captured.jsonl"
        packets = itertools.cycle(short_session().packets)
        with Publisher(packets, StreamConfig(port=0, rate_hz=200.0)) as publisher:
            host, port = publisher.address
            code = cli.main(
                ["record", "--out", str(out), "--source", f"{host}:{port}",
                 "--max-packets", "25", "--duration", "10"]
            )
        assert code == 0
        metadata, captured = load_session(out)
        assert len(captured) >= 25
        sequences = [p.sequence for p in captured]
        assert sequences == sorted(sequences)
        assert "recorded_at_ns" in metadata

    def test_record_without_publisher_reports_failure(self, tmp_path, capsys):
        out = tmp_path / "none.jsonl"
        code = cli.main(
            ["record", "--out", str(out), "--source", f"127.0.0.1:{free_port()}",
             "--duration", "0.4"]
        )
        assert code == 1
        assert not out.exists()


# --- bench-latency -----------------------------------------------------------------


class TestBenchLatency:
    def test_loopback_report_prints_all_fields(self, capsys):
        assert cli.main(["bench-latency", "--duration", "0.8", "--rate", "120"]) == 0
        out = capsys.readouterr().out
        for field in ("samples:", "mean:", "std:", "p99:", "loss:"):
            assert field in out
        mean_ms = float(out.split("mean:")[1].split("ms")[0])
        assert 0.0 <= mean_ms < 50.0

    def test_emulated_delay_shows_up_in_the_report(self, capsys):
        assert cli.main(
            ["bench-latency", "--duration", "0.8", "--emulate", "constant:25",
             "--drop", "0.1", "--seed", "2"]
        ) == 0
        out = capsys.readouterr().out
        mean_ms = float(out.split("mean:")[1].split("ms")[0])
        loss = float(out.split("loss:")[1].split("%")[0])
        assert mean_ms >= 25.0
        assert loss > 0.0


# --- serve -----------------------------------------------------------------------


class TestServe:
    def test_serve_accepts_clients_and_taps_the_session(self, tmp_path, capsys):
        from websockets.sync.client import connect

        from xrteleop.protocol import encode_packet

        port = free_port()
        tap = tmp_path / "tap.jsonl"
        outcome = {}

        def run():
            outcome["code"] = cli.main(
                ["serve", "--config", "right_arm", "--port", str(port),
                 "--duration", "2.0", "--record-session", str(tap)]
            )

        thread = threading.Thread(target=run)
        thread.start()
        time.sleep(0.7)

        frames = []
        with connect(f"ws://127.0.0.1:{port}") as conn:
            for packet in short_session().packets[:30]:
                conn.send(encode_packet(packet).decode())
                try:
                    frames.append(conn.recv(timeout=0.0))
                except TimeoutError:
                    pass
                time.sleep(1.0 / 90.0)
        thread.join(timeout=5.0)

        assert outcome["code"] == 0
        assert len(frames) > 5
        last = json.loads(frames[-1])
        assert set(last) == {"t", "chains", "base", "gimbal", "grippers"}
        lines = tap.read_bytes().splitlines()
        assert json.loads(lines[0])["format"] == "tracking_session"
        assert len(lines) == 1 + 30
