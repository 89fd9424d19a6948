#!/usr/bin/env python3
"""Regenerate the frozen fixture corpus under fixtures/.

Produces three families:

  golden/   canonical encoder output for reference packets (byte-frozen)
  fk/       forward-kinematics samples per bundled chain, used to verify
            any re-implementation of FK (the browser viewer has one)
  fuzz/     decoder hardening cases with the expected error family

The files are committed; regeneration is a deliberate act. If this script
produces different bytes than what is checked in, either the codec changed
(contract break, bump the fixtures knowingly) or something regressed.

Usage: python3 tools/generate_fixtures.py [--check]
  --check   regenerate into memory and compare against the files on disk,
            exit nonzero on any difference.
"""

import argparse
import base64
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from xrteleop import protocol  # noqa: E402
from xrteleop.chain import chain_to_dict, parse_chain  # noqa: E402
from xrteleop.kinematics import forward_kinematics  # noqa: E402
from xrteleop.resources import resource_text  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

CHAINS = ("planar2", "finger1", "finger2", "hand_two_finger", "spatial3", "arm6")
SAMPLES_PER_CHAIN = 10


# --- golden packets -------------------------------------------------------------


def quarter_turn_y():
    s = float(np.sqrt(0.5))
    return (0.0, s, 0.0, s)


def build_minimal_packet():
    return protocol.TrackingPacket(timestamp=0, sequence=0, head=protocol.HeadState())


def build_partial_packet():
    """Controllers enabled with only the left present; one tracker puck."""
    left = protocol.ControllerState(
        pose=(0.25, 1.1, -0.4) + quarter_turn_y(),
        axis_x=-0.5,
        axis_y=0.25,
        axis_click=False,
        grip=0.9,
        trigger=0.3,
        primary_button=True,
        secondary_button=False,
        menu_button=False,
        side=protocol.LEFT,
    )
    tracker = protocol.MotionTrackerState(
        p=(0.0, 0.8, 0.0, 0.0, 0.0, 0.0, 1.0),
        va=(0.1, 0.0, 0.0, 0.0, 0.0, 0.5),
        wva=(0.0, -9.8, 0.0, 0.0, 0.0, 0.0),
        sn="TRK-A",
    )
    return protocol.TrackingPacket(
        timestamp=1_000_000_000,
        sequence=42,
        head=protocol.HeadState(pose=(0.0, 1.6, 0.0, 0.0, 0.0, 0.0, 1.0), status=1, hand_mode=1),
        controllers=protocol.SidePair(left=left, right=None),
        trackers=(tracker,),
    )


def build_full_packet():
    """Every section populated with deterministic, auditable values."""

    def controller(side, sign):
        return protocol.ControllerState(
            pose=(sign * 0.3, 1.2, -0.35, 0.0, 0.0, 0.0, 1.0),
            axis_x=sign * 0.5,
            axis_y=-0.125,
            axis_click=side == protocol.LEFT,
            grip=0.75,
            trigger=0.5,
            primary_button=False,
            secondary_button=True,
            menu_button=False,
            side=side,
        )

    def hand(side, sign):
        joints = tuple(
            protocol.HandJointEntry(
                pose=(sign * (0.2 + 0.001 * i), 1.0 + 0.002 * i, -0.3, 0.0, 0.0, 0.0, 1.0),
                status=3,
                radius=0.008 + 0.0001 * i,
            )
            for i in range(protocol.HAND_JOINT_COUNT)
        )
        return protocol.HandState(is_active=1, scale=1.05, joints=joints)

    body = protocol.BodyState(
        joints=tuple(
            protocol.BodyJointEntry(
                pose=(0.01 * i, 0.05 * i, -0.02 * i, 0.0, 0.0, 0.0, 1.0),
                velocity=(0.1, 0.0, 0.0, 0.0, 0.0, 0.2),
                acceleration=(0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            )
            for i in range(protocol.BODY_JOINT_COUNT)
        )
    )
    trackers = (
        protocol.MotionTrackerState(
            p=(0.5, 0.9, -0.1) + quarter_turn_y(),
            va=(0.0, 0.1, 0.0, 0.0, 0.2, 0.0),
            wva=(0.0, 0.0, 0.0, 0.1, 0.0, 0.0),
            sn="TRK-A",
        ),
        protocol.MotionTrackerState(
            p=(-0.5, 0.9, -0.1, 0.0, 0.0, 0.0, 1.0),
            va=(0.0,) * 6,
            wva=(0.0,) * 6,
            sn="TRK-B",
        ),
    )
    return protocol.TrackingPacket(
        timestamp=2_000_000_123,
        sequence=1001,
        head=protocol.HeadState(
            pose=(0.02, 1.62, -0.01) + quarter_turn_y(), status=1, hand_mode=2
        ),
        controllers=protocol.SidePair(
            left=controller(protocol.LEFT, -1.0), right=controller(protocol.RIGHT, 1.0)
        ),
        hands=protocol.SidePair(left=hand(protocol.LEFT, -1.0), right=hand(protocol.RIGHT, 1.0)),
        body=body,
        trackers=trackers,
    )


def golden_files():
    return {
        "golden/packet_minimal.json": protocol.encode_packet(build_minimal_packet()),
        "golden/packet_partial.json": protocol.encode_packet(build_partial_packet()),
        "golden/packet_full.json": protocol.encode_packet(build_full_packet()),
    }


# --- forward-kinematics corpus ---------------------------------------------------


def fk_files():
    out = {}
    for name in CHAINS:
        chain = parse_chain(resource_text(f"{name}.xml"))
        rng = np.random.default_rng(0)
        lo, hi = chain.position_limits()
        lo = np.where(np.isfinite(lo), lo, -np.pi)
        hi = np.where(np.isfinite(hi), hi, np.pi)
        samples = []
        for _ in range(SAMPLES_PER_CHAIN):
            q = rng.uniform(lo, hi)
            poses = {
                link: forward_kinematics(chain, q, link).to_pose7()
                for link in sorted(chain.links)
            }
            samples.append({"q": [float(v) for v in q], "poses": poses})
        doc = {"chain": chain_to_dict(chain), "samples": samples}
        out[f"fk/{name}.json"] = (json.dumps(doc, indent=1, allow_nan=False) + "\n").encode("utf-8")
    return out


# --- decoder hardening corpus ----------------------------------------------------


def fuzz_files():
    minimal = protocol.encode_packet(build_minimal_packet()).decode("utf-8")

    def mutate(key, value):
        obj = json.loads(minimal)
        obj[key] = value
        return json.dumps(obj, separators=(",", ":"))

    head = json.loads(minimal)["head"]
    cases = [
        {"name": "empty", "text": "", "expect": "MalformedJson"},
        {"name": "not-json", "text": "hello", "expect": "MalformedJson"},
        {"name": "truncated", "text": minimal[: len(minimal) // 2], "expect": "MalformedJson"},
        {"name": "invalid-utf8", "base64": base64.b64encode(b"\xff\xfe{}").decode(),
         "expect": "MalformedJson"},
        {"name": "nan-literal", "text": mutate("timestamp", 0).replace("0,", "NaN,", 1),
         "expect": "MalformedJson"},
        {"name": "top-level-array", "text": "[1,2,3]", "expect": "SchemaViolation"},
        {"name": "missing-head", "text": json.dumps(
            {k: v for k, v in json.loads(minimal).items() if k != "head"},
            separators=(",", ":")), "expect": "SchemaViolation"},
        {"name": "head-null", "text": mutate("head", None), "expect": "SchemaViolation"},
        {"name": "sequence-string", "text": mutate("sequence", "7"),
         "expect": "SchemaViolation"},
        {"name": "sequence-bool", "text": mutate("sequence", True),
         "expect": "SchemaViolation"},
        {"name": "negative-timestamp", "text": mutate("timestamp", -5),
         "expect": "RangeViolation"},
        {"name": "pose-arity", "text": mutate("head", {**head, "pose": [0, 0, 0, 0, 0, 1]}),
         "expect": "ArityError"},
        {"name": "pose-nan", "text": mutate(
            "head", {**head, "pose": [0, 0, "x", 0, 0, 0, 1]}), "expect": "SchemaViolation"},
        {"name": "zero-quaternion", "text": mutate(
            "head", {**head, "pose": [0, 0, 0, 0, 0, 0, 0]}), "expect": "DegenerateQuaternion"},
        {"name": "off-unit-quaternion", "text": mutate(
            "head", {**head, "pose": [0, 0, 0, 0, 0, 0, 1.01]}), "expect": "RangeViolation"},
        {"name": "bad-hand-mode", "text": mutate("head", {**head, "handMode": 5}),
         "expect": "RangeViolation"},
        {"name": "trackers-null", "text": mutate("trackers", None),
         "expect": "SchemaViolation"},
        {"name": "duplicate-tracker-sn", "text": mutate("trackers", [
            {"p": [0, 0, 0, 0, 0, 0, 1], "va": [0] * 6, "wva": [0] * 6, "sn": "A"},
            {"p": [0, 0, 0, 0, 0, 0, 1], "va": [0] * 6, "wva": [0] * 6, "sn": "A"},
        ]), "expect": "SchemaViolation"},
        {"name": "deep-nesting", "text": "[" * 4000 + "]" * 4000, "expect": "MalformedJson"},
        {"name": "huge-integer", "text": mutate("timestamp", 0).replace(
            '"timestamp":0', '"timestamp":' + "9" * 100000, 1), "expect": "MalformedJson"},
        {"name": "extra-keys-ok", "text": mutate("debug", {"ignored": [1, 2, 3]}),
         "expect": "ok"},
    ]
    return {"fuzz/cases.json": (json.dumps({"cases": cases}, indent=1) + "\n").encode("utf-8")}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--check", action="store_true", help="compare against disk, do not write")
    args = ap.parse_args()

    produced = {}
    produced.update(golden_files())
    produced.update(fk_files())
    produced.update(fuzz_files())

    stale = []
    for rel, data in sorted(produced.items()):
        path = FIXTURES / rel
        if args.check:
            if not path.exists() or path.read_bytes() != data:
                stale.append(rel)
            continue
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        print(f"wrote {path.relative_to(FIXTURES.parent)} ({len(data)} bytes)")

    if args.check:
        if stale:
            print("stale fixtures:", *stale, sep="\n  ")
            return 1
        print(f"all {len(produced)} fixtures up to date")
    return 0


if __name__ == "__main__":
    sys.exit(main())
