#!/usr/bin/env python3
"""Decodes testdata/frames/*.bin from the byte layout alone and compares every
field against index.json."""

import json
import struct
import sys
from pathlib import Path

MSG_TYPES = {1: "DATA", 2: "SUBSCRIBE", 3: "UNSUBSCRIBE", 4: "PING", 5: "PONG"}


def decode_header(raw):
    if len(raw) < 32:
        raise ValueError("short frame")
    magic, version, msg, core, filt, t, kind, length = struct.unpack(">4sBBQIQHI", raw[:32])
    if magic != b"CCX1":
        raise ValueError("magic")
    if len(raw) != 32 + length:
        raise ValueError("payload_len %d vs %d bytes" % (length, len(raw) - 32))
    return {
        "version": version,
        "msg_type": MSG_TYPES[msg],
        "core": core,
        "filter": filt,
        "t": t,
        "payload_kind": kind,
        "payload_len": length,
    }, raw[32:]


def decode_payload(kind, p):
    if kind == 1:
        w, h, c = struct.unpack(">HHB", p[:5])
        assert len(p) == 5 + w * h * c
        return {"width": w, "height": h, "channels": c, "pixels_hex": p[5:].hex()}
    if kind == 2:
        x, y, th = struct.unpack(">ddd", p)
        return {"x": x, "y": y, "theta": th}
    if kind == 3:
        (n,) = struct.unpack(">I", p[:4])
        assert len(p) == 4 + 4 * n
        return {"ranges": list(struct.unpack(">%df" % n, p[4:]))}
    if kind == 4:
        w, h, cs = struct.unpack(">HHf", p[:8])
        assert len(p) == 8 + w * h
        return {"width": w, "height": h, "cell_size": cs, "cells_hex": p[8:].hex()}
    if kind == 5:
        (n,) = struct.unpack(">I", p[:4])
        assert len(p) == 4 + n
        return {"fields": json.loads(p[4:].decode("utf-8"))}
    if kind == 6:
        (n,) = struct.unpack(">I", p[:4])
        assert len(p) == 4 + 8 * n
        return {"values": list(struct.unpack(">%dd" % n, p[4:]))}
    if kind == 7:
        (n,) = struct.unpack(">I", p[:4])
        assert len(p) == 4 + 24 * n
        pts = []
        for i in range(n):
            x, y, t = struct.unpack(">ddQ", p[4 + 24 * i : 28 + 24 * i])
            pts.append({"x": x, "y": y, "t": t})
        return {"points": pts}
    raise ValueError("payload kind %d" % kind)


def main():
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[2] / "testdata" / "frames"
    index = json.loads((root / "index.json").read_text())
    failures = 0
    for entry in index:
        raw = (root / entry["file"]).read_bytes()
        header, payload = decode_header(raw)
        problems = []
        if len(raw) != entry["size"]:
            problems.append("size")
        for field, value in header.items():
            if entry[field] != value:
                problems.append("%s: %r != %r" % (field, value, entry[field]))
        if payload.hex() != entry["payload_hex"]:
            problems.append("payload bytes")
        expected = entry["decoded"]
        if not payload and expected is None:
            pass
        elif header["msg_type"] in ("SUBSCRIBE", "UNSUBSCRIBE") and header["payload_kind"] == 0:
            (sub,) = struct.unpack(">Q", payload)
            if sub != expected["subscriber"]:
                problems.append("subscriber")
        elif header["payload_kind"] != 0:
            decoded = decode_payload(header["payload_kind"], payload)
            if decoded != expected:
                problems.append("decoded %r != %r" % (decoded, expected))
        else:
            problems.append("unexpected payload")
        status = "ok" if not problems else "FAIL " + "; ".join(problems)
        print("%-22s %s" % (entry["file"], status))
        failures += bool(problems)
    print("%d frames, %d failures" % (len(index), failures))
    return 1 if failures or not index else 0


if __name__ == "__main__":
    sys.exit(main())
