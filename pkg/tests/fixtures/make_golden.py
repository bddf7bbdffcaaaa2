"""Regenerate the golden wire-format frames in this directory.

Layouts are hand-packed with struct, on purpose: these bytes pin the wire
contract, so they must not be produced by the codec they are checking.
Run from the repo root:  python3 tests/fixtures/make_golden.py
"""

import pathlib
import struct

HERE = pathlib.Path(__file__).parent
MAGIC = b"FWD1"


def frame(msg_type, payload):
    return MAGIC + struct.pack("<BI", msg_type, len(payload)) + payload


def doubles(*vals):
    return struct.pack("<%dd" % len(vals), *vals)


def measure_blob(n, d, flat_points, weights):
    return struct.pack("<II", n, d) + doubles(*flat_points) + doubles(*weights)


GOLDEN = {
    # client hello: version 1, d=2, lows then highs
    "hello_client.bin": frame(
        0x01, struct.pack("<HI", 1, 2) + doubles(-1.5, 0.25) + doubles(3.5, 4.0)),
    # coordinator hello: d=0 sentinel, approx / last_round_only / p=2 /
    # 20 rounds, fixed t policy (tag 0) at 0.5
    "hello_options_fixed.bin": frame(
        0x01, struct.pack("<HI", 1, 0) + struct.pack("<BBBI", 1, 0, 2, 20)
        + struct.pack("<Bd", 0, 0.5)),
    # coordinator hello: exact / every_round / p=1 / 7 rounds, uniform t
    # policy (tag 1) on [0.25, 0.75] with seed 42
    "hello_options_uniform.bin": frame(
        0x01, struct.pack("<HI", 1, 0) + struct.pack("<BBBI", 0, 1, 1, 7)
        + struct.pack("<BddQ", 1, 0.25, 0.75, 42)),
    # round-3 broadcast of a 2-atom 2-D measure
    "xi_broadcast.bin": frame(
        0x02, struct.pack("<I", 3)
        + measure_blob(2, 2, (0.0, 1.0, 2.0, 3.0), (0.5, 0.5))),
    # round-3 reply, single atom, distance 1.25 attached
    "interp_reply.bin": frame(
        0x03, struct.pack("<I", 3) + measure_blob(1, 2, (0.5, -2.0), (1.0,))
        + struct.pack("<Bd", 1, 1.25)),
    # round-4 reply without a distance report
    "interp_reply_nodist.bin": frame(
        0x03, struct.pack("<I", 4) + measure_blob(1, 2, (0.5, -2.0), (1.0,))
        + struct.pack("<Bd", 0, 0.0)),
    "done.bin": frame(0x04, doubles(2.5)),
    "error.bin": frame(0x7F, struct.pack("<H", 1) + "version 9 unsupported".encode()),
}


def main():
    for name, blob in GOLDEN.items():
        (HERE / name).write_bytes(blob)
        print(f"{name}: {len(blob)} bytes")


if __name__ == "__main__":
    main()
