#!/usr/bin/env python3
"""Writes the golden packet fixtures with Python's struct module.

Kept separate from the C++ codec on purpose: the unit tests compare the
codec's output against these bytes.
"""
import pathlib
import struct
import sys

out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
(out / "malformed").mkdir(parents=True, exist_ok=True)

# Landmark i: x = i/64, y = 1 - i/64, z = -i/128, visibility = 0.5 + i/128.
# All of these are exact in binary32.
landmarks = b"".join(
    struct.pack("<ffff", i / 64, 1 - i / 64, -i / 128, 0.5 + i / 128) for i in range(33)
)
pose = struct.pack("<4sBBIQ", b"TSHF", 1, 0x01, 42, 1_400_000) + landmarks
assert len(pose) == 546

# seq 42, ts 1.4 s, HoldingRight, 44.5 deg, progress 0.75, score 75,
# streak 5, reps 5, no flags, PERFECT_RIGHT, positive chime, 2 reserved bytes.
feedback = struct.pack(
    "<4sBBIQBffiHHBHBxx", b"TSHF", 1, 0x02, 42, 1_400_000, 2, 44.5, 0.75, 75, 5, 5, 0, 3, 1
)
assert len(feedback) == 41

(out / "golden_pose.bin").write_bytes(pose)
(out / "golden_feedback.bin").write_bytes(feedback)
(out / "malformed" / "bad_magic.bin").write_bytes(b"XSHF" + pose[4:])
(out / "malformed" / "bad_version.bin").write_bytes(pose[:4] + b"\x02" + pose[5:])
(out / "malformed" / "bad_kind.bin").write_bytes(pose[:5] + b"\x07" + pose[6:])
(out / "malformed" / "short_pose.bin").write_bytes(pose[:545])
