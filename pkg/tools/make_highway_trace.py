"""Write the shipped highway position trace.

One TaV (id 100) drives 400 one-second periods at 25 m/s.  SeVs 1-3 keep
pace in range for the whole run, SeV 4 catches up and enters range at
period 118, SeV 5 joins from a ramp at period 320 and leaves at 343.
Three distractors must never become candidates: SeV 6 on the opposite
carriageway, SeV 7 which stays 400 m ahead, and a second TaV (101).

Usage: python tools/make_highway_trace.py [output.csv]
"""
import math
import sys
from pathlib import Path

T = 400
V = 25.0
LANE = 3.5
DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src/vccoffload/scenarios/highway_table2_trace.csv"


def offset(vid, t):
    """Along-road position of a vehicle relative to the TaV, in meters."""
    if vid == 1:
        return 60.0 + 40.0 * math.sin(2 * math.pi * t / 150)
    if vid == 2:
        return -90.0 + 30.0 * math.sin(2 * math.pi * t / 97 + 1.0)
    if vid == 3:
        return 140.0 + 50.0 * math.sin(2 * math.pi * t / 211 + 2.0)
    if vid == 4:
        return -195.0 - 6.0 * (118 - t) if t < 118 else -195.0 + (t - 118)
    if vid == 5:
        return 150.0 - 2.0 * (t - 320)
    if vid == 7:
        return 400.0
    if vid == 101:
        return -30.0
    raise KeyError(vid)


def rows():
    for t in range(1, T + 1):
        tav_x = V * t
        out = [(100, "TAV", tav_x, 0.0, V, 1)]
        for vid, y in ((1, LANE), (2, LANE), (3, 0.0), (4, LANE), (7, LANE), (101, LANE)):
            x = tav_x + offset(vid, t)
            speed = V + (offset(vid, t + 1) - offset(vid, t))
            role = "TAV" if vid == 101 else "SEV"
            out.append((vid, role, x, y, speed, 1))
        if 320 <= t <= 343:
            out.append((5, "SEV", tav_x + offset(5, t), LANE, V - 2.0, 1))
        out.append((6, "SEV", 2 * V * 200 - V * t, 10.0, V, -1))
        for vid, role, x, y, speed, direction in sorted(out):
            yield f"{t},{vid},{role},{x!r},{y!r},{speed!r},{direction:+d}\n"


def main(path=DEFAULT_OUT):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("period,vehicle_id,role,x,y,speed,direction\n")
        fh.writelines(rows())
    print(f"wrote {path}")


if __name__ == "__main__":
    main(*sys.argv[1:])
