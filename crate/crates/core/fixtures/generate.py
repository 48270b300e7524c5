#!/usr/bin/env python3
"""Regenerates the scenario fixtures in this directory."""

import json
import math
from pathlib import Path

HERE = Path(__file__).resolve().parent
LANE_WIDTH = 3.75


def straight(y, length=300.0, x0=0.0):
    return [[x0 + float(i), y] for i in range(int(length) + 1)]


def arc(radius, length=300.0):
    pts = []
    for i in range(int(length) + 1):
        a = i / radius
        pts.append([round(radius * math.sin(a), 9), round(radius * (1.0 - math.cos(a)), 9)])
    return pts


def lane(lane_id, polyline, current=True, change=False, regulations=None):
    return {
        "lane_id": lane_id,
        "polyline": polyline,
        "width": LANE_WIDTH,
        "is_change_lane": change,
        "is_current": current,
        "regulations": regulations or [],
    }


def ego(v=10.0, x=0.0, y=0.0, heading=0.0, kappa=0.0):
    return {
        "state": {"x": x, "y": y, "heading": heading, "kappa": kappa, "v": v, "a": 0.0},
        "footprint": {"l_f": 2.8, "l_r": 1.0, "width": 2.0},
    }


def moving(oid, pose_at, duration, length=4.5, width=2.0, speed=0.0, dt=0.1):
    steps = int(round(duration / dt))
    traj = []
    for k in range(steps + 1):
        t = round(k * dt, 10)
        x, y, h = pose_at(t)
        traj.append({"t": t, "x": round(x, 9), "y": round(y, 9), "heading": round(h, 12)})
    return {"id": oid, "length": length, "width": width, "kind": "dynamic", "speed": speed, "trajectory": traj}


def static(oid, x, y, length=4.0, width=2.0, heading=0.0):
    return {
        "id": oid,
        "length": length,
        "width": width,
        "kind": "static",
        "speed": 0.0,
        "trajectory": [{"t": 0.0, "x": x, "y": y, "heading": heading}],
    }


def scenario(lanes, obstacles, cycles, ego_spec=None):
    return {
        "version": 1,
        "lanes": lanes,
        "ego": ego_spec or ego(),
        "obstacles": obstacles,
        "sim": {"cycle_period": 0.1, "cycles": cycles},
    }


def horizon(cycles):
    return cycles * 0.1 + 8.5


def fixtures():
    out = {}
    out["minimal_empty"] = scenario([lane("main", straight(0.0))], [], 50)

    cycles = 20
    out["oncoming_nudge"] = scenario(
        [lane("main", straight(0.0))],
        [moving("oncoming", lambda t: (80.0 - 10.0 * t, 2.0, math.pi), horizon(cycles), speed=10.0)],
        cycles,
    )

    def cut_in(t):
        return 36.05 + 5.0 * t, max(3.95 - t, 0.0), 0.0

    out["cut_in"] = scenario([lane("main", straight(0.0))], [moving("cut_in", cut_in, horizon(30), speed=5.0)], 30)

    out["behind_fast"] = scenario(
        [lane("main", straight(0.0))],
        [moving("behind", lambda t: (-25.0 + 14.0 * t, 0.0, 0.0), horizon(30), speed=14.0)],
        30,
    )

    out["stop_line"] = scenario([lane("main", straight(0.0), regulations=[{"kind": "stop_line", "s": 50.0}])], [], 80)

    out["speed_limit"] = scenario(
        [lane("main", straight(0.0), regulations=[{"kind": "speed_limit", "v": 8.0}])],
        [static("parked", 60.0, 1.9, 4.5, 2.0)],
        40,
        ego(v=8.0),
    )

    out["keep_clear"] = scenario(
        [lane("main", straight(0.0), regulations=[{"kind": "keep_clear", "s_min": 30.0, "s_max": 45.0}])],
        [moving("lead", lambda t: (52.0 + 3.0 * t, 0.0, 0.0), horizon(60), speed=3.0)],
        60,
        ego(v=8.0),
    )

    out["two_lane_wall"] = scenario(
        [lane("main", straight(0.0)), lane("left", straight(LANE_WIDTH), current=False, change=True)],
        [static("wall", 60.0, 0.0, 2.0, LANE_WIDTH)],
        30,
    )

    out["hysteresis"] = scenario(
        [lane("main", straight(0.0)), lane("left", straight(LANE_WIDTH), current=False, change=True)],
        [],
        20,
    )

    cycles = 10
    ten = [
        static("s1", 45.0, -2.2, 4.5, 2.0),
        static("s2", 120.0, -2.2, 4.5, 2.0),
        static("s3", 80.0, LANE_WIDTH + 2.2, 4.5, 2.0),
        static("s4", 170.0, LANE_WIDTH + 2.4, 4.5, 2.0),
        moving("lead", lambda t: (30.0 + 8.0 * t, 0.0, 0.0), horizon(cycles), speed=8.0),
        moving("left_lead", lambda t: (40.0 + 9.0 * t, LANE_WIDTH, 0.0), horizon(cycles), speed=9.0),
        moving("oncoming_a", lambda t: (160.0 - 10.0 * t, 2.0 * LANE_WIDTH, math.pi), horizon(cycles), speed=10.0),
        moving("oncoming_b", lambda t: (220.0 - 12.0 * t, 2.0 * LANE_WIDTH, math.pi), horizon(cycles), speed=12.0),
        moving("follower", lambda t: (-20.0 + 10.0 * t, 0.0, 0.0), horizon(cycles), speed=10.0),
        moving("crossing", lambda t: (100.0, -12.0 + 1.5 * t, math.pi / 2), horizon(cycles), speed=1.5),
    ]
    out["two_lane_ten"] = scenario(
        [lane("main", straight(0.0)), lane("left", straight(LANE_WIDTH), current=False, change=True)], ten, cycles
    )

    curve = arc(250.0)
    a = 70.0 / 250.0
    out["curve_static"] = scenario(
        [lane("main", curve)],
        [static("parked", 250.0 * math.sin(a) - 1.9 * math.sin(a), 250.0 * (1 - math.cos(a)) + 1.9 * math.cos(a), 4.5, 2.0, a)],
        40,
    )

    invalid = scenario(
        [lane("main", straight(0.0))],
        [moving("short", lambda t: (80.0 - 10.0 * t, 2.0, math.pi), 1.0, speed=10.0)],
        20,
    )
    out["short_horizon_invalid"] = invalid
    return out


def main():
    for name, data in fixtures().items():
        (HERE / f"{name}.json").write_text(json.dumps(data, indent=1) + "\n")


if __name__ == "__main__":
    main()
