#!/usr/bin/env python3
"""Regenerates the synthetic fixture dataset under data/.

The network is a hand-built Manhattan corridor (Broadway locals down to 8th
St) plus a Lexington-side loop, the 42nd St shuttle and a Second Ave spur.
Incidents are drawn from a seeded generator: a per-station base rate with a
mild upward trend, jittered around the station coordinate, plus a batch far
outside the catchment radius (JFK) and a batch outside the date range, so
the spatial and temporal filters both have something to reject.

Run from the repository root:  python3 tools/gen_fixtures.py
"""

import math
import random
from datetime import datetime, timedelta
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data"
SEED = 20180101

# name -> (lat, lon)
STATIONS = {
    "116th": (40.8076, -73.9642),
    "110th": (40.8022, -73.9676),
    "103rd": (40.7993, -73.9688),
    "96th Red": (40.7937, -73.9722),
    "86th Red": (40.7884, -73.9761),
    "79th": (40.7838, -73.9795),
    "72nd Red": (40.7785, -73.9820),
    "66th": (40.7735, -73.9822),
    "59th": (40.7685, -73.9817),
    "50th Red": (40.7614, -73.9838),
    "42nd": (40.7560, -73.9871),
    "34th Yellow Orange": (40.7497, -73.9878),
    "28th Yellow": (40.7455, -73.9885),
    "23rd Yellow": (40.7414, -73.9892),
    "Union Sq": (40.7356, -73.9906),
    "8th": (40.7308, -73.9926),
    "Lex 59th": (40.7626, -73.9674),
    "Lex 51st": (40.7571, -73.9719),
    "Grand Central": (40.7527, -73.9772),
    "33rd Green": (40.7461, -73.9822),
    "28th Green": (40.7434, -73.9841),
    "23rd Green": (40.7401, -73.9862),
    "72nd Q": (40.7687, -73.9587),
}

# (train, [stations...], [minutes between consecutive stations...])
LINES = [
    ("1",
     ["116th", "110th", "103rd", "96th Red", "86th Red", "79th", "72nd Red",
      "66th", "59th"],
     [2.0, 1.5, 1.5, 2.0, 1.5, 1.5, 1.5, 2.0]),
    ("N",
     ["59th", "50th Red", "42nd", "34th Yellow Orange", "28th Yellow",
      "23rd Yellow", "Union Sq", "8th"],
     [2.0, 1.5, 2.0, 1.5, 1.0, 1.5, 2.0]),
    ("4",
     ["59th", "Lex 59th", "Lex 51st", "Grand Central", "33rd Green",
      "28th Green", "23rd Green", "Union Sq"],
     [3.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0]),
    ("S", ["Grand Central", "42nd"], [1.0]),
    ("Q", ["72nd Red", "72nd Q"], [2.0]),
]

RANGE_START = datetime(2018, 1, 1)
RANGE_END = datetime(2020, 1, 1)  # exclusive
MONTHS = 24
JITTER_KM = 1.2
KM_PER_DEG_LAT = 111.195


def month_start(k):
    year = 2018 + (k // 12)
    return datetime(year, 1 + k % 12, 1)


def write_stations():
    lines = ["station,train,prev_stop,next_stop,time_min"]
    for train, stops, times in LINES:
        for i in range(len(stops) - 1):
            lines.append(f"{stops[i]},{train},,{stops[i + 1]},{times[i]}")
        # terminal row: defines the last stop, repeats the final segment
        lines.append(f"{stops[-1]},{train},{stops[-2]},,{times[-1]}")
    (OUT / "stations.csv").write_text("\n".join(lines) + "\n")


def write_coords():
    lines = ["station,latitude,longitude"]
    for name, (lat, lon) in STATIONS.items():
        lines.append(f"{name},{lat:.4f},{lon:.4f}")
    (OUT / "station_coords.csv").write_text("\n".join(lines) + "\n")


def jitter(rng, lat, lon):
    r_km = JITTER_KM * math.sqrt(rng.random())
    angle = rng.uniform(0.0, 2.0 * math.pi)
    dlat = (r_km * math.sin(angle)) / KM_PER_DEG_LAT
    dlon = (r_km * math.cos(angle)) / (KM_PER_DEG_LAT * math.cos(math.radians(lat)))
    return lat + dlat, lon + dlon


def random_time(rng, start, end):
    span = int((end - start).total_seconds())
    return start + timedelta(seconds=rng.randrange(span))


def write_incidents():
    rng = random.Random(SEED)
    rows = []

    names = list(STATIONS)
    for month in range(MONTHS):
        start = month_start(month)
        end = month_start(month + 1) if month + 1 < MONTHS else RANGE_END
        for idx, name in enumerate(names):
            lat, lon = STATIONS[name]
            base = 3 + idx % 5
            expected = base * (1.0 + 0.015 * month)
            count = max(0, round(expected) + rng.randint(-2, 2))
            for _ in range(count):
                when = random_time(rng, start, end)
                ilat, ilon = jitter(rng, lat, lon)
                rows.append((when, ilat, ilon))

    # Outside the 8 km catchment of every station: JFK airport area.
    for _ in range(40):
        when = random_time(rng, RANGE_START, RANGE_END)
        ilat, ilon = jitter(rng, 40.6413, -73.7781)
        rows.append((when, ilat, ilon))

    # Inside the catchment but outside [2018-01, 2020-01).
    for _ in range(15):
        when = random_time(rng, datetime(2017, 6, 1), datetime(2017, 12, 31))
        ilat, ilon = jitter(rng, *STATIONS["Union Sq"])
        rows.append((when, ilat, ilon))
    for _ in range(15):
        when = random_time(rng, datetime(2020, 3, 1), datetime(2020, 6, 30))
        ilat, ilon = jitter(rng, *STATIONS["42nd"])
        rows.append((when, ilat, ilon))

    rows.sort(key=lambda r: r[0])
    lines = ["occurred_at,latitude,longitude"]
    for when, lat, lon in rows:
        lines.append(f"{when:%Y-%m-%dT%H:%M:%S},{lat:.6f},{lon:.6f}")
    (OUT / "incidents.csv").write_text("\n".join(lines) + "\n")


def main():
    OUT.mkdir(exist_ok=True)
    write_stations()
    write_coords()
    write_incidents()
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
