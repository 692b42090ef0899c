import csv
import os

import numpy as np
import pytest

from imbkit.data import rain_schema

DIRECTIONS = ["N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW"]
LOCATIONS = ["Albury", "Cairns", "Darwin", "Hobart", "Perth", "Sydney"]


def write_rain_like(path, n=300, seed=0, include_risk_mm=True):
    """Small CSV in the Rain-in-Australia layout with realistic gaps."""
    rng = np.random.default_rng(seed)
    names = [c.name for c in rain_schema(include_risk_mm)]
    rain_tomorrow = rng.random(n) < 0.25
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(n):
            wet = rain_tomorrow[i]
            row = {
                "Date": f"20{8 + i % 10:02d}-{1 + i % 12:02d}-{1 + i % 28:02d}",
                "Location": LOCATIONS[rng.integers(len(LOCATIONS))],
                "MinTemp": round(rng.normal(12, 6), 1),
                "MaxTemp": round(rng.normal(23, 7), 1),
                "Rainfall": round(abs(rng.normal(2 + 4 * wet, 4)), 1),
                "Evaporation": round(abs(rng.normal(5, 3)), 1),
                "Sunshine": round(abs(rng.normal(8 - 3 * wet, 3)), 1),
                "WindGustDir": DIRECTIONS[rng.integers(16)],
                "WindGustSpeed": int(abs(rng.normal(40, 13))),
                "WindDir9am": DIRECTIONS[rng.integers(16)],
                "WindDir3pm": DIRECTIONS[rng.integers(16)],
                "WindSpeed9am": int(abs(rng.normal(14, 8))),
                "WindSpeed3pm": int(abs(rng.normal(18, 8))),
                "Humidity9am": int(np.clip(rng.normal(65 + 12 * wet, 18), 0, 100)),
                "Humidity3pm": int(np.clip(rng.normal(40 + 35 * wet, 15), 0, 100)),
                "Pressure9am": round(rng.normal(1018 - 4 * wet, 7), 1),
                "Pressure3pm": round(rng.normal(1015 - 4 * wet, 7), 1),
                "Cloud9am": int(rng.integers(9)),
                "Cloud3pm": int(rng.integers(9)),
                "Temp9am": round(rng.normal(17, 6), 1),
                "Temp3pm": round(rng.normal(21, 7), 1),
                "RainToday": "Yes" if rng.random() < 0.22 else "No",
                "RISK_MM": round(abs(rng.normal(3 * wet, 2)), 1),
                "RainTomorrow": "Yes" if wet else "No",
            }
            for col in ("MinTemp", "Sunshine", "WindGustDir", "Pressure9am", "Cloud3pm", "RainToday"):
                if rng.random() < 0.08:
                    row[col] = "NA"
            if row["RainToday"] == "NA":
                row["Rainfall"] = "NA"
            w.writerow([row[c] for c in names])
    return path


@pytest.fixture
def rain_csv(tmp_path):
    return write_rain_like(os.path.join(tmp_path, "weather.csv"))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
