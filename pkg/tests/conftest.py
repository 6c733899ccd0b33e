"""Shared fixtures: a fabricated 3-city dataset engineered so the worked
example has exact expected values (degree 0.95, correlations 0.99/0.98).
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from relaq.datamodel import Dataset, PreprocessParams, parse_config
from relaq.preprocess import preprocess
from relaq.querymodel import parse_query


def window_with_corr(x, rho: float, lo=0.2, hi=0.8, pick=0) -> np.ndarray:
    """A vector whose Pearson correlation with ``x`` is exactly ``rho``:
    rho * unit(x - mean) plus an orthogonal unit residual, rescaled.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    u = x - x.mean()
    u = u / np.linalg.norm(u)
    ones = np.ones(n) / math.sqrt(n)
    rng = np.random.default_rng(3 + pick)
    w = rng.normal(size=n)
    for v in (ones, u):
        w = w - (w @ v) * v
    w = w / np.linalg.norm(w)
    y = rho * u + math.sqrt(1.0 - rho * rho) * w
    return lo + (y - y.min()) / (y.max() - y.min()) * (hi - lo)


def build_three_city() -> dict:
    """3 series x 40 samples, sampling 1, box 4. SF has exactly one window
    (start 10) passing the rising-trend threshold, with degree 0.95; the LA
    and SD windows at the same start correlate 0.99 and 0.98 with it.
    """
    m, target = 40, 10
    raster = np.interp(np.linspace(0.0, 4.0, 4), [0.0, 4.0], [0.0, 1.0])
    rising = raster + np.array([0.05, -0.05, 0.05, -0.05])  # ED 0.1 -> degree 0.95

    sf = np.empty(m)
    sf[0], sf[1] = 1.0, 0.0
    for i in range(2, m):
        sf[i] = 0.9 if i % 2 == 0 else 0.1
    sf[9] = 1.0
    sf[target : target + 4] = rising
    sf[14] = 0.1
    sf[15] = 0.1

    la_win = window_with_corr(rising, 0.99, pick=0)
    sd_win = window_with_corr(rising, 0.98, pick=1)
    la = 0.8 * sf + 0.1
    la[target : target + 4] = la_win
    sd = 0.5 * sf + 0.25 + 0.08 * np.sin(np.arange(m) * 1.7)
    sd[target : target + 4] = sd_win

    dataset = Dataset(
        timestamps=tuple(float(t) for t in range(m)),
        series={
            "SF": tuple(float(v) for v in sf),
            "LA": tuple(float(v) for v in la),
            "SD": tuple(float(v) for v in sd),
        },
        step_unit="hour",
    )
    labels = parse_config("name,State\nSF,CA\nLA,CA\nSD,\n")
    params = PreprocessParams(sampling_length=1, box_length=4)
    return {
        "dataset": dataset,
        "labels": labels,
        "params": params,
        "target_start": target,
        "target_window": rising,
    }


RISING_QUERY_JSON = {
    "mode": "strict",
    "timeboxes": [
        {
            "id": "A",
            "name": "SF",
            "offset": 0,
            "sketch": [{"x": 0, "y": 0}, {"x": 4, "y": 1}],
        },
        {"id": "B", "offset": 0},
    ],
    "relalinks": [
        {
            "id": "r1",
            "kind": "correlation",
            "source": "A",
            "target": "B",
            "threshold": [0.8, 1.0],
        }
    ],
}


@pytest.fixture(scope="session")
def three_city():
    parts = build_three_city()
    artifacts = preprocess(parts["dataset"], parts["labels"], parts["params"])
    artifacts.wait_all()
    return {**parts, "artifacts": artifacts}


@pytest.fixture()
def rising_query():
    return parse_query(RISING_QUERY_JSON)


def three_city_csv() -> tuple[str, str]:
    """The same 3-city data as upload-ready CSV text (data, config)."""
    parts = build_three_city()
    dataset = parts["dataset"]
    lines = ["timestamp," + ",".join(dataset.names)]
    for i, ts in enumerate(dataset.timestamps):
        lines.append(
            f"{ts!r}," + ",".join(repr(dataset.series[n][i]) for n in dataset.names)
        )
    return "\n".join(lines) + "\n", "name,State\nSF,CA\nLA,CA\nSD,\n"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                lines.append(f"{label}  {nodeid.split('::')[-1]}")
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split()[-1]):
            terminalreporter.write_line(line)
