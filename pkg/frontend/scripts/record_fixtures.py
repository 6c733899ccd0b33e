#!/usr/bin/env python3
"""Record real service responses as JSON fixtures for the UI contract tests.

Run from the repo root after installing the engine:

    python3 frontend/scripts/record_fixtures.py
"""

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "tests"))

from conftest import three_city_csv  # noqa: E402

from relaq.service import create_app  # noqa: E402

FIXTURE_DIR = ROOT / "frontend" / "tests" / "fixtures"

RISING_QUERY = {
    "mode": "strict",
    "timeboxes": [
        {"id": "A", "name": "SF", "offset": 0,
         "sketch": [{"x": 0, "y": 0}, {"x": 4, "y": 1}]},
        {"id": "B", "offset": 0},
    ],
    "relalinks": [
        {"id": "r1", "kind": "correlation", "source": "A", "target": "B",
         "threshold": [0.8, 1.0]},
    ],
}

# Three-box chain: named SF - default - named LA, loose thresholds so the
# matrix has rows spanning a range of strengths.
CHAIN_QUERY = {
    "mode": "strict",
    "timeboxes": [
        {"id": "A", "name": "SF", "offset": 0},
        {"id": "B", "offset": 0},
        {"id": "C", "name": "LA", "offset": 0},
    ],
    "relalinks": [
        {"id": "r1", "kind": "correlation", "source": "A", "target": "B",
         "threshold": [-1.0, 1.0]},
        {"id": "r2", "kind": "similarity", "source": "B", "target": "C",
         "threshold": [0.0, 1.0]},
    ],
}

GUIDANCE_QUERY = {
    "max_lag": 1,
    "timeboxes": [{"id": "A", "name": "SF", "offset": 0}],
}


def record():
    client = TestClient(create_app())
    data, config = three_city_csv()
    upload = client.post(
        "/v1/datasets",
        files={
            "data": ("data.csv", data.encode(), "text/csv"),
            "config": ("config.csv", config.encode(), "text/csv"),
        },
        data={"sampling_length": "1", "box_length": "4", "step_unit": "hour"},
    )
    assert upload.status_code == 201, upload.text
    entry_id = upload.json()["id"]

    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)

    def save(name, payload):
        (FIXTURE_DIR / name).write_text(json.dumps(payload, indent=2, sort_keys=True))
        print(f"wrote {name}")

    save("upload.json", upload.json())

    rising = client.post(f"/v1/datasets/{entry_id}/queries", json=RISING_QUERY)
    assert rising.status_code == 200
    save("rising_query.json", RISING_QUERY)
    save("rising_results.json", rising.json())

    chain = client.post(f"/v1/datasets/{entry_id}/queries", json=CHAIN_QUERY)
    assert chain.status_code == 200
    body = chain.json()
    strengths = [
        inst["strength"]
        for r in body["results"]
        for inst in r["links"]
        if inst["id"] == "r2"
    ]
    assert any(s >= 0.995 for s in strengths), "need rows surviving a [0.995,1] slider"
    assert any(s < 0.995 for s in strengths), "need rows hidden by a [0.995,1] slider"
    save("chain_query.json", CHAIN_QUERY)
    save("chain_results.json", body)

    guidance = client.post(
        f"/v1/datasets/{entry_id}/guidance",
        json={"query": GUIDANCE_QUERY, "focus": "A"},
    )
    assert guidance.status_code == 200, guidance.text
    save("guidance_query.json", GUIDANCE_QUERY)
    save("guidance.json", guidance.json())

    suggestions = client.get(
        f"/v1/datasets/{entry_id}/series/SF/trend-suggestions"
    )
    assert suggestions.status_code == 200
    save("trend_suggestions_root.json", suggestions.json())
    first = suggestions.json()["suggestions"][0]["symbol"]
    deeper = client.get(
        f"/v1/datasets/{entry_id}/series/SF/trend-suggestions",
        params={"prefix": first},
    )
    save("trend_suggestions_prefix.json", deeper.json())

    status = client.get(f"/v1/datasets/{entry_id}/status")
    save("status.json", status.json())


if __name__ == "__main__":
    record()
