import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from relaq.cli import main
from relaq.service import create_app

from conftest import RISING_QUERY_JSON, three_city_csv


@pytest.fixture()
def three_city_files(tmp_path):
    data, config = three_city_csv()
    data_path = tmp_path / "data.csv"
    config_path = tmp_path / "config.csv"
    data_path.write_text(data)
    config_path.write_text(config)
    return data_path, config_path


@pytest.fixture()
def ingested(tmp_path, three_city_files):
    data_path, config_path = three_city_files
    out = tmp_path / "artifacts"
    code = main(
        [
            "ingest",
            str(data_path),
            str(config_path),
            "--sampling",
            "1",
            "--box",
            "4",
            "--unit",
            "hour",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    return out


def _write_query(tmp_path, doc):
    path = tmp_path / "query.json"
    path.write_text(json.dumps(doc))
    return path


class TestIngest:
    def test_creates_artifact_dir(self, ingested):
        assert (ingested / "manifest.json").exists()
        assert (ingested / "series.npz").exists()
        assert (ingested / "relation_correlation.json").exists()

    def test_air_quality_style(self, tmp_path):
        rng = np.random.default_rng(3)
        rows = ["t,north,south,east"]
        for h in range(240):  # ten days of hourly readings
            vals = 30 + 10 * np.sin(h / 24 * 2 * np.pi + np.arange(3)) + rng.normal(0, 1, 3)
            rows.append(f"{h}," + ",".join(f"{v:.3f}" for v in vals))
        data = tmp_path / "air.csv"
        data.write_text("\n".join(rows) + "\n")
        config = tmp_path / "air_config.csv"
        config.write_text("name,region\nnorth,N\nsouth,S\neast,E\n")
        out = tmp_path / "air_artifacts"
        code = main(
            ["ingest", str(data), str(config), "--sampling", "4", "--box", "24",
             "--unit", "hour", "--out", str(out)]
        )
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["params"] == {
            "sampling_length": 4, "box_length": 24, "alphabet_size": 4,
        }

    def test_bad_data_exit_2(self, tmp_path, three_city_files):
        _, config_path = three_city_files
        bad = tmp_path / "bad.csv"
        bad.write_text("t,a\n0,1\n1,oops\n2,3\n")
        code = main(
            ["ingest", str(bad), str(config_path), "--sampling", "1", "--box", "4",
             "--out", str(tmp_path / "x")]
        )
        assert code == 2


class TestQuery:
    def test_two_results(self, tmp_path, ingested, capsys):
        qpath = _write_query(tmp_path, RISING_QUERY_JSON)
        code = main(["query", str(ingested), str(qpath)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["results"]) == 2
        assert payload["results"][0]["score"] == pytest.approx(2.94, abs=1e-9)

    def test_byte_identical_to_service(self, tmp_path, ingested, three_city_files, capsys):
        qpath = _write_query(tmp_path, RISING_QUERY_JSON)
        assert main(["query", str(ingested), str(qpath)]) == 0
        cli_bytes = capsys.readouterr().out.encode()

        data_path, config_path = three_city_files
        client = TestClient(create_app())
        upload = client.post(
            "/v1/datasets",
            files={
                "data": ("data.csv", data_path.read_bytes(), "text/csv"),
                "config": ("config.csv", config_path.read_bytes(), "text/csv"),
            },
            data={"sampling_length": "1", "box_length": "4", "step_unit": "hour"},
        )
        resp = client.post(
            f"/v1/datasets/{upload.json()['id']}/queries", json=RISING_QUERY_JSON
        )
        assert resp.content == cli_bytes

    def test_schema_violation_exit_3(self, tmp_path, ingested):
        qpath = _write_query(
            tmp_path,
            {
                "timeboxes": [{"id": "A", "offset": 0}, {"id": "B", "offset": 0}],
                "relalinks": [
                    {"id": "r", "kind": "cooccurrence", "source": "A", "target": "B",
                     "threshold": [0, 1]}
                ],
            },
        )
        assert main(["query", str(ingested), str(qpath)]) == 3

    def test_unknown_series_exit_3(self, tmp_path, ingested):
        qpath = _write_query(
            tmp_path, {"timeboxes": [{"id": "A", "name": "Oakland", "offset": 0}]}
        )
        assert main(["query", str(ingested), str(qpath)]) == 3

    def test_csv_format(self, tmp_path, ingested, capsys):
        qpath = _write_query(tmp_path, RISING_QUERY_JSON)
        assert main(["query", str(ingested), str(qpath), "--format", "csv"]) == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0] == "result,score,timebox,series,start,length,degree"
        assert len(lines) == 1 + 2 * 2  # two results x two fragments

    def test_fuzzy_flag(self, tmp_path, ingested, capsys):
        qpath = _write_query(tmp_path, RISING_QUERY_JSON)
        assert main(["query", str(ingested), str(qpath), "--fuzzy"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["results"]) >= 2

    def test_env_var_artifact_dir(self, tmp_path, ingested, capsys, monkeypatch):
        monkeypatch.setenv("RELAQ_DATA_DIR", str(ingested))
        qpath = _write_query(tmp_path, RISING_QUERY_JSON)
        assert main(["query", "", str(qpath)]) == 0
        assert json.loads(capsys.readouterr().out)["results"]


class TestRecommend:
    def test_recommend_output(self, tmp_path, ingested, capsys):
        qpath = _write_query(
            tmp_path,
            {"max_lag": 1, "timeboxes": [{"id": "A", "name": "SF", "offset": 0}]},
        )
        code = main(["recommend", str(ingested), str(qpath), "--focus", "A"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["focus"] == "A"
        assert len(payload["rows"]) <= 20

    def test_bad_focus_exit_3(self, tmp_path, ingested):
        qpath = _write_query(
            tmp_path, {"timeboxes": [{"id": "A", "name": "SF", "offset": 0}]}
        )
        assert main(["recommend", str(ingested), str(qpath), "--focus", "ZZ"]) == 3


class TestServe:
    def test_serves_artifacts_over_http(self, ingested):
        import socket
        import subprocess
        import sys
        import time

        import httpx

        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()

        proc = subprocess.Popen(
            [sys.executable, "-m", "relaq.cli", "serve", str(ingested),
             "--port", str(port)],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
        )
        try:
            base = f"http://127.0.0.1:{port}"
            deadline = time.time() + 20
            ready = False
            while time.time() < deadline:
                try:
                    r = httpx.get(f"{base}/v1/datasets/local/status", timeout=1.0)
                    if r.status_code == 200:
                        ready = True
                        break
                except httpx.HTTPError:
                    time.sleep(0.1)
            assert ready, "server did not come up"
            resp = httpx.post(
                f"{base}/v1/datasets/local/queries",
                json=RISING_QUERY_JSON,
                timeout=10.0,
            )
            assert resp.status_code == 200
            body = resp.json()
            assert len(body["results"]) == 2
            assert abs(body["results"][0]["score"] - 2.94) < 1e-9
        finally:
            proc.terminate()
            proc.wait(timeout=10)


class TestBench:
    def test_smoke(self, capsys):
        assert main(["bench", "--series", "4", "--length", "200"]) == 0
        out = capsys.readouterr().out
        assert "query_s" in out
        assert len(out.strip().splitlines()) > 1


class TestUsage:
    def test_no_command_exit_1(self, capsys):
        assert main([]) == 1

    def test_unknown_command_exit_1(self, capsys):
        assert main(["frobnicate"]) == 1
