"""Headless simulator: scenario loading, deterministic replay, fuzzing,
both transports, and the command line."""

import json
from pathlib import Path

import pytest

from collabboard.protocol import canonical_json
from collabboard.sim import generate_fuzz, load_scenario, run_scenario
from collabboard.sim.cli import main as sim_main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
SMOKE = str(SCENARIOS / "smoke.json")
FUZZ = str(SCENARIOS / "fuzz.json")


class TestScenarioLoading:
    def test_load_from_path(self):
        sc = load_scenario(SMOKE)
        assert sc.name == "smoke"
        assert sc.boards == 2
        assert len(sc.clients) == 2
        assert sc.events == sorted(sc.events, key=lambda e: e["at"])

    def test_load_from_dict(self):
        sc = load_scenario({"name": "inline", "boards": 1,
                            "clients": [{"id": "x", "name": "X"}], "events": []})
        assert sc.name == "inline"

    def test_fuzz_block_expands(self):
        sc = load_scenario({"name": "f", "boards": 2,
                            "fuzz": {"clients": 3, "events": 50, "seed": 9}})
        assert len(sc.clients) == 3
        assert len(sc.events) >= 50  # hellos are prepended
        assert sc.seed == 9

    def test_seed_override(self):
        a = load_scenario({"name": "f", "boards": 1,
                           "fuzz": {"clients": 2, "events": 30, "seed": 1}})
        b = load_scenario({"name": "f", "boards": 1,
                           "fuzz": {"clients": 2, "events": 30, "seed": 1}},
                          seed_override=2)
        assert b.seed == 2
        assert canonical_json([e for e in a.events]) != \
            canonical_json([e for e in b.events])


class TestFuzzGeneration:
    def test_same_seed_same_events(self):
        a = generate_fuzz(n_clients=3, n_events=120, seed=5, boards=2)
        b = generate_fuzz(n_clients=3, n_events=120, seed=5, boards=2)
        assert canonical_json(a.events) == canonical_json(b.events)

    def test_different_seeds_differ(self):
        a = generate_fuzz(n_clients=3, n_events=120, seed=5, boards=2)
        b = generate_fuzz(n_clients=3, n_events=120, seed=6, boards=2)
        assert canonical_json(a.events) != canonical_json(b.events)

    def test_events_sorted_and_within_client_set(self):
        sc = generate_fuzz(n_clients=4, n_events=200, seed=11, boards=3)
        ats = [e["at"] for e in sc.events]
        assert ats == sorted(ats)
        names = {c["id"] for c in sc.clients}
        assert all(e["client"] in names for e in sc.events)


class TestInProcessRuns:
    def test_smoke_scenario_converges(self):
        report = run_scenario(load_scenario(SMOKE))
        assert report["ok"], report
        assert report["converged"]
        assert report["check_failures"] == {}
        assert report["transport"] == "in_process"
        assert report["live_replicas"] == 2
        hashes = set(report["replica_hashes"].values())
        assert hashes == {report["relay_hash"]}

    def test_smoke_is_byte_deterministic(self):
        a = run_scenario(load_scenario(SMOKE))
        b = run_scenario(load_scenario(SMOKE))
        assert canonical_json(a) == canonical_json(b)

    def test_fuzz_converges_and_is_deterministic(self):
        sc = generate_fuzz(n_clients=4, n_events=300, seed=7, boards=2,
                           config="eyes_free")
        a = run_scenario(sc)
        assert a["ok"], a
        assert a["events_applied"] > 0
        b = run_scenario(generate_fuzz(n_clients=4, n_events=300, seed=7,
                                       boards=2, config="eyes_free"))
        assert canonical_json(a) == canonical_json(b)

    def test_fuzz_seeds_explore_different_histories(self):
        a = run_scenario(generate_fuzz(n_clients=3, n_events=150, seed=1))
        b = run_scenario(generate_fuzz(n_clients=3, n_events=150, seed=2))
        assert a["ok"] and b["ok"]
        assert a["relay_hash"] != b["relay_hash"]

    def test_nacks_are_counted_not_fatal(self):
        sc = load_scenario({
            "name": "nacky", "boards": 1, "clients": [{"id": "solo", "name": "Solo"}],
            "events": [
                {"at": 0, "client": "solo", "kind": "hello",
                 "payload": {"name": "Solo"}},
                # stroke without holding the draw token -> nack
                {"at": 2, "client": "solo", "kind": "stroke_begin",
                 "payload": {"board": "b0", "color": [1, 0, 0],
                             "width": 0.004}},
            ]})
        report = run_scenario(sc)
        assert report["ok"]
        assert sum(report["nacks"].values()) == 1

    def test_disconnect_mid_run(self):
        sc = load_scenario({
            "name": "dropper", "boards": 1, "clients": [{"id": "a", "name": "A"}, {"id": "b", "name": "B"}],
            "events": [
                {"at": 0, "client": "a", "kind": "hello",
                 "payload": {"name": "A"}},
                {"at": 0, "client": "b", "kind": "hello",
                 "payload": {"name": "B"}},
                {"at": 2, "client": "a", "kind": "draw_request",
                 "payload": {"board": "b0"}},
                {"at": 4, "client": "a", "kind": "disconnect"},
                {"at": 6, "client": "b", "kind": "draw_request",
                 "payload": {"board": "b0"}},
            ]})
        report = run_scenario(sc)
        assert report["ok"], report
        assert report["live_replicas"] == 1


class TestSocketRuns:
    def test_smoke_over_sockets(self):
        report = run_scenario(load_scenario(SMOKE), transport="socket")
        assert report["ok"], report
        assert report["transport"] == "socket"
        assert report["converged"]
        assert set(report["replica_hashes"].values()) == {report["relay_hash"]}

    def test_small_fuzz_over_sockets(self):
        sc = generate_fuzz(n_clients=3, n_events=60, seed=3, boards=2)
        report = run_scenario(sc, transport="socket")
        assert report["ok"], report
        assert "transport_errors" not in report["check_failures"]


class TestCli:
    def test_run_smoke_exit_zero(self, capsys):
        assert sim_main(["run", SMOKE]) == 0
        out = capsys.readouterr().out
        assert "smoke" in out and "ok" in out

    def test_fuzz_exit_zero_and_report_file(self, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        rc = sim_main(["fuzz", "--clients", "3", "--events", "80",
                       "--seed", "4", "--boards", "2",
                       "--report", str(report_path)])
        assert rc == 0
        data = json.loads(report_path.read_text())
        assert data["ok"] and data["seed"] == 4

    def test_run_missing_file_exit_two(self, capsys):
        assert sim_main(["run", str(SCENARIOS / "no_such_file.json")]) == 2

    def test_seed_override_flag(self, tmp_path):
        r1 = tmp_path / "r1.json"
        r2 = tmp_path / "r2.json"
        assert sim_main(["run", FUZZ, "--seed", "21",
                         "--report", str(r1)]) == 0
        assert sim_main(["run", FUZZ, "--seed", "21",
                         "--report", str(r2)]) == 0
        assert r1.read_text() == r2.read_text()
