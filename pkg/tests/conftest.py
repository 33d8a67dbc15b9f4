import json

import pytest


def record(tid, claim="c1", ts=0, resolving=False, resolution="true", text="hello", event="ev", **extra):
    rec = {
        "id": tid,
        "claim_id": claim,
        "event": event,
        "text": text,
        "timestamp": ts,
        "resolving": resolving,
        "resolution": resolution,
    }
    rec.update(extra)
    return rec


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(records, name="corpus.jsonl"):
        path = tmp_path / name
        path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
        return path

    return _write


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: int(k)):
            terminalreporter.write_line(ACCEPTANCE[key])
