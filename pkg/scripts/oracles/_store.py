"""Shared writer for oracle outputs consumed by the tests."""

import json
from pathlib import Path

PATH = Path(__file__).resolve().parents[2] / "tests" / "data" / "oracle_values.json"


def save(key, value):
    data = json.loads(PATH.read_text()) if PATH.exists() else {}
    data[key] = value
    PATH.parent.mkdir(parents=True, exist_ok=True)
    PATH.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"{key}: {json.dumps(value)}")
