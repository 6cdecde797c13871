#!/usr/bin/env python3
"""Convert APPS-style problem records into tasks.jsonl.

Each input file holds one JSON object with "question" and "input_output",
the latter a JSON string {"inputs": [...], "outputs": [...]}. The task id is
taken from "problem_id" when present, else the file stem.
"""
import json
import pathlib
import sys


def convert(path):
    record = json.loads(pathlib.Path(path).read_text())
    io = record["input_output"]
    if isinstance(io, str):
        io = json.loads(io)
    tests = []
    for given, expected in zip(io["inputs"], io["outputs"]):
        if isinstance(given, list):
            given = "\n".join(map(str, given))
        if isinstance(expected, list):
            expected = "\n".join(map(str, expected))
        tests.append({"input": str(given), "expected_output": str(expected)})
    task = {
        "task_id": str(record.get("problem_id", pathlib.Path(path).stem)),
        "question": record["question"],
        "test_cases": tests,
    }
    limits = {}
    if "time_limit_ms" in record:
        limits["wall_time_ms"] = int(record["time_limit_ms"])
    if "memory_limit_bytes" in record:
        limits["memory_bytes"] = int(record["memory_limit_bytes"])
    if limits:
        task["limits"] = limits
    return task


def main(argv):
    if len(argv) < 3:
        print("usage: apps_to_jsonl.py OUT.jsonl RECORD.json...", file=sys.stderr)
        return 1
    with open(argv[1], "w") as out:
        for path in argv[2:]:
            out.write(json.dumps(convert(path)) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
