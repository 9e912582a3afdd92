#!/usr/bin/env python3
"""Runs every cyclo_lms command on small inputs and validates what it writes
against the JSON schemas in schemas/. CSV tables are checked through their
manifest comment line and header row.

usage: validate_outputs.py <cyclo_lms binary> <schemas dir> <scenarios dir>
"""

import csv
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource


def load_registry(schema_dir):
    schemas = {}
    for path in schema_dir.glob("*.schema.json"):
        schemas[path.name] = json.loads(path.read_text())
    registry = Registry().with_resources(
        (name, Resource.from_contents(doc)) for name, doc in schemas.items()
    )
    return schemas, registry


class Checker:
    def __init__(self, schema_dir):
        self.schemas, self.registry = load_registry(schema_dir)
        self.columns = self.schemas["table.schema.json"]["$defs"]["columns_by_table"]
        self.failures = 0
        self.checked = 0

    def validate(self, doc, schema_name, label):
        validator = jsonschema.Draft202012Validator(self.schemas[schema_name], registry=self.registry)
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
        self.checked += 1
        if errors:
            self.failures += 1
            for e in errors[:5]:
                print(f"FAIL {label}: {'/'.join(map(str, e.path))}: {e.message}")
        else:
            print(f"ok   {label} ({schema_name})")

    def expect(self, cond, label):
        self.checked += 1
        if not cond:
            self.failures += 1
            print(f"FAIL {label}")

    def table(self, path):
        stem = path.stem
        expected = self.columns.get(stem)
        self.expect(expected is not None, f"{path.name}: unknown table")
        if path.suffix == ".json":
            doc = json.loads(path.read_text())
            self.validate(doc, "table.schema.json", path.name)
            self.expect(doc["columns"] == expected, f"{path.name}: columns {doc['columns']}")
            self.expect(all(len(r) == len(expected) for r in doc["rows"]), f"{path.name}: ragged rows")
            return
        lines = path.read_text(encoding="utf-8").splitlines()
        self.expect(lines[0].startswith("# manifest "), f"{path.name}: missing manifest line")
        self.validate(json.loads(lines[0][len("# manifest "):]), "manifest.schema.json", path.name + " manifest")
        rows = list(csv.reader(lines[1:]))
        self.expect(rows[0] == expected, f"{path.name}: header {rows[0]}")
        self.expect(all(len(r) == len(expected) for r in rows[1:]), f"{path.name}: ragged rows")

    def output_dir(self, out):
        for path in sorted(out.iterdir()):
            if path.name.startswith("manifest_"):
                self.validate(json.loads(path.read_text()), "run_record.schema.json", path.name)
            elif path.name == "stability.json":
                self.validate(json.loads(path.read_text()), "stability.schema.json", path.name)
            elif path.name == "compare_summary.json":
                self.validate(json.loads(path.read_text()), "compare_summary.schema.json", path.name)
            else:
                self.table(path)


def main():
    binary, schema_dir, scenario_dir = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    checker = Checker(schema_dir)

    for path in sorted(scenario_dir.glob("*.json")):
        checker.validate(json.loads(path.read_text()), "scenario.schema.json", f"scenarios/{path.name}")
    names = subprocess.run([binary, "scenarios"], check=True, capture_output=True, text=True).stdout.split()
    for name in names:
        shown = subprocess.run([binary, "scenarios", "--show", name], check=True, capture_output=True, text=True)
        checker.validate(json.loads(shown.stdout), "scenario.schema.json", f"built-in {name}")

    runs = [
        ["analyze", "--scenario", "scalar-toy", "--mu", "0.5,1.5", "--horizon", "50"],
        ["simulate", "--scenario", "example2", "--mu", "0.01", "--horizon", "40", "--trials", "8"],
        ["stability", "--scenario", "scalar-toy", "--mu", "0.5,1.5"],
        ["compare", "--scenario", "example2", "--mu", "0.01", "--horizon", "40", "--trials", "8"],
    ]
    with tempfile.TemporaryDirectory() as tmp:
        for fmt in ("csv", "json"):
            for i, args in enumerate(runs):
                out = pathlib.Path(tmp) / f"{fmt}{i}"
                res = subprocess.run([binary, *args, "--format", fmt, "--out", str(out)], capture_output=True, text=True)
                checker.expect(res.returncode == 0, f"{' '.join(args)}: exit {res.returncode}: {res.stderr.strip()}")
                checker.output_dir(out)

    print(f"{checker.checked} checks, {checker.failures} failures")
    return 1 if checker.failures else 0


if __name__ == "__main__":
    sys.exit(main())
