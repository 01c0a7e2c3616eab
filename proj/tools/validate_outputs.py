#!/usr/bin/env python3
"""Run mvlab on small configs and validate every output against schemas/."""
import argparse
import copy
import csv
import json
import pathlib
import subprocess
import sys

import jsonschema

ROOT = pathlib.Path(__file__).resolve().parent.parent
SCHEMAS = ROOT / "schemas"
CONFIGS = ROOT / "configs"

SMALL_RATE = {"n_grid": [16, 32, 64], "replications": 4}

# (name, subcommand, config, experiment overrides, solver overrides, summary schema)
RUNS = [
    ("simulate", "simulate", "simulate_linear.json", {}, {}, "summary.simulate"),
    ("picard", "picard", "c05_picard_cubic.json", {}, {"m": 200}, "summary.picard"),
    ("poc", "poc", "c02_iid_rate.json", dict(SMALL_RATE, kind="weak"), {}, "summary.rate"),
    ("strong", "strong-poc", "c04_strong_poc_linear.json", SMALL_RATE, {}, "summary.rate"),
    ("common", "common-noise", "c10_common_noise.json", dict(SMALL_RATE, k=2), {}, "summary.rate"),
    ("common_sim", "common-noise", "c10_common_noise.json", {"mode": "simulate", "n": 16}, {"m": 16},
     "summary.common_simulate"),
    ("moments", "moments", "c07_moments_cubic.json", {}, {"m": 100}, "summary.moments"),
    ("selftest", "wasserstein-selftest", "c08_wasserstein_selftest.json", {}, {}, "summary.selftest"),
    ("assumptions", "check-assumptions", "check_assumptions_no_damping.json", {"trials": 200}, {},
     "summary.assumptions"),
]

CSV_TABLES = {"paths.csv", "flow.csv", "jumps.csv", "picard_trace.csv", "rate.csv", "moments.csv",
              "selftest.csv", "assumptions.csv"}


def load(name):
    return json.loads((SCHEMAS / name).read_text())


def check_cell(value, field, where):
    kind = field["type"]
    if value == "":
        return
    if kind == "integer":
        int(value)
    elif kind == "number":
        float(value)
    elif kind == "boolean":
        if value not in ("true", "false"):
            raise ValueError(f"{where}: '{value}' is not a boolean")
    allowed = field.get("constraints", {}).get("enum")
    if allowed and value not in allowed:
        raise ValueError(f"{where}: '{value}' not in {allowed}")


def check_csv(path, dim):
    table = load(f"csv/{path.stem}.schema.json")
    expected = []
    for field in table["fields"]:
        if field.get("repeat") == "dim":
            expected += [(field["name"].replace("{i}", str(i)), field) for i in range(dim)]
        else:
            expected.append((field["name"], field))
    with path.open(newline="") as f:
        rows = list(csv.reader(f))
    header = rows[0]
    if header != [n for n, _ in expected]:
        raise ValueError(f"{path}: header {header} != {[n for n, _ in expected]}")
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{r}: {len(row)} cells, expected {len(header)}")
        for cell, (name, field) in zip(row, expected):
            check_cell(cell, field, f"{path}:{r}:{name}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("cli", help="path to the mvlab executable")
    parser.add_argument("work", help="scratch directory")
    args = parser.parse_args()
    work = pathlib.Path(args.work)
    work.mkdir(parents=True, exist_ok=True)

    config_schema = load("config.schema.json")
    for cfg in sorted(CONFIGS.glob("*.json")):
        schema = load("phi_grid.schema.json") if cfg.name.startswith("c01_") else config_schema
        jsonschema.validate(json.loads(cfg.read_text()), schema)
    print(f"configs: {len(list(CONFIGS.glob('*.json')))} valid")

    manifest_schema = load("manifest.schema.json")
    failures = 0
    for name, sub, config, exp, solver, summary in RUNS:
        doc = json.loads((CONFIGS / config).read_text())
        doc = copy.deepcopy(doc)
        doc.setdefault("experiment", {}).update(exp)
        doc["solver"].update(solver)
        cfg_path = work / f"{name}.json"
        cfg_path.write_text(json.dumps(doc))
        out = work / name
        proc = subprocess.run([args.cli, sub, "--config", str(cfg_path), "--out", str(out)],
                              capture_output=True, text=True)
        if proc.returncode not in (0, 1):
            print(f"{name}: exit {proc.returncode}: {proc.stderr.strip()}")
            failures += 1
            continue
        try:
            manifest = json.loads((out / "manifest.json").read_text())
            jsonschema.validate(manifest, manifest_schema)
            jsonschema.validate(json.loads((out / f"{sub}.json").read_text()), load(f"{summary}.schema.json"))
            listed = set(manifest["outputs"]) | {"manifest.json"}
            on_disk = {p.name for p in out.iterdir()}
            if listed != on_disk:
                raise ValueError(f"outputs {sorted(listed)} != files {sorted(on_disk)}")
            for f in sorted(listed & CSV_TABLES):
                check_csv(out / f, doc["dim"])
            print(f"{name}: ok ({', '.join(sorted(listed))})")
        except (ValueError, jsonschema.ValidationError, OSError) as e:
            print(f"{name}: {e}")
            failures += 1
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
