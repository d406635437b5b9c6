"""Writes cases/synthetic.yaml: a 5-bus monthly hydrothermal system."""

import math
import random
import sys

import yaml

T, S = 12, 8
BLOCKS = [(0.15, 1.25), (0.50, 1.0), (0.35, 0.75)]
SEASON = [1.5, 1.6, 1.4, 1.0, 0.7, 0.5, 0.4, 0.4, 0.5, 0.7, 1.0, 1.3]


def flow(d):
    return yaml.dump(d, default_flow_style=True, width=1000, sort_keys=False).strip()


def main(path):
    rng = random.Random(2024)
    base_load = {"B1": 20.0, "B2": 30.0, "B3": 90.0, "B4": 110.0, "B5": 70.0}
    buses = list(base_load)
    growth = [1.0 + 0.004 * t for t in range(T)]
    winter = [1.0 + 0.08 * math.cos(2 * math.pi * (t - 6) / 12) for t in range(T)]
    blocks = []
    for frac, shape in BLOCKS:
        load = [[round(base_load[n] * shape * growth[t] * winter[t], 2) for n in buses] for t in range(T)]
        blocks.append({"duration": frac, "load": load})

    wind = []
    for t in range(T):
        stage = []
        for _ in BLOCKS:
            stage.append([round(max(0.0, rng.gauss(22.0, 9.0)), 2) for _ in range(S)])
        wind.append(stage)

    case = {
        "schema": "gtep-case",
        "version": 1,
        "name": "synthetic",
        "horizon": {"stages": T, "scenarios": S, "openings": S, "stage_hours": 730,
                    "discount_rate": 0.0064, "start_year": 2030, "stages_per_year": 12},
        "deficit_cost": 1000,
        "buses": [{"id": n, "voltage_kv": 230} for n in buses],
        "circuits": [
            {"id": "L12", "from": "B1", "to": "B2", "susceptance": 8.0, "rating": 180},
            {"id": "L23", "from": "B2", "to": "B3", "susceptance": 6.0, "rating": 140},
            {"id": "L34", "from": "B3", "to": "B4", "susceptance": 5.0, "rating": 60},
            {"id": "L45", "from": "B4", "to": "B5", "susceptance": 5.0, "rating": 50},
            {"id": "C13", "from": "B1", "to": "B3", "susceptance": 4.0, "rating": 100, "status": "candidate"},
            {"id": "C24", "from": "B2", "to": "B4", "susceptance": 4.0, "rating": 90, "status": "candidate"},
            {"id": "C35", "from": "B3", "to": "B5", "susceptance": 4.0, "rating": 80, "status": "candidate"},
            {"id": "C25", "from": "B2", "to": "B5", "susceptance": 3.0, "rating": 70, "status": "candidate"},
        ],
        "hydros": [
            {"id": "H1", "bus": "B1", "max_storage": 900, "max_turbining": 320,
             "production_coefficient": 400, "max_block_power": 180, "initial_storage": 450,
             "technology": "hydro"},
            {"id": "H2", "bus": "B2", "max_storage": 300, "max_turbining": 380,
             "production_coefficient": 300, "max_block_power": 160, "upstream": ["H1"],
             "initial_storage": 150, "technology": "hydro"},
        ],
        "thermals": [
            {"id": "T1", "bus": "B4", "capacity": 110, "variable_cost": 45, "technology": "gas"},
            {"id": "T2", "bus": "B5", "capacity": 70, "variable_cost": 95, "technology": "oil"},
            {"id": "T3", "bus": "B3", "capacity": 60, "variable_cost": 160, "technology": "diesel"},
        ],
        "renewables": [
            {"id": "W1", "bus": "B5", "nameplate_mw": 60, "production": wind, "technology": "wind"},
        ],
        "demand": {"blocks": blocks},
        "candidates": [
            {"id": "P-C13", "kind": "circuit", "device": "C13", "overnight_cost": 6.0e6, "cost_basis": "total"},
            {"id": "P-C24", "kind": "circuit", "device": "C24", "overnight_cost": 5.5e6, "cost_basis": "total"},
            {"id": "P-C35", "kind": "circuit", "device": "C35", "overnight_cost": 4.5e6, "cost_basis": "total"},
            {"id": "P-C25", "kind": "circuit", "device": "C25", "overnight_cost": 7.0e6, "cost_basis": "total"},
        ],
        "logic": [{"kind": "exclusive", "projects": ["P-C35", "P-C25"]}],
        "inflow": {
            "seasons": 12,
            "mean": [[round(220 * f, 1), round(60 * f, 1)] for f in SEASON],
            "stddev": [[round(55 * f, 1), round(18 * f, 1)] for f in SEASON],
            "serial_corr": [[0.6, 0.5] for _ in SEASON],
            "spatial_corr": [[1.0, 0.7], [0.7, 1.0]],
            "initial": [250.0, 70.0],
        },
        "run": {"target_gap": 0.03, "max_iterations": 80, "seed": 1},
    }

    with open(path, "w") as f:
        f.write("# Five-bus monthly hydrothermal system with a wind farm and four candidate circuits.\n")
        f.write("# Generated by tools/make_synthetic_case.py.\n")
        for key in ["schema", "version", "name"]:
            f.write(f"{key}: {case[key]}\n")
        f.write("horizon: " + flow(case["horizon"]) + "\n")
        f.write(f"deficit_cost: {case['deficit_cost']}\n")
        for key in ["buses", "circuits", "hydros", "thermals", "candidates", "logic"]:
            f.write(f"{key}:\n")
            for item in case[key]:
                f.write("  - " + flow(item) + "\n")
        f.write("renewables:\n")
        for w in case["renewables"]:
            head = {k: v for k, v in w.items() if k != "production"}
            f.write("  - " + flow(head)[:-1] + ",\n      production: [\n")
            for t, stage in enumerate(w["production"]):
                f.write("        " + flow(stage) + ("," if t + 1 < T else "") + "\n")
            f.write("      ]}\n")
        f.write("demand:\n  blocks:\n")
        for b in case["demand"]["blocks"]:
            f.write(f"    - duration: {b['duration']}\n      load:\n")
            for row in b["load"]:
                f.write("        - " + flow(row) + "\n")
        f.write("inflow:\n")
        for key, value in case["inflow"].items():
            if isinstance(value, list) and value and isinstance(value[0], list):
                f.write(f"  {key}:\n")
                for row in value:
                    f.write("    - " + flow(row) + "\n")
            else:
                f.write(f"  {key}: " + (flow(value) if isinstance(value, list) else str(value)) + "\n")
        f.write("run: " + flow(case["run"]) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "cases/synthetic.yaml")
