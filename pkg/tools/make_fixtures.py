"""Regenerate the JSON fixtures shipped with the package."""
import json
import math
from pathlib import Path

from riccicert.models import disk_fixture, docking_profile, round_metric, s5_fixture

OUT = Path(__file__).resolve().parents[1] / "src" / "riccicert" / "fixtures"


def dump(name, obj):
    (OUT / name).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def main():
    OUT.mkdir(exist_ok=True)
    dump("s5.json", s5_fixture().to_json())
    dump("disk.json", disk_fixture(2, 4, 0.1).to_json())
    dump("round.json", round_metric(1.0, 2, 2).to_json())
    dump("docking.json", docking_profile().to_json())
    dump("p1_3.json", {"k": 1, "numbers": {"1": 3}})
    dump("k3.json", {"k": 1, "numbers": {"1": -48}})
    dump("ball_pi4.json", {"tangent": [1.0], "sphere_n": [1.0], "sphere_m2": [1.0]})
    dump("socket_half.json", {"tangent": [-0.5], "sphere_n": [-0.5], "sphere_m2": [-0.5]})
    S = math.pi
    dump("family_core.json", {"members": [
        {"nu": 0.0, "boundary": {"kind": "analytic", "family": "sin", "domain": [0.0, S],
                                 "params": {"amplitude": 1.0, "frequency": 1.0}},
         "blocks": {"tangent": [1.0], "sphere_n": [1.0], "sphere_m2": [1.0]}}]})


if __name__ == "__main__":
    main()
