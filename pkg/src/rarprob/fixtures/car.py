"""Electric-car model with charging modes and a bounded number of detours.

Each charge/drive round gets its own copy of the locations, so the detour
clock ``r`` is active only in rounds that may still be followed by a detour.
This keeps the model Zeno-free by construction and matches the expected
number of enrolled delays (2, 5, 8 for 0, 1, 2 detours).
"""

from __future__ import annotations

import json
from pathlib import Path

# (name, invariant on x, rate interval) per variant; the last charging mode runs up to 10
_MODES = {
    "A": [("chA", [0, 10], [3, 6])],
    "AB": [("chA", [0, 3], [3, 6]), ("chB", [3, 10], [2, 5])],
    "ABC": [("chA", [0, 3], [3, 6]), ("chB", [3, 8], [2, 5]), ("chC", [8, 10], [1, 2])],
}
ROUND_TIME = 21


def car_model_dict(variant: str = "A", detours: int = 0, singular: bool = False) -> dict:
    if variant not in _MODES:
        raise ValueError(f"unknown variant {variant!r}; pick one of {sorted(_MODES)}")
    if detours < 0:
        raise ValueError("detours must be nonnegative")
    modes = _MODES[variant]
    clocks = ["c", "d"] + (["r"] if detours else [])

    def rate(iv):
        return [iv[0], iv[0]] if singular else list(iv)

    def loc(x_inv, x_rate, active=(), q_rate=0, initial=None):
        d = {
            "invariant": {"x": list(x_inv), "q": [None, 0]},
            "flow": {"t": [1, 1], "x": list(x_rate), "q": [q_rate, q_rate]},
            "clock_rates": {c: 1 for c in active},
        }
        if initial is not None:
            d["initial"] = initial
        return d

    locations: dict = {}
    edges: list = []
    sedges: list = []
    for i in range(detours + 1):
        last_round = i == detours
        init = {"t": [0, 0], "x": [0, 2], "q": [0, 0]} if i == 0 else None
        for k, (name, inv, rt) in enumerate(modes):
            locations[f"{name}_{i}"] = loc(inv, rate(rt), ["c"], initial=init if k == 0 else None)
            if k + 1 < len(modes):
                edges.append({"source": f"{name}_{i}", "target": f"{modes[k + 1][0]}_{i}",
                              "guard": {"x": [inv[1], inv[1]]}})
        locations[f"full_{i}"] = loc([10, 10], [0, 0], ["c"])
        edges.append({"source": f"{modes[-1][0]}_{i}", "target": f"full_{i}", "guard": {"x": [10, 10]}})
        for name, _, _ in modes:
            sedges.append({"source": f"{name}_{i}", "clock": "c", "target": f"driving_{i}"})
        sedges.append({"source": f"full_{i}", "clock": "c", "target": f"driving_{i}"})

        locations[f"driving_{i}"] = loc([0, 10], [-1, -1], ["d"] if last_round else ["d", "r"])
        locations[f"arrival_{i}"] = loc([0, 10], [0, 0])
        locations[f"empty_{i}"] = loc([0, 10], [0, 0])
        edges.append({"source": f"driving_{i}", "target": f"empty_{i}", "guard": {"x": [0, 0]}})
        sedges.append({"source": f"driving_{i}", "clock": "d", "target": f"arrival_{i}"})
        if not last_round:
            sedges.append({"source": f"driving_{i}", "clock": "r", "target": f"detour_{i}"})
            locations[f"detour_{i}"] = loc([0, 10], [-1, -1], ["d"])
            edges.append({"source": f"detour_{i}", "target": f"empty_{i}", "guard": {"x": [0, 0]}})
            sedges.append({"source": f"detour_{i}", "clock": "d", "target": f"charge_{i}"})
            # q is the only variable moving here and q <= 0 holds, so no time passes
            locations[f"charge_{i}"] = loc([0, 10], [0, 0], q_rate=1)
            for name, inv, _ in modes:
                edges.append({"source": f"charge_{i}", "target": f"{name}_{i + 1}",
                              "guard": {"x": list(inv)}})
            edges.append({"source": f"charge_{i}", "target": f"full_{i + 1}", "guard": {"x": [10, 10]}})

    dists = {
        "c": {"kind": "folded_normal", "mu": 2, "sigma": 2},
        "d": {"kind": "folded_normal", "mu": 4, "sigma": 1},
    }
    bounds = {"c": detours + 1, "d": detours + 1}
    if detours:
        dists["r"] = {"kind": "exponential", "lambda": 2}
        bounds["r"] = detours
    kind = "singular" if singular else "rectangular"
    return {
        "name": f"car_{variant}_{kind}_{detours}",
        "variables": ["t", "x", "q"],
        "clocks": clocks,
        "distributions": dists,
        "expiration_bounds": bounds,
        "global_clock": "t",
        "t_max": ROUND_TIME * (detours + 1),
        "locations": locations,
        "edges": edges,
        "stochastic_edges": sedges,
        "goal": {"locations": [f"empty_{i}" for i in range(detours + 1)], "constraints": ["x = 0"]},
    }


def write_fixture(path, **kwargs) -> Path:
    path = Path(path)
    path.write_text(json.dumps(car_model_dict(**kwargs), indent=1) + "\n")
    return path
