"""JSON/CSV serialization with deterministic bytes.

Points of R∞ serialize as numbers, with the string "inf" for the point at
infinity.  All emitted JSON uses sorted keys and compact separators and
all floats use their shortest round-trip representation, so identical
inputs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from .autmeasure import Atom, AutomorphicAtoms, FundamentalMeasure
from .errors import ValidationError
from .finitegap import Divisor, GapSet
from .herglotz import HerglotzData, WeightSolution
from .moebius import INF, ExtendedReal, MoebiusMap, canon_point
from .schottky import CircleDatum, SchottkyConfig


def point_to_json(x: ExtendedReal):
    x = canon_point(x)
    return "inf" if math.isinf(x) else x


def point_from_json(v) -> ExtendedReal:
    if v == "inf":
        return INF
    if isinstance(v, (int, float)):
        return canon_point(float(v))
    raise ValidationError(f"not a point of R-infinity: {v!r}")


def moebius_to_json(g: MoebiusMap) -> list[float]:
    return [g.a, g.b, g.c, g.d]


def moebius_from_json(v) -> MoebiusMap:
    if not (isinstance(v, (list, tuple)) and len(v) == 4):
        raise ValidationError(f"a Moebius map serializes as [a, b, c, d]: {v!r}")
    return MoebiusMap(*(float(x) for x in v))


def config_to_json(config: SchottkyConfig) -> dict:
    return {
        "circles": [{"c": cd.c, "r": cd.r} for cd in config.circles],
        "max_word_length": config.max_word_length,
        "element_cap": config.element_cap,
    }


def config_from_json(v: dict) -> SchottkyConfig:
    circles = tuple(
        CircleDatum(float(c["c"]), float(c["r"])) for c in v.get("circles", [])
    )
    return SchottkyConfig(
        circles=circles,
        max_word_length=int(v.get("max_word_length", 12)),
        element_cap=int(v.get("element_cap", 5_000_000)),
    )


def measure_to_json(measure: FundamentalMeasure) -> dict:
    return {
        "atoms": [
            {"n": n, "point": point_to_json(a.point), "weight": a.weight}
            for n, part in enumerate(measure.atoms, start=1)
            for a in part
        ]
    }


def measure_from_json(config: SchottkyConfig, v: dict) -> FundamentalMeasure:
    parts: list[list[Atom]] = [[] for _ in range(config.n_circles)]
    for rec in v.get("atoms", []):
        n = int(rec["n"])
        if not (1 <= n <= config.n_circles):
            raise ValidationError(f"atom circle index {n} out of range")
        parts[n - 1].append(Atom(point_from_json(rec["point"]), float(rec["weight"])))
    return FundamentalMeasure(config, tuple(tuple(p) for p in parts))


def herglotz_to_json(F: HerglotzData) -> dict:
    return {
        "a": F.a,
        "atoms": [
            {"point": float(p), "weight": float(w)}
            for p, w in zip(F.points, F.weights)
        ],
        "atom_at_inf": F.weight_at_inf,
    }


def herglotz_from_json(v: dict) -> HerglotzData:
    atoms = [(point_from_json(r["point"]), float(r["weight"])) for r in v.get("atoms", [])]
    F = HerglotzData.from_atoms(atoms, a=float(v.get("a", 0.0)))
    extra = float(v.get("atom_at_inf", 0.0))
    if extra:
        return HerglotzData(F.a, F.points, F.weights, F.weight_at_inf + extra)
    return F


def solution_to_json(sol: WeightSolution) -> dict:
    return {
        "c": list(sol.c),
        "residual": sol.residual,
        "uniqueness_gap": "inf" if math.isinf(sol.uniqueness_gap) else sol.uniqueness_gap,
    }


def gaps_to_json(gaps: GapSet) -> list[list[float]]:
    return [[a, b] for a, b in gaps.gaps]


def gaps_from_json(v) -> GapSet:
    return GapSet(tuple((float(a), float(b)) for a, b in v))


def divisor_to_json(div: Divisor) -> list[dict]:
    return [{"mu": m, "sigma": s} for m, s in zip(div.mus, div.sigmas)]


def divisor_from_json(gaps: GapSet, v) -> Divisor:
    return Divisor(
        gaps,
        tuple(float(r["mu"]) for r in v),
        tuple(int(r.get("sigma", 1)) for r in v),
    )


def word_to_str(word: Sequence[int]) -> str:
    return " ".join(str(s) for s in word)


# ---------------------------------------------------------------------------
# deterministic emission


def _jsonable(obj: Any) -> Any:
    """Recursively make obj JSON-safe; non-finite floats become 'inf'."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            raise ValidationError("refusing to serialize NaN")
        return "inf" if math.isinf(obj) else obj
    if hasattr(obj, "item"):  # numpy scalar
        return _jsonable(obj.item())
    raise ValidationError(f"not JSON-serializable: {type(obj)!r}")


def canonical_dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_sha256(config_dict: dict) -> str:
    return hashlib.sha256(canonical_dumps(config_dict).encode("utf-8")).hexdigest()


def write_json(path: Path, obj: Any) -> None:
    path.write_text(
        json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n",
        encoding="utf-8",
    )


def format_cell(v: Any) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return repr(v)
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def extension_header_json(ext: AutomorphicAtoms) -> dict:
    return {
        "L": ext.max_word_length,
        "tail_ratio": ext.tail_ratio,
        "tail_mass": ext.tail_mass,
        "total_mass": ext.total_mass,
        "atom_count": int(len(ext.points)),
    }


def extension_rows(ext: AutomorphicAtoms) -> Iterable[tuple[str, float, float]]:
    for word, _n, _base, point, weight in ext.records():
        yield word_to_str(word), point, weight
