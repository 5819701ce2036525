"""Batch command-line driver.

    rlx <subcommand> --config cfg.json --out dir/ [--quiet]

Subcommands: group, extend, poincare, periods, solve, hfun, extreme,
verify.  The config is a single JSON document validated against the
shipped schema; all numeric choices live there, flags only control paths
and verbosity.  Reports are JSON (scalars, solutions) plus CSV (grids,
tables), both derived deterministically from the config: two runs with
the same config produce identical bytes.  Timing goes to stdout only.

Exit codes: 0 success, 1 validation/domain error, 2 convergence or
degeneracy error (including failed verification checks).
"""

from __future__ import annotations

import argparse
import importlib.metadata
import importlib.resources
import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import acceptance
from . import autmeasure as am
from . import finitegap as fg
from . import herglotz as hz
from . import jsonio
from . import schottky as sk
from .errors import (
    ConvergenceError,
    DomainError,
    ResourceLimitError,
    RlxError,
    ValidationError,
)

_SUBCOMMANDS = (
    "group",
    "extend",
    "poincare",
    "periods",
    "solve",
    "hfun",
    "extreme",
    "verify",
)


def _load_schema(name: str) -> dict:
    ref = importlib.resources.files("rlx") / "schemas" / name
    return json.loads(ref.read_text(encoding="utf-8"))


def _package_version() -> str:
    try:
        return importlib.metadata.version("rlx")
    except importlib.metadata.PackageNotFoundError:
        return "unversioned"


def load_config(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}")
    try:
        jsonschema.validate(raw, _load_schema("run_config.schema.json"))
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"config does not match the schema: {exc.message}")
    return raw


def _require(config: dict, key: str, sub: str):
    if key not in config:
        raise ValidationError(f"subcommand {sub!r} needs config key {key!r}")
    return config[key]


def _schottky(config: dict, sub: str) -> sk.SchottkyConfig:
    return jsonio.config_from_json(_require(config, "schottky", sub))


def _measure(config: dict, schottky: sk.SchottkyConfig, sub: str) -> am.FundamentalMeasure:
    return jsonio.measure_from_json(schottky, _require(config, "measure", sub))


def _gap_data(config: dict, sub: str) -> tuple[fg.GapSet, fg.Divisor]:
    gaps = jsonio.gaps_from_json(_require(config, "gaps", sub))
    divisor = jsonio.divisor_from_json(gaps, _require(config, "divisor", sub))
    return gaps, divisor


# ---------------------------------------------------------------------------
# subcommand handlers: each returns (results, checks, extra provenance)


def _run_group(config: dict, outdir: Path):
    schottky = _schottky(config, "group")
    fi = sk.fundamental_intervals(schottky)
    sample_len = int(config.get("limit_sample_length", min(schottky.max_word_length, 10)))
    rows = [
        (n, i, piece.left, piece.right)
        for n, pieces in enumerate(fi.pieces, start=1)
        for i, piece in enumerate(pieces)
    ]
    jsonio.write_csv(outdir / "intervals.csv", ("n", "piece_index", "left", "right"), rows)
    if schottky.n_generators > 0:
        sample = sk.limit_set_sample(schottky, sample_len)
    else:
        sample = []
    jsonio.write_csv(outdir / "limit_set.csv", ("point",), [(p,) for p in sample])
    gens = [jsonio.moebius_to_json(g) for g in sk.generators(schottky)]
    hyperbolic = all(
        sk.generators(schottky) and abs(g.trace) > 2.0 for g in sk.generators(schottky)
    )
    results = {
        "generators": gens,
        "n_circles": schottky.n_circles,
        "word_count": sk.word_count(schottky.n_generators, schottky.max_word_length),
        "limit_sample_length": sample_len,
        "limit_sample_size": len(sample),
    }
    checks = [
        {"name": "generators_hyperbolic", "passed": bool(hyperbolic or not gens)},
    ]
    return results, checks, {"max_word_length": schottky.max_word_length}


def _run_extend(config: dict, outdir: Path):
    schottky = _schottky(config, "extend")
    measure = _measure(config, schottky, "extend")
    ext = am.extend(measure)
    jsonio.write_csv(
        outdir / "automorphic_atoms.csv",
        ("word", "point", "weight"),
        jsonio.extension_rows(ext),
    )
    restriction = am.restrict(ext)
    roundtrip = am.max_atom_difference(restriction, measure)
    results = {
        "extension": jsonio.extension_header_json(ext),
        "restriction_roundtrip_error": roundtrip,
    }
    checks = [
        {
            "name": "restriction_recovers_source",
            "passed": bool(roundtrip <= 1e-12),
            "value": roundtrip,
            "tolerance": 1e-12,
        },
        {
            "name": "tail_ratio_below_refusal",
            "passed": bool(ext.tail_ratio < am.TAIL_REFUSE),
            "value": ext.tail_ratio,
            "tolerance": am.TAIL_REFUSE,
        },
    ]
    prov = {
        "max_word_length": ext.max_word_length,
        "tail_ratio": ext.tail_ratio,
        "tail_mass": ext.tail_mass,
    }
    return results, checks, prov


def _run_poincare(config: dict, outdir: Path):
    schottky = _schottky(config, "poincare")
    points = [jsonio.point_from_json(p) for p in _require(config, "points", "poincare")]
    table = am.poincare_many(schottky, points)
    jsonio.write_csv(
        outdir / "poincare.csv",
        ("x", "value", "tail_ratio", "tail_mass"),
        [(r.point, r.value, r.tail_ratio, r.tail_mass) for r in table],
    )
    jsonio.write_csv(
        outdir / "poincare_lengths.csv",
        ("x", "length", "sum"),
        [
            (r.point, length, s)
            for r in table
            for length, s in enumerate(r.per_length)
        ],
    )
    results = {
        "values": [
            {
                "x": jsonio.point_to_json(r.point),
                "value": r.value,
                "tail_ratio": r.tail_ratio,
                "tail_mass": r.tail_mass,
            }
            for r in table
        ]
    }
    checks = [
        {
            "name": "identity_term_lower_bound",
            "passed": bool(all(r.value >= 1.0 for r in table)),
        }
    ]
    return results, checks, {"max_word_length": schottky.max_word_length}


def _run_periods(config: dict, outdir: Path):
    schottky = _schottky(config, "periods")
    measure = _measure(config, schottky, "periods")
    A = hz.period_matrix(schottky, measure)
    jsonio.write_csv(
        outdir / "period_matrix.csv",
        ("generator", "circle", "value"),
        [
            (j + 1, n + 1, float(A[j, n]))
            for j in range(A.shape[0])
            for n in range(A.shape[1])
        ],
    )
    results = {"period_matrix": [[float(v) for v in row] for row in A]}
    checks = [{"name": "shape", "passed": A.shape == (schottky.n_circles - 1, schottky.n_circles)}]
    return results, checks, {"max_word_length": schottky.max_word_length}


def _run_solve(config: dict, outdir: Path):
    schottky = _schottky(config, "solve")
    measure = _measure(config, schottky, "solve")
    A = hz.period_matrix(schottky, measure)
    sol = hz.solve_weights(A)
    results = {"solution": jsonio.solution_to_json(sol)}
    norm_a = float(np.linalg.norm(A)) if A.size else 0.0
    checks = [
        {
            "name": "kernel_residual",
            "passed": bool(sol.residual <= 1e-8 * norm_a or norm_a == 0.0),
            "value": sol.residual,
            "tolerance": 1e-8 * norm_a,
        },
        {"name": "weights_positive", "passed": bool(min(sol.c) > 0.0)},
    ]
    return results, checks, {"max_word_length": schottky.max_word_length}


def _run_hfun(config: dict, outdir: Path):
    gaps, divisor = _gap_data(config, "hfun")
    grid_spec = _require(config, "grid", "hfun")
    eps = float(config.get("eps", 1e-6))
    ts = np.linspace(
        float(grid_spec["t_min"]), float(grid_spec["t_max"]), int(grid_spec["count"])
    )
    exceptional = [x for gap in gaps.gaps for x in gap] + list(divisor.mus)
    keep = [
        float(t)
        for t in ts
        if min(abs(t - e) for e in exceptional) >= fg.EDGE_EXCLUSION
    ]
    vals = fg.eval_h(gaps, divisor.mus, np.asarray(keep) + 1j * eps)
    xi_meas = np.angle(vals) / np.pi
    xi_pred = [fg.krein_xi(divisor, t) for t in keep]
    jsonio.write_csv(
        outdir / "hgrid.csv",
        ("t", "re_h", "im_h", "xi_pred", "xi_meas"),
        [
            (t, float(v.real), float(v.imag), p, float(m))
            for t, v, p, m in zip(keep, vals, xi_pred, xi_meas)
        ],
    )
    deviation = fg.krein_check(divisor, keep, eps)
    residues = [fg.residue(gaps, divisor.mus, n) for n in range(gaps.n_gaps)]
    norm_gap = abs(complex(fg.eval_h(gaps, divisor.mus, 1e4j)) - 2j)
    results = {
        "krein_deviation": deviation,
        "grid_points": len(keep),
        "residues": [
            {
                "gap": n + 1,
                "value": r.value,
                "inverse_sqrt_edge": r.inverse_sqrt_edge,
                "side": fg.assign_atom(divisor, n),
            }
            for n, r in enumerate(residues)
        ],
        "normalization_gap_at_1e4i": norm_gap,
    }
    checks = [
        {
            "name": "krein_deviation",
            "passed": bool(deviation <= 1e-3),
            "value": deviation,
            "tolerance": 1e-3,
        },
        {
            "name": "normalization",
            "passed": bool(norm_gap <= 1e-3),
            "value": norm_gap,
            "tolerance": 1e-3,
        },
    ]
    return results, checks, {}


def _run_extreme(config: dict, outdir: Path):
    schottky = _schottky(config, "extreme")
    measure = _measure(config, schottky, "extreme")
    extreme = hz.is_extreme(measure)
    results: dict = {"is_extreme": extreme}
    checks = [{"name": "analysis_complete", "passed": True}]
    if extreme:
        parts = hz.to_normalized(measure)
        results["normalized_masses"] = list(measure.circle_masses())
        results["normalized_parts"] = [jsonio.measure_to_json(p) for p in parts]
    else:
        split = hz.split_nonextreme(measure)
        recombined = am.combine(
            [split.first, split.second], [split.mixing, 1.0 - split.mixing]
        )
        err = am.max_atom_difference(recombined, measure)
        results["split"] = {
            "mixing": split.mixing,
            "first": jsonio.measure_to_json(split.first),
            "second": jsonio.measure_to_json(split.second),
            "recombination_error": err,
        }
        checks.append(
            {
                "name": "recombination",
                "passed": bool(err <= 1e-8),
                "value": err,
                "tolerance": 1e-8,
            }
        )
    return results, checks, {"max_word_length": schottky.max_word_length}


def _run_verify(config: dict, outdir: Path, quiet: bool = False):
    seed = int(config.get("seed", 0))
    results = acceptance.run_all(seed=seed)
    for r in results:
        if not quiet:
            print(r.line)
    payload = {
        "criteria": [
            {"id": r.cid, "title": r.title, "passed": r.passed, "details": r.details}
            for r in results
        ]
    }
    checks = [
        {"name": f"criterion_{r.cid:02d}", "passed": bool(r.passed)} for r in results
    ]
    return payload, checks, {}


def _dispatch(sub: str, config: dict, outdir: Path, quiet: bool):
    if sub == "group":
        return _run_group(config, outdir)
    if sub == "extend":
        return _run_extend(config, outdir)
    if sub == "poincare":
        return _run_poincare(config, outdir)
    if sub == "periods":
        return _run_periods(config, outdir)
    if sub == "solve":
        return _run_solve(config, outdir)
    if sub == "hfun":
        return _run_hfun(config, outdir)
    if sub == "extreme":
        return _run_extreme(config, outdir)
    if sub == "verify":
        return _run_verify(config, outdir, quiet)
    raise ValidationError(f"unknown subcommand {sub!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rlx",
        description="Automorphic measures and finite-gap function toolkit",
    )
    parser.add_argument("subcommand", choices=_SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", required=True, help="output directory for reports")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    started = time.perf_counter()
    try:
        config = load_config(args.config)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        results, checks, extra_prov = _dispatch(
            args.subcommand, config, outdir, args.quiet
        )
        passed = all(c["passed"] for c in checks)
        provenance = {
            "config_sha256": jsonio.config_sha256(config),
            "package": f"rlx {_package_version()}",
            "seed": int(config.get("seed", 0)),
            **extra_prov,
        }
        report = {
            "subcommand": args.subcommand,
            "provenance": provenance,
            "results": results,
            "checks": checks,
            "pass": passed,
        }
        jsonschema.validate(
            json.loads(jsonio.canonical_dumps(report)),
            _load_schema("report.schema.json"),
        )
        jsonio.write_json(outdir / f"{args.subcommand}_report.json", report)
        if not args.quiet:
            elapsed = time.perf_counter() - started
            status = "ok" if passed else "FAILED CHECKS"
            print(f"rlx {args.subcommand}: {status} ({elapsed:.1f}s), reports in {outdir}")
        return 0 if passed else 2
    except (ValidationError, DomainError, ResourceLimitError) as exc:
        print(f"rlx {args.subcommand}: invalid input: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"rlx {args.subcommand}: convergence failure: {exc}", file=sys.stderr)
        return 2
    except RlxError as exc:
        print(f"rlx {args.subcommand}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
