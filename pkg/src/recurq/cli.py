"""Batch front-end: experiment configs in, certificates/tables/traces out.

One binary with subcommands; every run takes a JSON config, writes artifacts
(report.json, CSV traces, sequences) into --out, and exits nonzero when any
certificate or verification fails.  Runs are deterministic given config and
seed; files are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile

import numpy as np
from jsonschema import Draft202012Validator

from . import chains, fock, propagate, recurrence, synth, weyl

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


# -- config schemas -----------------------------------------------------------

_POLY = {"type": "string"}
_HAMILTONIAN = {
    "type": "object",
    "properties": {
        "poly": _POLY,
        "mode_count": {"type": "integer", "minimum": 1},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 2}},
        "levels": {"type": "array", "items": {"type": "number"}},
        "level_formula": {
            "type": "object",
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "coeffs": {"type": "array", "items": {"type": "number"}},
            },
            "required": ["count", "coeffs"],
        },
    },
}
_STATE = {
    "type": "object",
    "properties": {
        "fock": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "random_interior": {"type": "object"},
    },
}
_SYSTEM = {
    "type": "object",
    "properties": {
        "mode_count": {"type": "integer", "minimum": 1},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 2}},
        "generators": {"type": "array", "items": _POLY, "minItems": 1},
    },
    "required": ["mode_count", "dims", "generators"],
}
_INVERTER = {
    "type": "object",
    "properties": {
        "mode": {"enum": ["exact", "pointwise", "finite_net", "energy_bound"]},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "t_max": {"type": "number", "exclusiveMinimum": 0},
        "energy_bounds": {"type": "object"},
    },
    "required": ["mode"],
}
_CHAIN = {
    "type": "object",
    "properties": {
        "n_modes": {"type": "integer", "minimum": 1},
        "omega": {"type": "number", "minimum": 0},
        "couplings": {"type": "array"},
        "control_sites": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "control_degree_cap": {"type": "integer", "minimum": 1},
    },
    "required": ["n_modes", "omega", "couplings", "control_sites"],
}

SCHEMAS = {
    "closure": {
        "type": "object",
        "properties": {
            "mode_count": {"type": "integer", "minimum": 1},
            "generators": {"type": "array", "items": _POLY, "minItems": 1},
            "degree_cap": {"type": "integer", "minimum": 1},
            "dim_cap": {"type": "integer", "minimum": 1},
        },
        "required": ["mode_count", "generators"],
    },
    "propagation": {
        "type": "object",
        "properties": {
            "chain": _CHAIN,
            "degree_cap": {"type": "integer", "minimum": 1},
            "dim_cap": {"type": "integer", "minimum": 1},
        },
        "required": ["chain"],
    },
    "recur": {
        "type": "object",
        "properties": {
            "hamiltonian": _HAMILTONIAN,
            "delta": {"type": "number", "exclusiveMinimum": 0},
            "mode": {"enum": ["pointwise", "finite_net", "energy_bound"]},
            "state": _STATE,
            "net_size": {"type": "integer", "minimum": 1},
            "energy_bound": {"type": "number", "exclusiveMinimum": 0},
            "tau_min": {"type": "number", "minimum": 0},
            "t_max": {"type": "number", "exclusiveMinimum": 0},
            "grid_step": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["hamiltonian", "delta", "mode"],
    },
    "invert": {
        "type": "object",
        "properties": {
            "hamiltonian": _HAMILTONIAN,
            "delta": {"type": "number", "exclusiveMinimum": 0},
            "mode": {"enum": ["pointwise", "finite_net", "energy_bound"]},
            "s": {"type": "number", "minimum": 0},
            "state": _STATE,
            "net_size": {"type": "integer", "minimum": 1},
            "energy_bound": {"type": "number", "exclusiveMinimum": 0},
            "t_max": {"type": "number", "exclusiveMinimum": 0},
            "grid_step": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["hamiltonian", "delta", "mode", "s"],
    },
    "trotter": {
        "type": "object",
        "properties": {
            "system": _SYSTEM,
            "k": {"type": "integer", "minimum": 0},
            "l": {"type": "integer", "minimum": 0},
            "t": {"type": "number", "minimum": 0},
            "ns": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "state": _STATE,
        },
        "required": ["system", "k", "l", "t", "ns"],
    },
    "commutator": {
        "type": "object",
        "properties": {
            "system": _SYSTEM,
            "k": {"type": "integer", "minimum": 0},
            "l": {"type": "integer", "minimum": 0},
            "t": {"type": "number", "minimum": 0},
            "n": {"type": "integer", "minimum": 1},
            "inverter": _INVERTER,
            "state": _STATE,
        },
        "required": ["system", "k", "l", "t", "n", "inverter"],
    },
    "compile": {
        "type": "object",
        "properties": {
            "system": _SYSTEM,
            "target": {},
            "t": {"type": "number"},
            "epsilon": {"type": "number", "exclusiveMinimum": 0},
            "n_budget": {"type": "integer", "minimum": 1},
            "inverter": _INVERTER,
            "state": _STATE,
        },
        "required": ["system", "target", "t", "epsilon", "n_budget", "inverter"],
    },
    "chain-demo": {
        "type": "object",
        "properties": {
            "chain": _CHAIN,
            "dims": {"type": "array", "items": {"type": "integer", "minimum": 2}},
            "targets": {"type": "array", "minItems": 1},
            "epsilon": {"type": "number", "exclusiveMinimum": 0},
            "n_budget": {"type": "integer", "minimum": 1},
            "inverter": _INVERTER,
        },
        "required": ["chain", "dims", "targets", "epsilon", "n_budget", "inverter"],
    },
}


class ConfigError(ValueError):
    pass


def validate_config(subcommand: str, config: dict):
    validator = Draft202012Validator(SCHEMAS[subcommand])
    errors = sorted(validator.iter_errors(config), key=lambda e: e.json_path)
    if errors:
        lines = [f"{e.json_path}: {e.message}" for e in errors]
        raise ConfigError("config schema violations:\n  " + "\n  ".join(lines))


# -- atomic artifact writers ---------------------------------------------------


def _atomic_write(path: str, payload: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, data) -> None:
    _atomic_write(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_csv(path: str, rows) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    for row in rows:
        writer.writerow(row)
    _atomic_write(path, buf.getvalue())


# -- config material -----------------------------------------------------------


def _build_state(state_cfg, spec: fock.TruncationSpec, rng) -> np.ndarray:
    if state_cfg is None:
        return fock.ground_state(spec)
    if "fock" in state_cfg:
        return fock.fock_state(spec, state_cfg["fock"])
    if "random_interior" in state_cfg:
        buffer = int(state_cfg["random_interior"].get("buffer", 0))
        return fock.random_interior_state(spec, rng, buffer)
    raise ConfigError(f"unintelligible state config {state_cfg!r}")


def _build_hamiltonian(cfg, rng):
    """Returns (levels, spectral_data_or_None, spec_or_None)."""
    if "levels" in cfg:
        return np.asarray(cfg["levels"], dtype=float), None, None
    if "level_formula" in cfg:
        lf = cfg["level_formula"]
        return recurrence.polynomial_levels(lf["count"], lf["coeffs"]), None, None
    if "poly" in cfg:
        mode_count = int(cfg.get("mode_count", 1))
        dims = tuple(cfg.get("dims", (32,) * mode_count))
        spec = fock.TruncationSpec(dims)
        H = weyl.as_hermitian(weyl.PolyOp.from_text(cfg["poly"], mode_count))
        sd = recurrence.spectral(fock.represent(H, spec))
        return sd.energies, sd, spec
    raise ConfigError("hamiltonian config needs 'poly', 'levels', or 'level_formula'")


def _build_system(cfg):
    mode_count = int(cfg["mode_count"])
    spec = fock.TruncationSpec(tuple(cfg["dims"]))
    if spec.mode_count != mode_count:
        raise ConfigError("dims length must match mode_count")
    herms = [weyl.as_hermitian(weyl.PolyOp.from_text(text, mode_count))
             for text in cfg["generators"]]
    reps = {k: -1j * fock.represent(H, spec).matrix for k, H in enumerate(herms)}
    return spec, herms, propagate.EvolutionTable(reps)


def _build_inverter(cfg, table, psi0, rng, spec):
    mode = cfg["mode"]
    if mode == "exact":
        return synth.ExactInverter()
    delta = cfg.get("delta")
    if delta is None:
        raise ConfigError("recurrence inverter configs need 'delta'")
    kwargs = {"t_max": cfg.get("t_max")}
    if mode == "pointwise":
        kwargs["state"] = psi0
    elif mode == "finite_net":
        size = int(cfg.get("net_size", 3))
        kwargs["net"] = [fock.random_interior_state(spec, rng, spec.buffer)
                         for _ in range(size)]
    elif mode == "energy_bound":
        kwargs["energy_bounds"] = {int(k): float(v)
                                   for k, v in cfg.get("energy_bounds", {}).items()}
    reps = {k: table.matrix(k) for k in table.indices()}
    return recurrence.RecurrenceInverter.from_skew_reps(reps, delta, mode, **kwargs)


# -- subcommand implementations --------------------------------------------------


def _run_closure(config, out, rng, jobs):
    gens = [weyl.as_skew(weyl.PolyOp.from_text(g, int(config["mode_count"])))
            for g in config["generators"]]
    basis = weyl.lie_closure(gens, config.get("degree_cap", 6), config.get("dim_cap", 64))
    write_json(os.path.join(out, "report.json"), {
        "dim": basis.dim,
        "saturated": basis.saturated,
        "degree_capped": basis.degree_capped,
        "dim_capped": basis.dim_capped,
        "basis": [b.to_text() for b in basis.basis],
    })
    return EXIT_OK


def _run_propagation(config, out, rng, jobs):
    spec = chains.ChainSpec.from_dict(config["chain"])
    report = chains.chain_controllability(
        spec, config.get("degree_cap", 4), config.get("dim_cap", 256))
    write_json(os.path.join(out, "report.json"), report.to_dict())
    write_csv(os.path.join(out, "edges.csv"),
              [["edge_u", "edge_v", "verdict", "closure_dim", "missing"]] +
              [[v.edge[0], v.edge[1], v.verdict, v.closure_dim, v.missing]
               for v in report.edge_verdicts])
    return EXIT_OK if report.controllable else EXIT_FAILURE


def _plan_context(config, rng):
    levels, sd, spec = _build_hamiltonian(config["hamiltonian"], rng)
    mode = config["mode"]
    kwargs = {}
    if mode == "pointwise":
        if sd is None or spec is None:
            raise ConfigError("pointwise mode needs a matrix hamiltonian ('poly')")
        psi = _build_state(config.get("state"), spec, rng)
        kwargs["state_overlaps"] = sd.overlaps(psi)
    elif mode == "finite_net":
        if sd is None or spec is None:
            raise ConfigError("finite_net mode needs a matrix hamiltonian ('poly')")
        size = int(config.get("net_size", 3))
        kwargs["net_overlaps"] = [
            sd.overlaps(fock.random_interior_state(spec, rng, spec.buffer))
            for _ in range(size)]
    elif mode == "energy_bound":
        kwargs["energy_bound"] = float(config["energy_bound"])
    return levels, sd, kwargs


def _run_recur(config, out, rng, jobs):
    levels, sd, kwargs = _plan_context(config, rng)
    trace: list = []
    try:
        plan = recurrence.plan_recurrence(
            levels, float(config["delta"]), config["mode"],
            tau_min=float(config.get("tau_min", 0.0)),
            t_max=config.get("t_max"), grid_step=config.get("grid_step"),
            shift=sd.shift if sd is not None else 0.0, trace=trace, **kwargs)
    except recurrence.RecurrenceSearchError as exc:
        write_json(os.path.join(out, "report.json"), {
            "status": "failed", "error": str(exc),
            "best_time": exc.best_time, "best_objective": exc.best_objective,
        })
        return EXIT_FAILURE
    except recurrence.SpectrumExhaustedError as exc:
        write_json(os.path.join(out, "report.json"),
                   {"status": "failed", "error": str(exc)})
        return EXIT_FAILURE
    finally:
        write_csv(os.path.join(out, "scan.csv"),
                  [["T", "objective"]] + [[t, f] for t, f in trace])
    write_json(os.path.join(out, "plan.json"), plan.to_dict())
    write_json(os.path.join(out, "report.json"),
               {"status": "ok", "time": plan.time, "N": plan.N})
    return EXIT_OK


def _run_invert(config, out, rng, jobs):
    levels, sd, kwargs = _plan_context(config, rng)
    if sd is None:
        raise ConfigError("invert needs a matrix hamiltonian ('poly')")
    mode = config["mode"]
    inv_kwargs = {}
    if mode == "pointwise":
        psi = _build_state(config.get("state"), sd.source.spec if sd.source else None, rng)
        inv_kwargs["state"] = psi
    elif mode == "finite_net":
        size = int(config.get("net_size", 3))
        spec = sd.source.spec
        inv_kwargs["net"] = [fock.random_interior_state(spec, rng, spec.buffer)
                             for _ in range(size)]
    elif mode == "energy_bound":
        inv_kwargs["energy_bound"] = float(config["energy_bound"])
    try:
        res = recurrence.invert(sd, float(config["s"]), float(config["delta"]),
                                mode, t_max=config.get("t_max"),
                                grid_step=config.get("grid_step"), **inv_kwargs)
    except (recurrence.RecurrenceSearchError,
            recurrence.SpectrumExhaustedError) as exc:
        write_json(os.path.join(out, "report.json"),
                   {"status": "failed", "error": str(exc)})
        return EXIT_FAILURE
    write_json(os.path.join(out, "plan.json"), res.plan.to_dict())
    write_json(os.path.join(out, "report.json"),
               {"status": "ok", "t_star": res.t_star, "time": res.plan.time})
    return EXIT_OK


def _run_trotter(config, out, rng, jobs):
    spec, _, table = _build_system(config["system"])
    psi0 = _build_state(config.get("state"), spec, rng)
    rows = propagate.trotter_errors(int(config["k"]), int(config["l"]),
                                    float(config["t"]), config["ns"], psi0, table)
    write_csv(os.path.join(out, "convergence.csv"),
              [["n", "error"]] + [[n, e] for n, e in rows])
    write_json(os.path.join(out, "report.json"),
               {"errors": {str(n): e for n, e in rows}})
    return EXIT_OK


def _run_commutator(config, out, rng, jobs):
    spec, _, table = _build_system(config["system"])
    psi0 = _build_state(config.get("state"), spec, rng)
    k, l, t, n = int(config["k"]), int(config["l"]), float(config["t"]), int(config["n"])
    A, B = table.matrix(k), table.matrix(l)
    target = propagate.expm_skew(A @ B - B @ A, t * t) @ psi0
    inverter = _build_inverter(config["inverter"], table, psi0, rng, spec)
    word = propagate.commutator_word(k, l, t, n)
    result = {"n": n, "t": t}
    if isinstance(inverter, synth.ExactInverter):
        out_state = propagate.evolve_signed(word, psi0, table)
        result["physical"] = False
    else:
        try:
            seq = propagate.commutator_sequence(k, l, t, n, inverter)
        except recurrence.RecurrenceSearchError as exc:
            write_json(os.path.join(out, "report.json"),
                       {"status": "failed", "error": str(exc)})
            return EXIT_FAILURE
        out_state = propagate.evolve(seq, psi0, table)
        result["physical"] = True
        write_json(os.path.join(out, "sequence.json"), seq.to_dict())
        write_json(os.path.join(out, "plans.json"),
                   [p.to_dict() for p in inverter.plans().values()])
    result["error"] = propagate.state_error(out_state, target)
    result["fidelity"] = propagate.fidelity(out_state, target)
    result["status"] = "ok"
    write_json(os.path.join(out, "report.json"), result)
    return EXIT_OK


def _run_compile(config, out, rng, jobs):
    spec, _, table = _build_system(config["system"])
    psi0 = _build_state(config.get("state"), spec, rng)
    inverter = _build_inverter(config["inverter"], table, psi0, rng, spec)
    expr = synth.expr_from_dict(config["target"])
    try:
        result = synth.compile_sequence(expr, float(config["t"]), float(config["epsilon"]),
                                        int(config["n_budget"]), inverter, psi0, table)
    except (synth.CompileBudgetError, recurrence.RecurrenceSearchError) as exc:
        write_json(os.path.join(out, "report.json"),
                   {"status": "failed", "error": str(exc)})
        return EXIT_FAILURE
    report = {
        "status": "ok",
        "n": result.n,
        "distance": result.distance,
        "fidelity": result.fidelity,
        "physical": result.physical,
        "segments": len(result.sequence),
    }
    if result.physical:
        write_json(os.path.join(out, "sequence.json"), result.sequence.to_dict())
    write_json(os.path.join(out, "report.json"), report)
    return EXIT_OK


def _run_chain_demo(config, out, rng, jobs):
    spec = chains.ChainSpec.from_dict(config["chain"])
    targets = [(synth.expr_from_dict(t["expr"]), float(t["t"]))
               for t in config["targets"]]
    tspec = fock.TruncationSpec(tuple(config["dims"]))
    psi0 = fock.ground_state(tspec)
    labels, gens = chains.control_system(spec)
    reps = {k: -1j * fock.represent(h, tspec).matrix
            for k, h in enumerate(chains._hermitian_counterparts(gens))}
    table = propagate.EvolutionTable(reps)
    inverter = _build_inverter(config["inverter"], table, psi0, rng, tspec)
    report = synth.reachability_report(table, psi0, targets, float(config["epsilon"]),
                                       int(config["n_budget"]), inverter, jobs=jobs)
    payload = report.to_dict()
    payload["generators"] = labels
    write_json(os.path.join(out, "report.json"), payload)
    write_csv(os.path.join(out, "summary.csv"), report.summary_rows())
    return EXIT_OK if report.all_ok else EXIT_FAILURE


RUNNERS = {
    "closure": _run_closure,
    "propagation": _run_propagation,
    "recur": _run_recur,
    "invert": _run_invert,
    "trotter": _run_trotter,
    "commutator": _run_commutator,
    "compile": _run_compile,
    "chain-demo": _run_chain_demo,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recurq",
        description="Batch experiments: closures, propagation, recurrence plans, "
                    "product formulas, and compiled control sequences.",
    )
    sub = parser.add_subparsers(dest="subcommand")
    for name in RUNNERS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=0, help="RNG seed (mandatory for sampling)")
        sp.add_argument("--jobs", type=int, default=1, help="worker parallelism bound")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, unknown = parser.parse_known_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_USAGE
    if unknown or args.subcommand is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        with open(args.config) as fh:
            config = json.load(fh)
        validate_config(args.subcommand, config)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(args.out, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    try:
        return RUNNERS[args.subcommand](config, args.out, rng, max(1, args.jobs))
    except (ConfigError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
