"""Command-line experiment runner.

Usage::

    qevolve {vqe,synth,eig,scan} --config run.json --out results/ [--seed N] [--threads N]

The JSON config is validated against :data:`CONFIG_SCHEMA` before anything
runs. Exit status is 0 on success, 2 for an invalid config and 1 for a
failure during the run.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .ansatz import AnsatzSpec, build_ansatz, export_qasm
from .diagnostics import ground_space, normalized_renyi2, overlap
from .evolve import EvolutionConfig, initial_params, run
from .landscape import VQECost, fit, scan, write_scan_csv
from .models import (
    HeisenbergSpec,
    RegularGraph,
    SykSpec,
    build_heisenberg,
    build_syk,
    random_regular_graph,
    ring_graph,
)
from .pauli import Hamiltonian
from .synth import SynthesisCost, align_global_phase, load_target, synthesize

log = logging.getLogger("qevolve")

MODES = ("vqe", "synth", "eig", "scan")
MAX_OVERLAP_QUBITS = 16
SYNTH_AGENTS = 64  # default population for synthesis; vqe defaults to one agent
TRACE_HEADER = ["episode", "evaluations", "best_cost", "s2_normalized", "overlap"]

_nonneg = {"type": "integer", "minimum": 0}
_pos = {"type": "integer", "minimum": 1}
_num = {"type": "number"}
_prob = {"type": "number", "minimum": 0, "maximum": 1}
_path = {"type": "string", "minLength": 1}


def _obj(required, **props):
    return {"type": "object", "additionalProperties": False, "required": list(required),
            "properties": props}


def _tagged(tag: str, variants: list[dict]) -> dict:
    """Union of object schemas told apart by the constant field ``tag``."""
    return {
        "type": "object",
        "required": [tag],
        "properties": {tag: {"enum": [v["properties"][tag]["const"] for v in variants]}},
        "allOf": [
            {"if": {"properties": {tag: {"const": v["properties"][tag]["const"]}}}, "then": v}
            for v in variants
        ],
    }


_GRAPH = _tagged("kind", [
    _obj(["kind"], kind={"const": "ring"}),
    _obj(["kind", "degree"], kind={"const": "random_regular"}, degree=_pos, seed=_nonneg),
    _obj(["kind", "path"], kind={"const": "file"}, path=_path),
])

CONFIG_SCHEMA = _obj(
    ["model"],
    mode={"enum": list(MODES)},
    seed={"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    init={"enum": ["zeros", "random"]},
    checkpoint={"type": "boolean"},
    model=_tagged("type", [
        _obj(["type", "n_qubits", "graph"], type={"const": "heisenberg"},
             n_qubits={"type": "integer", "minimum": 2}, J=_num, h_z=_num, graph=_GRAPH),
        _obj(["type", "n_qubits"], type={"const": "syk"},
             n_qubits={"type": "integer", "minimum": 4}, J=_num, seed=_nonneg),
        _obj(["type", "path"], type={"const": "hamiltonian_file"}, path=_path),
        _obj(["type", "path"], type={"const": "unitary_file"}, path=_path,
             align_phase={"type": "boolean"}),
    ]),
    ansatz=_obj(
        ["layers"],
        layers=_pos,
        entangler={"enum": ["cnot_chain", "cry_chain"]},
        final_rotations={"type": "boolean"},
    ),
    optimizer=_obj(
        [],
        n_agents=_pos,
        episode_length=_pos,
        p_exploration=_prob,
        p_randomization=_prob,
        r={"type": "number", "minimum": 0},
        subset_size=_pos,
        line_samples={"type": "integer", "minimum": 2},
        landscape_order={"enum": [3, 5, None]},
        max_evaluations=_nonneg,
        target_cost=_num,
    ),
    diagnostics=_obj(
        [],
        entropy={"type": "boolean"},
        entropy_subset={"type": "array", "items": _nonneg, "minItems": 1, "uniqueItems": True},
        overlap={"type": "boolean"},
        record_every=_pos,
        degeneracy_tol={"type": "number", "exclusiveMinimum": 0},
    ),
    scan=_obj(
        ["param_index"],
        param_index=_nonneg,
        n_points={"type": "integer", "minimum": 3},
        params={"oneOf": [{"enum": ["zeros", "random"]}, {"type": "array", "items": _num}]},
    ),
    synth=_obj(
        [],
        polish_threshold={"type": "number", "exclusiveMinimum": 0},
        tol={"type": "number", "exclusiveMinimum": 0},
    ),
)


class ConfigError(ValueError):
    """Config rejected before any computation (exit status 2)."""


def load_config(path) -> dict:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    validate_config(cfg)
    return cfg


def validate_config(cfg) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    e = jsonschema.exceptions.best_match(validator.iter_errors(cfg))
    if e is not None:
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise ConfigError(f"config {where}: {e.message}")



@dataclass
class Plan:
    """Everything derived from a config before any computation happens."""

    mode: str
    config: dict
    base: Path
    seed: int
    init: str
    evolution: Optional[EvolutionConfig] = None
    ansatz: Optional[dict] = None
    entropy: bool = True
    entropy_subset: Optional[list[int]] = None
    overlap: bool = False
    record_every: int = 1
    degeneracy_tol: Optional[float] = None
    seeds: dict = field(default_factory=dict)


def plan(cfg: dict, mode: str, base: Path, seed: Optional[int] = None) -> Plan:
    """Check the parts of a config that the schema cannot express."""
    if cfg.get("mode", mode) != mode:
        raise ConfigError(f"config is for mode {cfg['mode']!r}, not {mode!r}")
    model = cfg["model"]
    if (model["type"] == "unitary_file") != (mode == "synth") and mode != "scan":
        raise ConfigError(f"model type {model['type']!r} cannot be used with mode {mode!r}")
    seed = cfg.get("seed", 0) if seed is None else seed
    default_init = "random" if model["type"] == "unitary_file" else "zeros"
    p = Plan(mode, cfg, base, seed, cfg.get("init", default_init))
    p.seeds["master_seed"] = seed
    try:
        if model["type"] == "heisenberg":
            g = model["graph"]
            n = model["n_qubits"]
            if g["kind"] == "random_regular":
                if g["degree"] >= n or (n * g["degree"]) % 2:
                    raise ConfigError(f"no {g['degree']}-regular graph on {n} vertices")
                p.seeds["graph_seed"] = g.get("seed", 0)
            elif g["kind"] == "ring" and n < 3:
                raise ConfigError("a ring needs at least 3 vertices")
        elif model["type"] == "syk":
            spec = SykSpec(model["n_qubits"], model.get("J", 1.0), model.get("seed", 0))
            p.seeds["syk_seed"] = spec.seed
        if mode in ("vqe", "synth"):
            opt = {"n_agents": SYNTH_AGENTS} if mode == "synth" else {}
            opt.update(cfg.get("optimizer", {}))
            p.evolution = EvolutionConfig(**opt, master_seed=seed)
        if mode != "eig":
            if "ansatz" not in cfg:
                raise ConfigError(f"mode {mode!r} needs an 'ansatz' section")
            p.ansatz = dict(cfg["ansatz"])
            if "n_qubits" in model:
                AnsatzSpec(model["n_qubits"], **p.ansatz)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if mode == "scan" and "scan" not in cfg:
        raise ConfigError("mode 'scan' needs a 'scan' section")
    diag = cfg.get("diagnostics", {})
    p.entropy = diag.get("entropy", True) and mode == "vqe"
    p.entropy_subset = diag.get("entropy_subset")
    p.overlap = diag.get("overlap", False)
    p.record_every = diag.get("record_every", 1)
    p.degeneracy_tol = diag.get("degeneracy_tol")
    if p.overlap and mode != "vqe":
        raise ConfigError("overlap recording is only available in vqe mode")
    n = model.get("n_qubits")
    if n is not None:
        _check_diagnostics(p, n)
    return p


def _check_diagnostics(p: Plan, n: int) -> None:
    if p.overlap and n > MAX_OVERLAP_QUBITS:
        raise ConfigError(f"overlap needs exact diagonalization; {n} > {MAX_OVERLAP_QUBITS} qubits")
    if p.entropy:
        if p.entropy_subset is None:
            p.entropy_subset = [0, 1] if n >= 4 else [0]
        if any(q >= n for q in p.entropy_subset) or 2 * len(p.entropy_subset) > n:
            raise ConfigError(f"entropy subset {p.entropy_subset} is not valid for {n} qubits")


def _resolve(path: str, base: Path) -> Path:
    q = Path(path)
    return q if q.is_absolute() else base / q


@dataclass
class Model:
    n_qubits: int
    hamiltonian: Optional[Hamiltonian] = None
    target: Optional[np.ndarray] = None
    graph: Optional[RegularGraph] = None


def build_model(p: Plan) -> Model:
    m = p.config["model"]
    kind = m["type"]
    if kind == "heisenberg":
        n, g = m["n_qubits"], m["graph"]
        if g["kind"] == "ring":
            graph = ring_graph(n)
        elif g["kind"] == "random_regular":
            graph = random_regular_graph(n, g["degree"], g.get("seed", 0))
        else:
            graph = RegularGraph.read(_resolve(g["path"], p.base), n)
        h = build_heisenberg(HeisenbergSpec(n, graph, m.get("J", 1.0), m.get("h_z", 1.0)))
        return Model(n, hamiltonian=h, graph=None if g["kind"] == "file" else graph)
    if kind == "syk":
        h = build_syk(SykSpec(m["n_qubits"], m.get("J", 1.0), m.get("seed", 0)))
        return Model(h.n_qubits, hamiltonian=h)
    if kind == "hamiltonian_file":
        h = Hamiltonian.read(_resolve(m["path"], p.base))
        return Model(h.n_qubits, hamiltonian=h)
    target = load_target(_resolve(m["path"], p.base)).matrix
    if m.get("align_phase", False):
        target = align_global_phase(target)
    return Model(target.shape[0].bit_length() - 1, target=target)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in trace:
            w.writerow([r.episode, r.evaluations, _fmt(r.best_cost),
                        _fmt(r.s2_normalized), _fmt(r.overlap)])


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _summary(p: Plan, **fields) -> dict:
    echo = dict(p.config)
    echo["seed"] = p.seed
    doc = {"mode": p.mode, "version": __version__, "seeds": p.seeds, "config": echo}
    doc.update(fields)
    return doc


def _cost(p: Plan, model: Model):
    spec = AnsatzSpec(model.n_qubits, **p.ansatz)
    circuit = build_ansatz(spec)
    if model.target is not None:
        return spec, SynthesisCost(model.target, circuit)
    return spec, VQECost(circuit, model.hamiltonian)


def run_vqe(p: Plan, out: Path, threads: int, resume: bool) -> dict:
    model = build_model(p)
    _check_diagnostics(p, model.n_qubits)
    spec, f = _cost(p, model)
    gs = ground_space(model.hamiltonian, p.degeneracy_tol, seed=p.seed) if p.overlap else None

    def on_record(params):
        state = f.state(params)
        extra = {}
        if p.entropy:
            extra["s2_normalized"] = normalized_renyi2(state, p.entropy_subset)
        if gs is not None:
            extra["overlap"] = overlap(state, gs)
        return extra

    ckpt = out / "checkpoint.json" if p.config.get("checkpoint", False) else None
    res = run(f, p.evolution, p.init, threads=threads, record_every=p.record_every,
              on_record=on_record, checkpoint=ckpt, resume=resume)
    write_trace(out / "trace.csv", res.trace)
    (out / "best_circuit.qasm").write_text(export_qasm(f.circuit, res.best_params))
    if model.graph is not None:
        model.graph.write(out / "graph.edges")
    last = res.trace[-1]
    fields = dict(
        final_cost=res.best_cost,
        evaluations=res.evaluations_used,
        episodes=res.episodes,
        stop_reason=res.stop_reason,
        n_params=f.n_params,
        cnot_count=spec.cnot_count,
        best_params=[float(x) for x in res.best_params],
    )
    if p.entropy:
        fields["entropy_subset"] = p.entropy_subset
        fields["s2_normalized"] = last.s2_normalized
    if gs is not None:
        fields.update(E0=gs.energy, degeneracy=gs.degeneracy, overlap=last.overlap,
                      energy_error=res.best_cost - gs.energy)
    return _summary(p, **fields)


def run_synth(p: Plan, out: Path, threads: int, resume: bool) -> dict:
    model = build_model(p)
    spec = AnsatzSpec(model.n_qubits, **p.ansatz)
    sc = p.config.get("synth", {})
    report = synthesize(
        model.target, spec, p.evolution, sc.get("polish_threshold", 1e-3),
        init=p.init, tol=sc.get("tol", 1e-8), threads=threads,
    )
    log.info("synthesis finished in %.2f s", report.wall_time)
    write_trace(out / "trace.csv", report.trace)
    (out / "best_circuit.qasm").write_text(export_qasm(report.circuit, report.params))
    return _summary(
        p,
        final_cost=report.final_cost,
        converged=report.converged,
        cnot_count=report.cnot_count,
        evaluations=report.evaluations,
        evolution_evaluations=report.evolution_evaluations,
        polish_evaluations=report.polish_evaluations,
        polish_sweeps=report.polish_sweeps,
        episodes=report.episodes,
        n_params=report.circuit.n_params,
        best_params=[float(x) for x in report.params],
    )


def run_eig(p: Plan, out: Path, threads: int, resume: bool) -> dict:
    model = build_model(p)
    gs = ground_space(model.hamiltonian, p.degeneracy_tol, seed=p.seed)
    if model.graph is not None:
        model.graph.write(out / "graph.edges")
    return _summary(
        p,
        E0=gs.energy,
        degeneracy=gs.degeneracy,
        degeneracy_tol=gs.degeneracy_tol,
        next_energy=gs.next_energy,
        max_residual=max(gs.residuals),
        n_qubits=model.n_qubits,
    )


def run_scan(p: Plan, out: Path, threads: int, resume: bool) -> dict:
    model = build_model(p)
    spec, f = _cost(p, model)
    sc = p.config["scan"]
    i = sc["param_index"]
    if i >= f.n_params:
        raise ConfigError(f"param_index {i} is out of range for {f.n_params} parameters")
    base = sc.get("params", "zeros")
    params = initial_params(f.n_params, base if isinstance(base, str) else np.array(base),
                            p.seed, 0)
    thetas, values = scan(f, params, i, sc.get("n_points", 64))
    model_fit = fit(f, params, i)
    write_scan_csv(out / "scan.csv", thetas, values, model_fit)
    if model.graph is not None:
        model.graph.write(out / "graph.edges")
    return _summary(
        p,
        param_index=i,
        n_points=len(thetas),
        landscape_order=f.order,
        max_fit_residual=float(np.max(np.abs(model_fit(thetas) - values))),
        fit=dataclasses.asdict(model_fit),
    )


RUNNERS = {"vqe": run_vqe, "synth": run_synth, "eig": run_eig, "scan": run_scan}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qevolve", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode, help=f"run in {mode} mode")
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (speed only)")
        sp.add_argument("--resume", action="store_true", help="continue from out/checkpoint.json")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg_path = Path(args.config)
        p = plan(load_config(cfg_path), args.mode, cfg_path.parent, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        summary = RUNNERS[args.mode](p, out, args.threads, args.resume)
        _write_json(out / "summary.json", summary)
        log.info("%s finished in %.2f s", args.mode, time.perf_counter() - t0)
    except ConfigError as exc:
        print(f"qevolve: invalid config: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # any failure after validation is a runtime error
        print(f"qevolve: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
