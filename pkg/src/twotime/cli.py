"""Command-line entry point.

Exit codes: 0 ok, 1 a check failed, 2 usage or parse error, 3 enumeration
capacity exceeded, 4 numerical or model-validity failure.  Results go to
``--out`` (default: standard output) and are only written once the command
has succeeded; diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import engine, experiments, oracle
from .config import ConfigError, family_from_config, model_from_config, parse_config_text
from .errors import CapacityError, CollapseError, ModelValidityError, ValidationError
from .forward import sample_batch, write_trajectory_csv
from .linalg import HilbertSpace, hermiticity_residual, operator_from_json
from .model import check_symmetry_conditions, completeness_residual

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_CAPACITY, EXIT_NUMERICAL = 0, 1, 2, 3, 4
SYMMETRY_TOL = 1e-10
EXHAUSTIVE_LIMIT = 10**4

BEAM_SPLITTER_HELP = """\
Beam-splitter experiment as a qubit.  Basis state 0 joins the source S to
the detector D, basis state 1 joins the floor F to the ceiling C, and the
beam splitter is a Hadamard.  Event 1 records the source-side interaction
(0 = S, 1 = F), event 2 the detection (0 = D, 1 = C).  The run reports the
forward detection frequency at D, its exact value, the retrodicted
probability that a particle detected at D came from S, and the backward
Born-rule prediction for that retrodiction."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _read_config(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config_text(text)


def _load(args):
    return model_from_config(_read_config(args.config))


def cmd_check(args) -> tuple[int, str]:
    cfg = _read_config(args.config)
    report: dict = {}
    failures = []
    space = HilbertSpace(cfg["dim"], tuple(cfg["basis_labels"]))
    mats = {name: operator_from_json(cfg[name]) for name in ("H", "rho_I", "rho_F")}
    for name, mat in mats.items():
        if mat.shape != (space.dim, space.dim):
            raise ConfigError(f"{name} has shape {mat.shape}, expected dim {space.dim}")
    herm = {name: hermiticity_residual(mat) for name, mat in mats.items()}
    report["hermiticity"] = herm
    failures += [f"{name} not Hermitian" for name, r in herm.items() if r > 1e-12]

    try:
        family = family_from_config(cfg["family"], space, check=False)
    except ValidationError as exc:
        report["family"] = {"error": str(exc)}
        failures.append("family invalid")
        family = None
    if family is not None:
        res = completeness_residual(family)
        report["completeness_residual"] = res
        if res > 1e-10:
            failures.append("completeness")
        sym = check_symmetry_conditions(mats["H"], family)
        report["symmetry"] = {"h_asym": sym.h_asym, "l_asym": sym.l_asym, "pass": sym.passed}
        if not sym.passed:
            failures.append("symmetry conditions (H or L not real symmetric)")

    sched = cfg["schedule"]
    increasing = all(b > a for a, b in zip(sched, sched[1:]))
    report["schedule_increasing"] = increasing
    if not increasing:
        failures.append("schedule not strictly increasing")

    for name, role in (("rho_I", "state"), ("rho_F", "povm_element")):
        mat = mats[name]
        ev = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
        entry = {"min_eigenvalue": float(ev[0]), "max_eigenvalue": float(ev[-1]),
                 "trace": float(np.trace(mat).real)}
        ok = ev[0] >= -1e-10
        if role == "state":
            ok = ok and abs(entry["trace"] - 1.0) <= 1e-10
        else:
            ok = ok and ev[-1] <= 1.0 + 1e-10
        entry["pass"] = bool(ok)
        report[name] = entry
        if not ok:
            failures.append(f"{name} eigenvalues ({role})")
    report["failures"] = failures
    report["pass"] = not failures
    for f in failures:
        print(f"check failed: {f}", file=sys.stderr)
    return (EXIT_OK if not failures else EXIT_FAILED), _dump(report)


def cmd_symmetry(args) -> tuple[int, str]:
    model = _load(args)
    sym = check_symmetry_conditions(model.H, model.family)
    if args.trials is None and model.num_records <= EXHAUSTIVE_LIMIT:
        mode, records = "exhaustive", list(engine.all_records(model))
    else:
        trials = args.trials or 1000
        rng = np.random.default_rng(args.seed)
        draws = rng.integers(0, model.m, size=(trials, model.schedule.num_events))
        mode, records = "sampled", [tuple(int(z) for z in row) for row in draws]
    buf = io.StringIO()
    buf.write("outcomes,forward_weight,backward_weight,residual\n")
    worst, failed = 0.0, False
    for rec in records:
        fwd, bwd = engine.symmetry_weights(model, rec)
        res = abs(fwd - bwd)
        worst = max(worst, res)
        failed |= res > SYMMETRY_TOL * max(1.0, abs(fwd))
        buf.write(f"{';'.join(map(str, rec))},{fwd.real!r},{bwd.real!r},{res!r}\n")
    print(f"mode={mode} records={len(records)} max_residual={worst:.3e} "
          f"symmetry_conditions={'pass' if sym.passed else 'fail'}", file=sys.stderr)
    if failed:
        print("time-symmetry residual exceeds 1e-10 * max(1, weight)", file=sys.stderr)
    return (EXIT_FAILED if failed else EXIT_OK), buf.getvalue()


def cmd_sample(args) -> tuple[int, str]:
    model = _load(args)
    batch = sample_batch(model, args.samples, args.seed, workers=args.workers)
    buf = io.StringIO()
    write_trajectory_csv(batch, buf)
    return EXIT_OK, buf.getvalue()


def cmd_enumerate(args) -> tuple[int, str]:
    model = _load(args)
    if args.oracle:
        exact = oracle.enumerate_records(model)
        rows = list(zip(exact.records, exact.weights, exact.probabilities))
    else:
        rows = engine.probability_table(model)
    buf = io.StringIO()
    engine.write_probability_csv(rows, buf)
    return EXIT_OK, buf.getvalue()


def _prefix(text):
    if text is None:
        return None
    return tuple(int(z) for z in text.replace(";", ",").split(",") if z.strip())


def cmd_born(args) -> tuple[int, str]:
    model = _load(args)
    result = engine.born_analysis(model, args.event, args.direction, prefix=_prefix(args.prefix))
    return EXIT_OK, _dump(result.to_json())


def cmd_beam_splitter(args) -> tuple[int, str]:
    return EXIT_OK, _dump(experiments.beam_splitter_experiment(args.samples, args.seed,
                                                               args.workers))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twotime", description="Collapse models with two-time boundary conditions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text, *, config=True, description=None):
        sp = sub.add_parser(name, help=help_text, description=description or help_text)
        if config:
            sp.add_argument("--config", required=True, help="model config JSON ('-' for stdin)")
        sp.add_argument("--out", default="-", help="output path ('-' for stdout)")
        sp.set_defaults(func=func)
        return sp

    add("check", cmd_check, "validate completeness, symmetry and boundary conditions")
    sp = add("symmetry", cmd_symmetry, "check forward/backward record weights agree")
    sp.add_argument("--trials", type=int, default=None,
                    help="sample this many random records instead of enumerating")
    sp.add_argument("--seed", type=int, default=0)
    sp = add("sample", cmd_sample, "sample forward trajectories to CSV")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp = add("enumerate", cmd_enumerate, "exact probability of every record to CSV")
    sp.add_argument("--oracle", action="store_true", help="use the brute-force reference path")
    sp = add("born", cmd_born, "conditional vs Born-rule distribution at one event")
    sp.add_argument("--event", type=int, required=True, help="event index j (1-based)")
    sp.add_argument("--direction", choices=("fwd", "bwd"), default="fwd")
    sp.add_argument("--prefix", default=None,
                    help="comma-separated conditioning outcomes (default: zeros)")
    sp = add("beam-splitter", cmd_beam_splitter, "run the beam-splitter experiment",
             config=False, description=BEAM_SPLITTER_HELP)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, text = args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ModelValidityError as exc:
        print(f"model validity error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CollapseError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(args.out).write_text(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
