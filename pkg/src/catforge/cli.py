"""Command-line front end emitting plot-ready CSV or JSON tables.

Examples::

    catforge fidelity-curve --protocol dispersive --alpha-grid 0.5:6:12
    catforge wigner-cut --state dispersive:ideal --alpha 4 --ygrid -2:2:801
    catforge fisher --state target-cat --alpha-grid 0.5:6:12 --qfi
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from catforge import __version__, fock
from catforge.coherent import CoherentMix, fidelity_with_cat, loss_mix, to_fock
from catforge.dispersive import (
    ImperfectCoupling,
    QubitChannel,
    ideal_mixture,
    imperfect_protocol,
    optimize_gamma,
    probabilistic_protocol,
    qubit_damped_protocol,
)
from catforge.errors import CatforgeError
from catforge.gp import FAMILIES, GpOptimum, gp_continuation, gp_dim, gp_optimize, gp_output_state
from catforge.metrology import homodyne_fisher, min_resolvable, qfi_displacement
from catforge.phasespace import distillable_variance, homodyne_pdf, wigner

UNITS = {
    "alpha": "alpha (canonical)",
    "n": "n (photons)",
    "r1": "r1 (1)",
    "r2": "r2 (1)",
    "r3": "r3 (1)",
    "T": "T (1)",
    "beta": "beta (canonical)",
    "F": "F (1)",
    "P": "P (1)",
    "y": "y (canonical)",
    "W": "W (1/canonical^2)",
    "p": "p (1/canonical)",
    "V": "V (canonical^2)",
    "eps_min": "eps_min (canonical)",
    "eps_tilde_min": "eps_tilde_min (canonical)",
}
STATES = ("target-cat", "gp", "dispersive", "dispersive:ideal", "dispersive:imp", "dispersive:pd", "dispersive:ad")


@dataclass
class RunReport:
    command: str
    params: dict
    columns: list[str]
    rows: list[list[float]]
    version: str = __version__
    wall_time: float = 0.0
    argv: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        meta = {"command": self.command, "version": self.version, "wall_time": self.wall_time, "argv": self.argv}
        body = {"meta": meta, "params": self.params, "columns": self.columns, "rows": self.rows}
        return json.dumps(body, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        body = json.loads(text)
        meta = body["meta"]
        return cls(
            command=meta["command"],
            params=body["params"],
            columns=body["columns"],
            rows=body["rows"],
            version=meta["version"],
            wall_time=meta["wall_time"],
            argv=meta["argv"],
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([UNITS[c] for c in self.columns])
        for row in self.rows:
            writer.writerow([format(v, ".17g") for v in row])
        return buf.getvalue()


# --- argument helpers ---------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:count`` -> evenly spaced points including both ends."""
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must look like start:stop:count, got {text!r}") from exc
    if count < 1:
        raise argparse.ArgumentTypeError("grid count must be >= 1")
    if count == 1:
        return np.array([start])
    return np.linspace(start, stop, count)


def thread_cap() -> int:
    env = os.environ.get("CATFORGE_THREADS")
    cpus = os.cpu_count() or 1
    if env is None:
        return cpus
    try:
        return max(1, min(cpus, int(env)))
    except ValueError:
        return 1


def pmap(func, items) -> list:
    """Order-preserving map, parallel over processes up to ``CATFORGE_THREADS``."""
    items = list(items)
    workers = min(thread_cap(), len(items))
    if workers <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


# --- state construction ---------------------------------------------------------


def _gp_vector(opt: GpOptimum, dim: int | None = None) -> np.ndarray:
    if dim is None:
        dim = gp_dim(opt.params, floor=fock.cutoff_for(opt.alpha))
    psi, _ = gp_output_state(opt.params, dim)
    return fock.check_truncation(psi)


def _dispersive_state(kind: str, alpha: float, args) -> CoherentMix:
    if alpha == 0.0:
        return CoherentMix.coherent(0.0)
    if kind in ("dispersive", "dispersive:ideal"):
        gamma, _ = optimize_gamma(alpha)
        return ideal_mixture(alpha, gamma)
    if kind == "dispersive:imp":
        return imperfect_protocol(alpha, ImperfectCoupling(args.coop, args.eta)).state
    channel = QubitChannel("pd", args.pd) if kind == "dispersive:pd" else QubitChannel("ad", args.ad)
    return qubit_damped_protocol(alpha, channel).state


def build_state(kind: str, alpha: float, args, gp_opt: GpOptimum | None = None):
    if kind == "target-cat":
        state = CoherentMix.cat(alpha)
    elif kind == "gp":
        opt = gp_opt or gp_optimize(alpha, args.n, "gp", restarts=args.restarts, seed=args.seed)
        state = _gp_vector(opt, args.fock_dim)
    else:
        state = _dispersive_state(kind, alpha, args)
    if args.tau is not None and args.tau < 1.0:
        if isinstance(state, CoherentMix):
            state = loss_mix(state, args.tau)
        else:
            state = fock.loss_fock(state, args.tau)
    if args.fock_dim and isinstance(state, CoherentMix):
        # route through the truncated number basis instead of the exact mixture
        state = to_fock(state, args.fock_dim)
    return state


def _gp_chain(alphas, args) -> list[GpOptimum]:
    return gp_continuation(alphas, args.n, "gp", restarts=args.restarts, seed=args.seed)


# --- subcommands -----------------------------------------------------------------


def _fidelity_dispersive(alpha: float, tau):
    if alpha == 0.0:
        return [alpha, 1.0, 1.0]
    gamma, f = optimize_gamma(alpha)
    if tau is not None and tau < 1.0:
        f = fidelity_with_cat(loss_mix(ideal_mixture(alpha, gamma), tau), alpha)
    return [alpha, f, 1.0]


def _gp_fidelity_after_loss(opt: GpOptimum, tau) -> float:
    if tau is None or tau == 1.0:
        return opt.fidelity
    psi = _gp_vector(opt)
    rho = fock.loss_fock(psi, tau)
    cat = fock.cat_fock(opt.alpha, "even", len(psi))
    return float(np.real(np.vdot(cat, rho @ cat)))


def cmd_fidelity_curve(args) -> tuple[list[str], list[list[float]]]:
    alphas = args.alpha_grid
    if args.protocol == "dispersive":
        rows = pmap(partial(_fidelity_dispersive, tau=args.tau), alphas)
    elif args.protocol == "dispersive-prob":
        rows = []
        for opt in gp_continuation(alphas, args.n, "gp", restarts=args.restarts, seed=args.seed):
            res = probabilistic_protocol(opt.alpha, opt.fidelity, seed=args.seed)
            rows.append([opt.alpha, res.fidelity, res.probability])
    else:
        chain = gp_continuation(alphas, args.n, args.protocol, restarts=args.restarts, seed=args.seed)
        rows = [[o.alpha, _gp_fidelity_after_loss(o, args.tau), o.probability] for o in chain]
    return ["alpha", "F", "P"], rows


def cmd_gp_optimize(args):
    opt = gp_optimize(args.alpha, args.n, args.family, restarts=args.restarts, seed=args.seed)
    p = opt.params
    row = [opt.alpha, p.n, p.r1, p.r2, p.r3, p.T, p.beta, opt.fidelity, opt.probability]
    return ["alpha", "n", "r1", "r2", "r3", "T", "beta", "F", "P"], [row]


def cmd_wigner_cut(args):
    state = build_state(args.state, args.alpha, args)
    ys = args.ygrid
    vals = np.atleast_1d(wigner(state, np.full_like(ys, args.x), ys))
    return ["y", "W"], [[float(y), float(w)] for y, w in zip(ys, vals)]


def cmd_homodyne(args):
    state = build_state(args.state, args.alpha, args)
    ys = args.ygrid
    vals = np.atleast_1d(homodyne_pdf(state, ys))
    return ["y", "p"], [[float(y), float(v)] for y, v in zip(ys, vals)]


def _per_alpha(func, args):
    alphas = list(args.alpha_grid)
    if args.state == "gp":
        chain = _gp_chain(alphas, args)
        return [func(o.alpha, build_state("gp", o.alpha, args, gp_opt=o)) for o in chain]
    return pmap(partial(_state_row, func=func, args=args), alphas)


def _state_row(alpha, func, args):
    return func(alpha, build_state(args.state, alpha, args))


def _distill_row(alpha, state):
    return [alpha, distillable_variance(state).V]


def _fisher_row(alpha, state, qfi=False):
    row = [alpha, min_resolvable(homodyne_fisher(state))]
    if qfi:
        row.append(min_resolvable(qfi_displacement(state)))
    return row


def cmd_distill(args):
    return ["alpha", "V"], _per_alpha(_distill_row, args)


def cmd_fisher(args):
    cols = ["alpha", "eps_min"] + (["eps_tilde_min"] if args.qfi else [])
    return cols, _per_alpha(partial(_fisher_row, qfi=args.qfi), args)


COMMANDS = {
    "fidelity-curve": cmd_fidelity_curve,
    "gp-optimize": cmd_gp_optimize,
    "wigner-cut": cmd_wigner_cut,
    "homodyne": cmd_homodyne,
    "distill": cmd_distill,
    "fisher": cmd_fisher,
}


# --- parser -----------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="emit a JSON report instead of CSV")
    p.add_argument("--out", help="write to this file instead of stdout")
    p.add_argument("--seed", type=int, default=0, help="optimizer seed")
    p.add_argument("--restarts", type=int, default=8, help="optimizer low-discrepancy restarts")
    p.add_argument("--fock-dim", type=int, default=None, help="override the number-basis truncation")
    p.add_argument("--n", type=int, default=1, choices=(1, 2, 3), help="herald order of GP(2n)")
    p.add_argument("--tau", type=float, default=None, help="transmissivity of extra optical loss")


def _state_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--state", required=True, choices=STATES)
    p.add_argument("--coop", type=float, help="cooperativity C (dispersive:imp)")
    p.add_argument("--eta", type=float, help="escape efficiency (dispersive:imp)")
    p.add_argument("--pd", type=float, help="qubit phase damping rate (dispersive:pd)")
    p.add_argument("--ad", type=float, help="qubit decay probability (dispersive:ad)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"catforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fidelity-curve", help="alpha, F, P for a protocol")
    p.add_argument("--protocol", required=True, choices=FAMILIES + ("dispersive", "dispersive-prob"))
    p.add_argument("--alpha-grid", required=True, type=parse_grid)
    _common(p)

    p = sub.add_parser("gp-optimize", help="optimized GP(2n) parameters at one alpha")
    p.add_argument("--alpha", required=True, type=float)
    p.add_argument("--family", default="gp", choices=FAMILIES)
    _common(p)

    for name, helptext in (("wigner-cut", "W(x, y) along y"), ("homodyne", "y-quadrature density")):
        p = sub.add_parser(name, help=helptext)
        _state_flags(p)
        p.add_argument("--alpha", required=True, type=float)
        p.add_argument("--ygrid", required=True, type=parse_grid)
        if name == "wigner-cut":
            p.add_argument("--x", type=float, default=0.0, help="fixed x of the cut")
        _common(p)

    p = sub.add_parser("distill", help="distillable squeezing variance versus alpha")
    _state_flags(p)
    p.add_argument("--alpha-grid", required=True, type=parse_grid)
    _common(p)

    p = sub.add_parser("fisher", help="minimum resolvable displacement versus alpha")
    _state_flags(p)
    p.add_argument("--alpha-grid", required=True, type=parse_grid)
    p.add_argument("--qfi", action="store_true", help="also report the quantum limit")
    _common(p)
    return parser


def _validate(parser: argparse.ArgumentParser, args) -> None:
    if args.tau is not None and not 0.0 <= args.tau <= 1.0:
        parser.error("--tau must lie in [0, 1]")
    if args.restarts < 1:
        parser.error("--restarts must be >= 1")
    if args.fock_dim is not None and args.fock_dim < 2:
        parser.error("--fock-dim must be >= 2")
    alphas = list(getattr(args, "alpha_grid", [])) + ([args.alpha] if hasattr(args, "alpha") else [])
    if any(a < 0 or a > 6 for a in alphas):
        parser.error("alpha values must lie in [0, 6]")
    if getattr(args, "protocol", None) == "dispersive-prob" and args.tau is not None:
        parser.error("--tau is not defined for the probabilistic protocol")
    state = getattr(args, "state", None)
    try:
        if state == "dispersive:imp":
            if args.coop is None or args.eta is None:
                parser.error("dispersive:imp needs --coop and --eta")
            ImperfectCoupling(args.coop, args.eta)
        elif state == "dispersive:pd":
            if args.pd is None:
                parser.error("dispersive:pd needs --pd")
            QubitChannel("pd", args.pd)
        elif state == "dispersive:ad":
            if args.ad is None:
                parser.error("dispersive:ad needs --ad")
            QubitChannel("ad", args.ad)
    except ValueError as exc:
        parser.error(str(exc))


GRID_FLAGS = ("--alpha-grid", "--ygrid")


def _glue_grids(argv: list[str]) -> list[str]:
    """Join ``--ygrid -2:2:9`` into ``--ygrid=-2:2:9`` so argparse does not read a flag."""
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in GRID_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def _params(args) -> dict:
    out = {}
    for key, val in sorted(vars(args).items()):
        if key in ("json", "out"):
            continue
        out[key] = val.tolist() if isinstance(val, np.ndarray) else val
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_glue_grids(argv))
        _validate(parser, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        columns, rows = COMMANDS[args.command](args)
    except (CatforgeError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"catforge: numerical failure: {exc}", file=sys.stderr)
        return 1
    rows = [[float(v) for v in row] for row in rows]
    if any(not math.isfinite(v) for row in rows for v in row):
        print("catforge: numerical failure: non-finite output", file=sys.stderr)
        return 1
    report = RunReport(
        command=args.command,
        params=_params(args),
        columns=columns,
        rows=rows,
        wall_time=time.perf_counter() - start,
        argv=argv,
    )
    text = report.to_json() if args.json else report.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
