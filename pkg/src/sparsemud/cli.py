"""Command-line entry point: gen, transmit, decode, oracle, ode, sweep, compare.

Every output file gets a sibling ``<file>.manifest.json`` recording the
subcommand, full parameter set, seed, tool version, input/output digests, and
wall-clock duration. All randomness flows from the per-invocation --seed.
Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .asymptotics import (
    integrate,
    ode_rhs_poisson,
    ode_rhs_regular,
    poisson_initial_state,
    regular_initial_state,
    write_trajectory_csv,
)
from .channel import (
    apply_erasure,
    erase_chips,
    random_bits,
    read_bits,
    read_signal,
    transmit,
    write_bits,
    write_signal,
)
from .ensemble import read_code, sample_poissonian, sample_regular, write_code
from .experiments import (
    BatchConfig,
    compare_asymptotic_empirical,
    sweep_phase_diagram,
    write_compare_csv,
    write_sweep_csv,
)
from .oracle import verify_deterministic_phase, z_factor_oracle
from .ucp import run_ucp


class CliError(Exception):
    """Flag/schema/file validation problem: exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifests(subcommand, params, seed, inputs, outputs, t0) -> None:
    digests_in = {str(p): _sha256(p) for p in inputs}
    digests_out = {str(p): _sha256(p) for p in outputs}
    doc = {
        "subcommand": subcommand,
        "parameters": params,
        "seed": seed,
        "version": __version__,
        "inputs": digests_in,
        "outputs": digests_out,
        "duration_s": round(time.monotonic() - t0, 6),
    }
    for out in outputs:
        with open(f"{out}.manifest.json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _parse_grid(text: str):
    parts = text.split(":")
    if len(parts) == 1:
        return float(parts[0])
    if len(parts) == 3:
        return tuple(float(p) for p in parts)
    raise CliError(f"bad range {text!r}: expected VALUE or START:STOP:STEP")


def _load_code(path):
    try:
        return read_code(path)
    except FileNotFoundError:
        raise CliError(f"code file not found: {path}")
    except (ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"bad code file {path}: {exc}")


def _load_signal(path):
    try:
        return read_signal(path)
    except FileNotFoundError:
        raise CliError(f"signal file not found: {path}")
    except (ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"bad signal file {path}: {exc}")


def _cmd_gen(args) -> int:
    t0 = time.monotonic()
    sampler = sample_poissonian if args.ensemble == "poisson" else sample_regular
    code = sampler(args.users, args.load, args.degree, args.seed)
    write_code(code, args.out)
    _write_manifests("gen", {
        "ensemble": args.ensemble, "users": args.users, "load": args.load,
        "degree": args.degree, "out": args.out,
    }, args.seed, [], [args.out], t0)
    return 0


def _cmd_transmit(args) -> int:
    t0 = time.monotonic()
    code = _load_code(args.code)
    ss = np.random.SeedSequence(args.seed)
    s_bits, s_erase = (int(v) for v in ss.generate_state(2, np.uint64))
    inputs = [args.code]
    if args.bits == "random":
        bits = random_bits(code.num_users, s_bits)
    else:
        try:
            bits = read_bits(args.bits)
        except FileNotFoundError:
            raise CliError(f"bits file not found: {args.bits}")
        if len(bits) != code.num_users:
            raise CliError(
                f"bits file has {len(bits)} entries, code has K={code.num_users}"
            )
        inputs.append(args.bits)
    signal = transmit(code, bits)
    if args.erase > 0:
        _code, signal = apply_erasure(code, signal, args.erase, s_erase)
    write_signal(signal, args.out)
    outputs = [args.out]
    if args.bits_out:
        write_bits(bits, args.bits_out)
        outputs.append(args.bits_out)
    _write_manifests("transmit", {
        "code": args.code, "bits": args.bits, "erase": args.erase,
        "out": args.out, "bits_out": args.bits_out,
    }, args.seed, inputs, outputs, t0)
    return 0


def _reduced_instance(code, signal):
    """Re-apply recorded erasures so the decoder sees the surviving instance."""
    if not signal.erased:
        if signal.num_chips != code.num_chips:
            raise CliError(
                f"signal has {signal.num_chips} chips but code has {code.num_chips}"
            )
        return code, signal
    if len(signal.erased) + signal.num_chips != code.num_chips:
        raise CliError(
            "erased list plus surviving chips do not add up to the code's M"
        )
    return erase_chips(code, signal.erased), signal


def _cmd_decode(args) -> int:
    t0 = time.monotonic()
    code = _load_code(args.code)
    signal = _load_signal(args.signal)
    code, signal = _reduced_instance(code, signal)
    inputs = [args.code, args.signal]
    truth = None
    if args.truth:
        try:
            truth = read_bits(args.truth)
        except FileNotFoundError:
            raise CliError(f"truth file not found: {args.truth}")
        inputs.append(args.truth)
    res = run_ucp(code, signal, args.seed, truth=truth,
                  record_trace=bool(args.trace))
    doc = {
        "x_D": res.x_D,
        "x_C": res.x_C,
        "guesses": res.num_guesses,
        "contradictions": res.num_contradiction_events,
        "status": res.status,
        "ber": res.ber,
    }
    print(json.dumps(doc))
    outputs = []
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        outputs.append(args.out)
    if args.trace:
        res.trace.write_csv(args.trace)
        outputs.append(args.trace)
    if outputs:
        _write_manifests("decode", {
            "code": args.code, "signal": args.signal, "truth": args.truth,
            "trace": args.trace, "out": args.out,
        }, args.seed, inputs, outputs, t0)
    return 0


def _cmd_oracle(args) -> int:
    t0 = time.monotonic()
    if args.oracle_cmd == "ztable":
        for l in range(2, args.max_l + 1):
            z = z_factor_oracle(l)
            print(f"{l} {z.numerator}/{z.denominator}")
        return 0
    code = _load_code(args.code)
    signal = _load_signal(args.signal)
    code, signal = _reduced_instance(code, signal)
    report = verify_deterministic_phase(code, signal, args.seed)
    print(json.dumps(report.to_dict()))
    return 0


def _cmd_ode(args) -> int:
    t0 = time.monotonic()
    if args.ensemble == "poisson":
        state = poisson_initial_state(args.load, args.degree, args.lmax)
        rhs = ode_rhs_poisson
    else:
        state = regular_initial_state(args.load, args.degree, args.lmax)
        rhs = ode_rhs_regular
    traj = integrate(state, rhs, dx=args.dx)
    doc = {
        "x_D": traj.x_D,
        "termination": traj.termination,
        "min_gap": traj.min_gap,
    }
    print(json.dumps(doc))
    if args.out:
        write_trajectory_csv(traj, args.out)
        _write_manifests("ode", {
            "ensemble": args.ensemble, "degree": args.degree, "load": args.load,
            "lmax": args.lmax, "dx": args.dx, "out": args.out,
        }, None, [], [args.out], t0)
    return 0


def _cmd_sweep(args) -> int:
    t0 = time.monotonic()
    config = BatchConfig(
        ensemble=args.ensemble,
        K=args.users,
        beta=_parse_grid(args.load),
        C=_parse_grid(args.degree),
        erasure=args.erase,
        samples=args.samples,
        base_seed=args.seed,
    )
    result = sweep_phase_diagram(config)
    write_sweep_csv(result.rows, args.out)
    print(json.dumps({
        "points": len(result.rows),
        "onset_xd": {str(k): v for k, v in result.onset_xd.items()},
        "onset_xc": {str(k): v for k, v in result.onset_xc.items()},
        "onset_ber": {str(k): v for k, v in result.onset_ber.items()},
    }))
    _write_manifests("sweep", {
        "ensemble": args.ensemble, "degree": args.degree, "load": args.load,
        "users": args.users, "samples": args.samples, "erase": args.erase,
        "out": args.out,
    }, args.seed, [], [args.out], t0)
    return 0


def _cmd_compare(args) -> int:
    t0 = time.monotonic()
    report = compare_asymptotic_empirical(
        args.degree, _parse_grid(args.load), args.users, args.samples,
        base_seed=args.seed, dx=args.dx, gap_bound=args.gap_bound,
    )
    write_compare_csv(report, args.out)
    print(json.dumps({"passed": report.passed}))
    _write_manifests("compare", {
        "degree": args.degree, "load": args.load, "users": args.users,
        "samples": args.samples, "dx": args.dx,
        "gap_bound": args.gap_bound, "out": args.out,
    }, args.seed, [], [args.out], t0)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="sparsemud", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a spreading code")
    p.add_argument("--ensemble", choices=["poisson", "regular"], required=True)
    p.add_argument("--users", type=int, required=True, help="number of users K")
    p.add_argument("--load", type=float, required=True, help="load beta = K/M")
    p.add_argument("--degree", type=float, required=True, help="mean user degree C")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("transmit", help="superpose bits into a chip signal")
    p.add_argument("--code", required=True)
    p.add_argument("--bits", default="random", help='"random" or a bits JSON file')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--erase", type=float, default=0.0,
                   help="fraction of chips to erase")
    p.add_argument("--out", required=True)
    p.add_argument("--bits-out", default=None,
                   help="also write the transmitted bits (usable as --truth later)")
    p.set_defaults(func=_cmd_transmit)

    p = sub.add_parser("decode", help="run the unit clause propagation detector")
    p.add_argument("--code", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", default=None, help="write a per-step trace CSV")
    p.add_argument("--out", default=None, help="also write the result JSON")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("oracle", help="exhaustive ground truth at small K")
    osub = p.add_subparsers(dest="oracle_cmd", required=True)
    pz = osub.add_parser("ztable", help="exact clause-reduction probabilities")
    pz.add_argument("--max-l", type=int, default=12)
    pv = osub.add_parser("verify", help="check a decode against all solutions")
    pv.add_argument("--code", required=True)
    pv.add_argument("--signal", required=True)
    pv.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("ode", help="integrate the mean-field equations")
    p.add_argument("--ensemble", choices=["poisson", "regular"], required=True)
    p.add_argument("--degree", type=float, required=True)
    p.add_argument("--load", type=float, required=True)
    p.add_argument("--lmax", type=int, default=None)
    p.add_argument("--dx", type=float, default=1e-4)
    p.add_argument("--out", default=None, help="trajectory CSV")
    p.set_defaults(func=_cmd_ode)

    p = sub.add_parser("sweep", help="Monte Carlo phase-diagram sweep")
    p.add_argument("--ensemble", choices=["poisson", "regular"], required=True)
    p.add_argument("--degree", required=True, help="C value or START:STOP:STEP")
    p.add_argument("--load", required=True, help="beta value or START:STOP:STEP")
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--erase", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("compare", help="mean-field x_D versus empirical medians")
    p.add_argument("--degree", type=float, required=True)
    p.add_argument("--load", required=True, help="beta value or START:STOP:STEP")
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dx", type=float, default=1e-4)
    p.add_argument("--gap-bound", type=float, default=0.02,
                   help="max |ODE - median| at loads where both are < 1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
