"""Command-line front end.

Subcommands: channel, teleport, tomo, fidelity, compare, sweep.  Results are
ResultEnvelope JSON (CSV for histograms and sweep tables via --format csv).
Exit codes: 0 success, 2 usage or input error, 3 internal invariant
violation.  The seed comes from --seed, else HYPERTELEPORT_SEED, else 0;
identical seeds produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from importlib import resources

import numpy as np

from . import hypergraph as hg
from . import noise as nz
from . import serialize as ser
from . import statevec as sv
from . import teleport as tp
from . import tomography as tm
from .statevec import InvariantViolation

DEFAULT_SHOTS = 8192

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


def fixture_path(name: str) -> str:
    """Path of a bundled density-matrix fixture, e.g. 'eq18'."""
    ref = resources.files("hyperteleport.fixtures").joinpath(f"{name}.json")
    return str(ref)


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from None


def _load_density(path: str) -> tm.DensityMatrix:
    data = _load_json(path)
    try:
        return ser.density_from_dict(data)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad density matrix in {path}: {exc}") from None


def _load_histogram(path: str) -> sv.ShotHistogram:
    data = _load_json(path)
    if "outputs" in data and "histogram" in data.get("outputs", {}):
        data = data["outputs"]["histogram"]
    try:
        return ser.histogram_from_dict(data)
    except (KeyError, ValueError, InvariantViolation) as exc:
        # inconsistent counts in a user-supplied file are an input problem
        raise UsageError(f"bad histogram in {path}: {exc}") from None


def _parse_message(args, protocol: str):
    """Message from --message (inline JSON), --message-file, or --u3 angles."""
    spec = None
    if getattr(args, "message", None):
        try:
            spec = json.loads(args.message)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--message is not valid JSON: {exc}") from None
    elif getattr(args, "message_file", None):
        spec = _load_json(args.message_file)

    try:
        if protocol == "single":
            if spec is not None:
                return tp.SingleQubitMessage.from_dict(spec)
            if args.u3:
                if len(args.u3) != 1:
                    raise UsageError("single-qubit messages take exactly one --u3 triple")
                return tp.SingleQubitMessage.from_u3(*args.u3[0])
            return tp.SingleQubitMessage.from_u3(math.pi / 2, 0.0, 0.0)
        if spec is not None:
            return tp.TwoQubitMessage.from_dict(spec)
        if args.u3:
            if len(args.u3) != 2:
                raise UsageError("two-qubit messages take exactly two --u3 triples")
            return tp.TwoQubitMessage.from_u3_pair(args.u3[0], args.u3[1])
        return tp.TwoQubitMessage(0.5, 0.5, 0.5, 0.5)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed message spec: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse_u3_triple(text: str) -> tuple[float, float, float]:
    parts = text.replace(",", " ").split()
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected 'theta phi lam', got {text!r}")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HYPERTELEPORT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"HYPERTELEPORT_SEED is not an integer: {env!r}") from None
    return 0


def _load_noise(args) -> nz.NoiseModel | None:
    if not getattr(args, "noise", None):
        return None
    data = _load_json(args.noise)
    try:
        return nz.NoiseModel.from_dict(data)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad noise model in {args.noise}: {exc}") from None


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _histogram_csv(hist_dict: dict) -> str:
    lines = ["bitstring,count"]
    for key in sorted(hist_dict["counts"]):
        lines.append(f"{key},{hist_dict['counts'][key]}")
    return "\n".join(lines) + "\n"


def _sweep_csv(table: list) -> str:
    lines = ["gate_error_prob,fidelity"]
    for p, f in table:
        lines.append(f"{p!r},{f!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_channel(args) -> int:
    seed = _resolve_seed(args)
    if args.hypergraph:
        data = _load_json(args.hypergraph)
        try:
            graph = hg.Hypergraph.from_dict(data)
            state = hg.build_hypergraph_state(graph)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        params = {"kind": "custom", "hypergraph": graph.to_dict()}
    elif args.kind == "3q":
        channel = hg.build_channel_3q()
        state = channel.state
        params = {"kind": "3q", "alice": list(channel.alice_qubits), "bob": list(channel.bob_qubits)}
    elif args.kind == "4q":
        channel = hg.build_channel_4q()
        state = channel.state
        params = {"kind": "4q", "alice": list(channel.alice_qubits), "bob": list(channel.bob_qubits)}
    else:
        raise UsageError("channel requires --kind {3q,4q} or --hypergraph FILE")
    env = ser.envelope("channel", params, seed, {"state": ser.state_to_dict(state)})
    _emit(args, ser.dumps(env))
    return EXIT_OK


def cmd_teleport(args) -> int:
    seed = _resolve_seed(args)
    msg = _parse_message(args, args.protocol)
    noise = _load_noise(args)

    if args.protocol == "single":
        outcomes = tp.teleport_single(msg)
        circuit, n, bob = tp.full_circuit_single(msg)
    else:
        outcomes = tp.teleport_two(msg)
        circuit, n, bob = tp.full_circuit_two(msg)
    n_alice = n - len(bob)

    msg_state = msg.state()
    branches = [
        {
            "alice_bits": o.alice_bits,
            "probability": o.probability,
            "correction": list(o.applied_correction),
            "corrected_fidelity": float(abs(np.vdot(o.bob_state_corrected.amplitudes, msg_state.amplitudes))),
        }
        for o in outcomes
    ]

    if noise is None:
        final = sv.apply_circuit(sv.zero_state(n), circuit)
        full_hist = sv.sample_shots(final, args.shots, seed)
    else:
        full_hist = nz.noisy_run(circuit, n, nz.NoiseModel(noise.gate_error_prob, noise.readout_flip_prob, seed), args.shots)
    alice_hist = nz.marginal_histogram(full_hist, tuple(range(n_alice)))

    params = {
        "protocol": args.protocol,
        "message": msg.to_dict(),
        "shots": args.shots,
        "noise": noise.to_dict() if noise else None,
    }
    hist_dict = ser.histogram_to_dict(alice_hist)
    if args.format == "csv":
        _emit(args, _histogram_csv(hist_dict))
        return EXIT_OK
    env = ser.envelope("teleport", params, seed, {"histogram": hist_dict, "branches": branches})
    _emit(args, ser.dumps(env))
    return EXIT_OK


def cmd_tomo(args) -> int:
    seed = _resolve_seed(args)
    if args.state_file:
        state = ser.state_from_dict(_load_json(args.state_file))
        try:
            state.check_normalized(1e-9)
        except InvariantViolation as exc:
            raise UsageError(str(exc)) from None
        target = state
        params = {"target": "state-file", "path": args.state_file}
    elif args.target == "teleported-single":
        msg = _parse_message(args, "single")
        target = tm.density_from_matrix(tp.teleported_bob_density("single", msg))
        params = {"target": "teleported-single", "message": msg.to_dict()}
    elif args.target == "teleported-two":
        msg = _parse_message(args, "two")
        target = tm.density_from_matrix(tp.teleported_bob_density("two", msg))
        params = {"target": "teleported-two", "message": msg.to_dict()}
    else:
        raise UsageError("tomo requires --target {teleported-single,teleported-two} or --state-file FILE")

    if target.n_qubits > tm.MAX_TOMO_QUBITS:
        raise UsageError(f"tomography supports at most {tm.MAX_TOMO_QUBITS} qubits")
    rho = tm.tomograph_state(target, shots=args.shots, seed=seed, mode=args.mode)
    params.update({"mode": args.mode, "shots": args.shots if args.mode == "sampled" else None})
    env = ser.envelope("tomo", params, seed, {"density_matrix": ser.density_to_dict(rho)})
    _emit(args, ser.dumps(env))
    return EXIT_OK


def cmd_fidelity(args) -> int:
    seed = _resolve_seed(args)
    rho_t = _load_density(args.rho_t)
    rho_e = _load_density(args.rho_e)
    try:
        report = tm.fidelity_report(rho_t, rho_e)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    outputs = {
        "fidelity": report.value,
        "fidelity_4dp": f"{report.value:.4f}",
        "psd_clamped": report.clamped,
        "clamped_weight": report.clamped_weight,
        "rank1_shortcut": report.used_rank1_shortcut,
    }
    env = ser.envelope("fidelity", {"rho_t": args.rho_t, "rho_e": args.rho_e}, seed, outputs)
    _emit(args, ser.dumps(env))
    return EXIT_OK


def cmd_compare(args) -> int:
    seed = _resolve_seed(args)
    hist_a = _load_histogram(args.hist_a)
    hist_b = _load_histogram(args.hist_b)
    if hist_a.n_qubits != hist_b.n_qubits:
        raise UsageError(f"histograms have different key widths: {hist_a.n_qubits} vs {hist_b.n_qubits}")
    freq_a = hist_a.frequencies()
    freq_b = hist_b.frequencies()
    keys = sorted(set(freq_a) | set(freq_b))
    deltas = {k: freq_a.get(k, 0.0) - freq_b.get(k, 0.0) for k in keys}
    tvd = 0.5 * sum(abs(d) for d in deltas.values())
    env = ser.envelope(
        "compare",
        {"hist_a": args.hist_a, "hist_b": args.hist_b},
        seed,
        {"tvd": tvd, "per_key_delta": deltas},
    )
    _emit(args, ser.dumps(env))
    return EXIT_OK


def cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    msg = _parse_message(args, args.protocol)
    grid = sorted(args.grid)
    table = nz.fidelity_vs_noise(
        args.protocol, msg, grid, shots=args.shots, seed=seed, readout_flip=args.readout_flip, repeats=args.repeats
    )
    if args.format == "csv":
        _emit(args, _sweep_csv(table))
        return EXIT_OK
    params = {
        "protocol": args.protocol,
        "message": msg.to_dict(),
        "grid": grid,
        "shots": args.shots,
        "readout_flip": args.readout_flip,
        "repeats": args.repeats,
    }
    env = ser.envelope("sweep", params, seed, {"sweep": [{"gate_error_prob": p, "fidelity": f} for p, f in table]})
    _emit(args, ser.dumps(env))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperteleport", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, shots=True, fmt=False):
        p.add_argument("--seed", type=int, default=None, help="RNG seed (env HYPERTELEPORT_SEED, then 0)")
        p.add_argument("--out", default=None, help="output file (default stdout)")
        if shots:
            p.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("channel", help="build an entanglement channel or hypergraph state")
    p.add_argument("--kind", choices=("3q", "4q"), default=None)
    p.add_argument("--hypergraph", default=None, help='JSON file {"n": 3, "edges": [[0,1,2]]}')
    common(p, shots=False)
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("teleport", help="run a teleportation protocol")
    p.add_argument("--protocol", choices=("single", "two"), required=True)
    p.add_argument("--message", default=None, help='inline JSON, e.g. {"alpha": [1, 0], "beta": [0, 0]}')
    p.add_argument("--message-file", default=None)
    p.add_argument("--u3", action="append", type=_parse_u3_triple, default=None, metavar="'THETA PHI LAM'")
    p.add_argument("--noise", default=None, help="noise model JSON file")
    common(p, fmt=True)
    p.set_defaults(func=cmd_teleport)

    p = sub.add_parser("tomo", help="reconstruct a density matrix by tomography")
    p.add_argument("--target", choices=("teleported-single", "teleported-two"), default=None)
    p.add_argument("--state-file", default=None, help="statevector JSON to tomograph instead")
    p.add_argument("--message", default=None)
    p.add_argument("--message-file", default=None)
    p.add_argument("--u3", action="append", type=_parse_u3_triple, default=None)
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    common(p)
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("fidelity", help="Uhlmann fidelity between two stored density matrices")
    p.add_argument("rho_t", help="theoretical density matrix JSON")
    p.add_argument("rho_e", help="experimental density matrix JSON")
    common(p, shots=False)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("compare", help="total variation distance between two histograms")
    p.add_argument("hist_a")
    p.add_argument("hist_b")
    common(p, shots=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="pipeline fidelity over a gate-error grid")
    p.add_argument("--protocol", choices=("single", "two"), default="single")
    p.add_argument("--message", default=None)
    p.add_argument("--message-file", default=None)
    p.add_argument("--u3", action="append", type=_parse_u3_triple, default=None)
    p.add_argument("--grid", type=float, nargs="+", required=True)
    p.add_argument("--readout-flip", type=float, default=0.0)
    p.add_argument("--repeats", type=int, default=1)
    common(p, fmt=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
