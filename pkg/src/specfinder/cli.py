"""``specfinder`` command line.

Exit codes: 0 ok, 1 invariant failure, 2 usage or parse error, 3 numeric failure.
Every subcommand computes all of its outputs before touching the output
directory, so a failed run leaves nothing behind.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .conditional import IDEAL, PULSE, ConversionParams, resolve_conventions
from .document import DocumentError, dump_document, parse_document, sha256_text
from .hamiltonian import PairHamiltonian, random_hamiltonian, spread_bound, to_dense
from .pauli import NumericalError, PauliAxis, basis_state, hermitian_eig
from .pulses import (
    decoupling_schedule,
    inversion_schedule,
    isolate_pair_schedule,
    parse_schedule,
    rescale_schedule,
    symbolic_average,
)
from .qpe import (
    MIXED,
    THERMAL,
    PEConfig,
    density_of_states,
    gap_report,
    histogram_from_distribution,
    initial_density,
    run_qpe,
)
from .verify import run_all

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- helpers


def read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def load_hamiltonian(path: str) -> tuple[PairHamiltonian, str]:
    text = read_text(path)
    H, _ = parse_document(text)
    return H, sha256_text(text)


def write_outputs(out_dir: str, files: dict[str, str]) -> None:
    """Stage every file next to its destination, then rename into place."""
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=target)
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, target / name))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, dest in staged:
        os.replace(tmp, dest)


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def manifest(subcommand: str, config: dict, input_sha: str | None, seed, outputs: dict[str, str], started: float | None) -> str:
    core = {
        "subcommand": subcommand,
        "config": config,
        "input_sha256": input_sha,
        "seed": seed,
        "conventions": resolve_conventions().as_dict(),
        "version": __version__,
    }
    body = dict(core)
    body["run_id"] = sha256_text(dumps_json(core))[:16]
    body["outputs"] = {name: sha256_text(text) for name, text in sorted(outputs.items())}
    if started is not None:
        body["wall_time_s"] = time.perf_counter() - started
    return dumps_json(body)


def parse_term(text: str, n: int) -> tuple[int, int, PauliAxis, PauliAxis]:
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError(f"expected j,k,alpha,beta, got {text!r}")
    try:
        j, k = int(parts[0]), int(parts[1])
        a, b = PauliAxis.parse(parts[2]), PauliAxis.parse(parts[3])
    except ValueError as exc:
        raise UsageError(f"bad term {text!r}: {exc}") from None
    if a is PauliAxis.I or b is PauliAxis.I:
        raise UsageError("term axes must be x, y or z")
    if not (0 <= j < n and 0 <= k < n and j != k):
        raise UsageError(f"need distinct qubits in [0, {n}), got {j}, {k}")
    return j, k, a, b


def parse_init(text: str, H: PairHamiltonian):
    """Initial target state: eigenstate:i, basis:bits, mixed or thermal:beta."""
    kind, _, arg = text.partition(":")
    dim = 2**H.n
    if kind == "mixed" and not arg:
        return np.eye(dim, dtype=complex) / dim, {"init": "mixed"}
    if kind == "thermal":
        try:
            beta = float(arg)
        except ValueError:
            raise UsageError(f"bad inverse temperature {arg!r}") from None
        if not beta >= 0:
            raise UsageError("thermal beta must be nonnegative")
        return initial_density(H, THERMAL, beta), {"init": "thermal", "beta": arg}
    if kind == "eigenstate":
        try:
            i = int(arg)
        except ValueError:
            raise UsageError(f"bad eigenstate index {arg!r}") from None
        if not 0 <= i < dim:
            raise UsageError(f"eigenstate index {i} out of range [0, {dim})")
        _, v = hermitian_eig(to_dense(H))
        return v[:, i], {"init": "eigenstate", "index": i}
    if kind == "basis":
        if len(arg) != H.n or set(arg) - {"0", "1"}:
            raise UsageError(f"basis state needs {H.n} bits, got {arg!r}")
        return basis_state(arg), {"init": "basis", "bits": arg}
    raise UsageError(f"unknown --init {text!r}")


def build_config(args, H: PairHamiltonian) -> tuple[PEConfig, dict]:
    if args.delta_override is not None:
        if not args.delta_override > 0:
            raise UsageError("--delta-override must be positive")
        delta, source = args.delta_override, "override"
    else:
        delta, source = spread_bound(H), "spread_bound"
        if delta == 0.0:
            delta, source = 1.0, "default (zero Hamiltonian)"
    params = None
    if args.mode == PULSE:
        params = ConversionParams(args.epsilon, args.p, args.slices, PULSE, not args.no_symmetric)
    cfg = PEConfig.from_delta(args.m, delta, mode=args.mode, params=params, shots=args.shots, seed=args.seed)
    return cfg, {"pe": cfg.as_dict(), "delta_source": source}


def spectrum_csv(H: PairHamiltonian) -> str:
    w, _ = hermitian_eig(to_dense(H))
    return "index,eigenvalue\n" + "".join(f"{i},{float(e)!r}\n" for i, e in enumerate(w))


# ---------------------------------------------------------------- commands


def cmd_random(args) -> int:
    H = random_hamiltonian(args.n, args.seed, args.range)
    text = dump_document(H, {"generator": "random_hamiltonian", "seed": args.seed, "range": args.range})
    if args.out:
        out = Path(args.out)
        write_outputs(str(out.parent) if str(out.parent) else ".", {out.name: text})
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    started = time.perf_counter() if args.timing else None
    H, digest = load_hamiltonian(args.input)
    if args.shots < 1:
        raise UsageError("--shots must be at least 1")
    cfg, config = build_config(args, H)
    initial, init_meta = parse_init(args.init, H)
    config.update(init_meta)
    dist = run_qpe(H, initial, cfg)
    hist = histogram_from_distribution(dist, sampled=True)
    files = {"histogram.csv": hist.to_csv(), "spectrum.csv": spectrum_csv(H)}
    files["manifest.json"] = manifest("spectrum", config, digest, args.seed, files, started)
    write_outputs(args.out_dir, files)
    return EXIT_OK


def cmd_dos(args) -> int:
    started = time.perf_counter() if args.timing else None
    H, digest = load_hamiltonian(args.input)
    if not args.exact and args.shots < 1:
        raise UsageError("--shots must be at least 1")
    cfg, config = build_config(args, H)
    if args.init == "mixed":
        prep, beta = MIXED, 0.0
    elif args.init.startswith("thermal:"):
        prep = THERMAL
        try:
            beta = float(args.init.partition(":")[2])
        except ValueError:
            raise UsageError(f"bad --init {args.init!r}") from None
        if not beta >= 0:
            raise UsageError("thermal beta must be nonnegative")
    else:
        raise UsageError("dos accepts --init mixed or thermal:beta")
    if not args.threshold >= 0:
        raise UsageError("--threshold must be nonnegative")
    config.update(init=args.init, exact=args.exact, threshold=args.threshold)
    hist = density_of_states(H, cfg, prep, beta, exact=args.exact)
    gaps = gap_report(hist, args.threshold)
    gap_doc = {
        "threshold": args.threshold,
        "resolution": cfg.resolution,
        "gaps": [{"first_empty": a, "last_empty": b, "midpoint": 0.5 * (a + b)} for a, b in gaps],
    }
    files = {"histogram.csv": hist.to_csv(), "gaps.json": dumps_json(gap_doc), "spectrum.csv": spectrum_csv(H)}
    files["manifest.json"] = manifest("dos", config, digest, args.seed, files, started)
    write_outputs(args.out_dir, files)
    return EXIT_OK


def cmd_verify(args) -> int:
    if (args.input is None) == (args.random is None):
        raise UsageError("give either an input document or --random N SEED")
    if args.random is not None:
        n, seed = args.random
        H = random_hamiltonian(n, seed)
        source = {"random": {"n": n, "seed": seed}}
    else:
        H, digest = load_hamiltonian(args.input)
        source = {"input_sha256": digest}
    params = ConversionParams(args.epsilon, args.p, args.slices, args.mode, not args.no_symmetric)
    report = run_all(H, params, args.m)
    report.update(source=source, params=params.as_dict(), m=args.m)
    text = dumps_json(report)
    if args.out:
        out = Path(args.out)
        write_outputs(str(out.parent), {out.name: text})
    sys.stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


def _decouple_set(text: str, n: int) -> tuple[int, ...]:
    if text == "all":
        return tuple(range(n))
    if text in ("", "none"):
        return ()
    try:
        qubits = tuple(sorted({int(q) for q in text.split(",")}))
    except ValueError:
        raise UsageError(f"bad --decouple {text!r}") from None
    if any(not 0 <= q < n for q in qubits):
        raise UsageError(f"--decouple qubits must lie in [0, {n})")
    return qubits


def cmd_compile_schedule(args) -> int:
    started = time.perf_counter() if args.timing else None
    H, digest = load_hamiltonian(args.input)
    n = H.n
    if not args.time > 0:
        raise UsageError("--time must be positive")
    if args.load:
        construction = {"load": sha256_text(read_text(args.load))}
        schedule = parse_schedule(read_text(args.load))
    elif args.decouple is not None:
        M = _decouple_set(args.decouple, n)
        construction = {"decouple": list(M)}
        schedule = decoupling_schedule(n, M, args.time)
    elif args.isolate:
        term = parse_term(args.isolate, n)
        construction = {"isolate": args.isolate}
        schedule = isolate_pair_schedule(n, *term, args.time)
    elif args.invert:
        term = parse_term(args.invert, n)
        construction = {"invert": args.invert, "p": args.p}
        schedule = inversion_schedule(*term, args.time, args.p, n=n)
    else:
        term = parse_term(args.rescale, n)
        construction = {"rescale": args.rescale}
        schedule = rescale_schedule(n, *term, args.time)
    if schedule.n != n:
        raise UsageError(f"schedule acts on {schedule.n} qubits but the document has {n}")
    avg = symbolic_average(schedule, H)
    text = schedule.dumps()
    average = json.loads(dump_document(avg))
    average.update(nonzero=avg.count_nonzero(), total_time=schedule.total_time, segments=len(schedule))
    files = {"schedule.txt": text, "average.json": dumps_json(average)}
    config = {"construction": construction, "time": args.time}
    files["manifest.json"] = manifest("compile-schedule", config, digest, None, files, started)
    write_outputs(args.out_dir, files)
    return EXIT_OK


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_pe_flags(p: argparse.ArgumentParser, shots: int = 4096) -> None:
    p.add_argument("input", help="Hamiltonian JSON document ('-' for stdin)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--m", type=int, default=6, help="ancilla register size")
    p.add_argument("--shots", type=int, default=shots)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta-override", type=float, default=None)
    _add_sim_flags(p)
    p.add_argument("--timing", action="store_true", help="record wall time in the manifest")


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=(IDEAL, PULSE), default=IDEAL)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--p", type=int, default=8, help="inversion slices")
    p.add_argument("--slices", type=int, default=4, help="forward cycle repetitions")
    p.add_argument("--no-symmetric", action="store_true", help="use plain instead of palindromic cycles")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="specfinder", description="Spectrum finding with pulse-engineered conditional evolution.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("random", help="emit a seeded Hamiltonian document")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--range", type=float, default=1.0, help="coefficients drawn from [-range, range]")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("spectrum", help="sampled phase-estimation histogram")
    _add_pe_flags(p)
    p.add_argument("--init", default="mixed", help="eigenstate:i | basis:bits | mixed | thermal:beta")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("dos", help="density of states and gap report")
    _add_pe_flags(p)
    p.add_argument("--init", default="mixed", help="mixed | thermal:beta")
    p.add_argument("--exact", action="store_true", help="exact distribution, no sampling")
    p.add_argument("--threshold", type=float, default=1e-3, help="probability below which a bin counts as empty")
    p.set_defaults(func=cmd_dos)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("input", nargs="?", default=None)
    p.add_argument("--random", nargs=2, type=int, metavar=("N", "SEED"))
    p.add_argument("--m", type=int, default=7)
    p.add_argument("--out", default=None)
    _add_sim_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compile-schedule", help="emit a pulse schedule and its average Hamiltonian")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--decouple", metavar="M", help="'all', 'none' or comma-separated qubits")
    group.add_argument("--isolate", metavar="j,k,a,b")
    group.add_argument("--invert", metavar="j,k,a,b")
    group.add_argument("--rescale", metavar="j,k,a,b")
    group.add_argument("--load", metavar="FILE", help="re-average an existing schedule file")
    p.add_argument("--p", type=int, default=8)
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_compile_schedule)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with np.errstate(invalid="raise", over="raise", divide="raise"):
            return args.func(args)
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"specfinder: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DocumentError, UsageError, ValueError) as exc:
        print(f"specfinder: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
