"""
Command-line entry point.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors. Defaults
come from the HARMONY_* environment (see harmony.core.config).
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from harmony import __version__
from harmony.bench.runner import build_decoder, count_rounds
from harmony.bench.sampling import shot_stream
from harmony.bench.sweep import CsvSink, compare_on_model, layered_sweep, scan_chi, sweep, threshold_sweep
from harmony.codes.generators import generate
from harmony.core.config import settings
from harmony.core.errors import HarmonyError
from harmony.core.logging import configure_logging
from harmony.decoders.ensemble import default_pooling
from harmony.models.basis import read_basis, sidecar_path, write_basis
from harmony.models.dem import parse_dem, serialize_dem
from harmony.models.hypergraph import ErrorHypergraph
from harmony.models.schemas import CodeSpec, DecoderSpec, EnsembleConfig, PerturbationParams
from harmony.models.shots import bits_to_str, format_shot, read_shots, write_shots

logger = logging.getLogger(__name__)

DECODERS = ("mwpm", "uncorrelated", "correlated", "ensemble", "layered", "tnml", "exact_ml")
POOLINGS = ("vote", "sum_likelihood", "most_likely_error")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.default_seed,
                        help="64-bit seed for shots and ensemble perturbations (default: %(default)s)")
    common.add_argument("--threads", type=int, default=settings.threads,
                        help="worker processes for Monte Carlo decoding; results do not depend on it "
                             "(default: %(default)s)")
    common.add_argument("--out", type=Path, default=None,
                        help="output file; its directory must exist (default: stdout)")
    common.add_argument("--log-level", default=settings.log_level,
                        help="logging level written to stderr (default: %(default)s)")
    return common


def _code_args(p: argparse.ArgumentParser, family_default: Optional[str] = None, lists: bool = False) -> None:
    p.add_argument("--family", choices=("repetition", "rotated_surface"), default=family_default,
                   help="code family of the generated phenomenological model (default: %(default)s)")
    if lists:
        p.add_argument("--d", type=_ints, help="odd code distances, comma-separated")
        p.add_argument("--p", type=_floats, help="physical error probabilities per round, comma-separated")
    else:
        p.add_argument("--d", type=int, help="odd code distance (>= 3)")
        p.add_argument("--p", type=float, help="physical error probability per round, in (0, 0.5)")
    p.add_argument("--rounds", type=int, default=None,
                   help="syndrome measurement rounds (default: equal to the distance)")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", type=Path, help="detector error model file")
    p.add_argument("--basis", type=Path, default=None,
                   help="basis sidecar JSON (default: <model>.basis.json when present)")


def _decoder_args(p: argparse.ArgumentParser, multiple: bool = True) -> None:
    p.add_argument("--decoder", choices=DECODERS, action="append" if multiple else "store",
                   help="decoder to run" + ("; repeat to compare on the same shots (default: correlated)"
                                            if multiple else " (default: correlated)"))
    p.add_argument("--n", type=_ints, default=None,
                   help=f"ensemble size(s), comma-separated (default: {settings.ensemble_size})")
    p.add_argument("--pooling", choices=POOLINGS, default=None,
                   help=f"ensemble pooling rule (default: vote on the repetition code, {settings.pooling} otherwise)")
    p.add_argument("--alphas", type=_floats, default=list(settings.alphas),
                   help="relative perturbation widths for p(1), p(2) and q, each in [0, 1] "
                        "(default: %(default)s)")
    p.add_argument("--chi", type=int, default=settings.default_chi,
                   help="tensor network bond dimension (default: %(default)s)")
    p.add_argument("--n1", type=int, default=settings.layered_n1,
                   help="layered decoding first-pass ensemble size (default: %(default)s)")
    p.add_argument("--n2", type=int, default=settings.layered_n2,
                   help="layered decoding second-pass ensemble size (default: %(default)s)")
    p.add_argument("--pooling2", choices=POOLINGS, default="most_likely_error",
                   help="layered decoding second-pass pooling (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="harmony", description="Harmonized correlated matching and tensor network decoding")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", parents=[common], help="generate a phenomenological error model",
                         description="Write a detector error model and its <model>.basis.json sidecar.")
    _code_args(gen)

    sample = sub.add_parser("sample", parents=[common], help="sample shots from a model",
                            description="Write one line per shot: detector bits, a space, observable bits. "
                                        "Paths ending in .gz are compressed.")
    _model_args(sample)
    sample.add_argument("--shots", type=int, required=True, help="number of shots")

    decode = sub.add_parser("decode", parents=[common], help="decode a shot file",
                            description="Write a predictions CSV with one row per shot.")
    _model_args(decode)
    decode.add_argument("--shots-file", type=Path, required=True, help="shot file (observable bits optional)")
    _decoder_args(decode, multiple=False)

    bench = sub.add_parser("bench", parents=[common], help="Monte Carlo logical error rates",
                           description="Decode one seeded shot stream per configuration with every decoder "
                                       "and write one CSV row per (configuration, decoder).")
    _code_args(bench, family_default="rotated_surface", lists=True)
    _model_args(bench)
    _decoder_args(bench)
    bench.add_argument("--shots", type=int, required=True, help="shots per configuration")
    bench.add_argument("--threshold", action="store_true", help="use 4d rounds for every distance")
    bench.add_argument("--json", type=Path, default=None, help="also write the table as JSON records")

    scan = sub.add_parser("scan-chi", parents=[common], help="tensor network convergence in bond dimension",
                          description="Tensor network decoding at each bond dimension on the same shots.")
    _code_args(scan, family_default="rotated_surface")
    scan.add_argument("--chis", type=_ints, required=True, help="bond dimensions, comma-separated")
    scan.add_argument("--shots", type=int, required=True, help="shots per bond dimension")
    scan.add_argument("--json", type=Path, default=None, help="also write the table as JSON records")

    layered = sub.add_parser("layered", parents=[common], help="layered decoding sweep over n1",
                             description="Correlated matching and layered decoders on the same shots; "
                                         "improvement is correlated over layered LER per round.")
    _code_args(layered, family_default="rotated_surface")
    layered.add_argument("--n1s", type=_ints, required=True, help="first-pass ensemble sizes, comma-separated")
    layered.add_argument("--n2", type=int, default=settings.layered_n2,
                         help="second-pass ensemble size (default: %(default)s)")
    layered.add_argument("--pooling2", choices=POOLINGS, default="most_likely_error",
                         help="second-pass pooling (default: %(default)s)")
    layered.add_argument("--alphas", type=_floats, default=list(settings.alphas),
                         help="relative perturbation widths (default: %(default)s)")
    layered.add_argument("--shots", type=int, required=True, help="shots")
    layered.add_argument("--json", type=Path, default=None, help="also write the table as JSON records")
    return parser


def _check_paths(args: argparse.Namespace) -> None:
    for name in ("out", "json"):
        path = getattr(args, name, None)
        if path is not None and not path.resolve().parent.is_dir():
            raise UsageError(f"--{name}: directory {path.parent} does not exist")
    if getattr(args, "threads", 1) < 1:
        raise UsageError("--threads must be >= 1")
    if hasattr(args, "shots") and isinstance(args.shots, int) and args.shots < 1:
        raise UsageError("--shots must be >= 1")


def _params(args: argparse.Namespace) -> PerturbationParams:
    if len(args.alphas) != 3:
        raise UsageError("--alphas takes exactly three values")
    a1, a2, a3 = args.alphas
    return PerturbationParams(alpha1=a1, alpha2=a2, alpha3=a3, seed=args.seed)


def _decoder_specs(args: argparse.Namespace) -> List[DecoderSpec]:
    kinds = args.decoder or ["correlated"]
    if isinstance(kinds, str):
        kinds = [kinds]
    params = _params(args)
    pooling = args.pooling or default_pooling(getattr(args, "family", None) if args.model is None else None)
    sizes = args.n or [settings.ensemble_size]
    specs = []
    for kind in kinds:
        if kind == "ensemble":
            specs.extend(
                DecoderSpec(kind=kind, ensemble=EnsembleConfig(size=n, pooling=pooling, params=params))
                for n in sizes
            )
        else:
            specs.append(DecoderSpec(
                kind=kind, chi=args.chi, n1=args.n1, n2=args.n2, pooling2=args.pooling2,
                ensemble=EnsembleConfig(pooling=pooling, params=params),
            ))
    return specs


def _code_spec(args: argparse.Namespace) -> CodeSpec:
    if args.family is None or args.d is None or args.p is None:
        raise UsageError("--family, --d and --p are required")
    return CodeSpec(family=args.family, distance=args.d, rounds=args.rounds or args.d, p=args.p)


def _load_model(args: argparse.Namespace) -> ErrorHypergraph:
    if args.model is None:
        raise UsageError("--model is required")
    text = args.model.read_text()
    basis_path = args.basis
    if basis_path is None and sidecar_path(args.model).exists():
        basis_path = sidecar_path(args.model)
    basis = read_basis(basis_path) if basis_path is not None else None
    return parse_dem(text, basis=basis)


def _write_table(frame: pd.DataFrame, args: argparse.Namespace) -> None:
    if args.out is None:
        sys.stdout.write(frame.to_csv(index=False))
    if getattr(args, "json", None) is not None:
        frame.to_json(args.json, orient="records", indent=2)


def cmd_gen(args: argparse.Namespace) -> None:
    spec = _code_spec(args)
    h = generate(spec)
    text = serialize_dem(h)
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.write_text(text)
    write_basis(sidecar_path(args.out), h.detector_basis)
    logger.info(f"Wrote {len(h)} mechanisms over {h.num_detectors} detectors to {args.out}")


def cmd_sample(args: argparse.Namespace) -> None:
    h = _load_model(args)
    shots = shot_stream(h, args.seed, 0, args.shots)
    if args.out is None:
        for shot in shots:
            sys.stdout.write(format_shot(shot) + "\n")
        return
    count = write_shots(args.out, shots)
    logger.info(f"Wrote {count} shots to {args.out}")


def cmd_decode(args: argparse.Namespace) -> None:
    h = _load_model(args)
    if args.n is not None and len(args.n) != 1:
        raise UsageError("decode takes a single --n")
    spec = _decoder_specs(args)[0]
    shots = read_shots(args.shots_file, h)
    decode = build_decoder(h, spec)
    rows = []
    for i, shot in enumerate(shots):
        decision = decode(shot)
        row = {"shot": i, "prediction": bits_to_str(decision.prediction)}
        if spec.kind in ("ensemble", "layered"):
            row["confidence"] = decision.confidence
        if spec.kind == "layered":
            row["triggered"] = bool(decision.triggered)
        if shot.true_observables is not None:
            row["correct"] = bool((decision.prediction == shot.true_observables).all())
        rows.append(row)
    frame = pd.DataFrame(rows)
    if args.out is not None:
        frame.to_csv(args.out, index=False)
    else:
        sys.stdout.write(frame.to_csv(index=False))
    logger.info(f"Decoded {len(shots)} shots with {spec.label}")


def cmd_bench(args: argparse.Namespace) -> None:
    decoders = _decoder_specs(args)
    sink = CsvSink(args.out)
    if args.model is not None:
        h = _load_model(args)
        frame = compare_on_model(h, count_rounds(h), decoders, args.shots, args.seed, sink, args.threads)
    else:
        if args.d is None or args.p is None:
            raise UsageError("bench needs --model or --d and --p")
        if args.threshold:
            frame = threshold_sweep(args.family, args.d, args.p, args.shots, args.seed, decoders, sink, args.threads)
        else:
            codes = [
                CodeSpec(family=args.family, distance=d, rounds=args.rounds or d, p=p) for d in args.d for p in args.p
            ]
            frame = sweep(codes, decoders, args.shots, args.seed, sink, args.threads)
    _write_table(frame, args)


def cmd_scan_chi(args: argparse.Namespace) -> None:
    frame = scan_chi(_code_spec(args), args.chis, args.shots, args.seed, CsvSink(args.out), args.threads)
    _write_table(frame, args)


def cmd_layered(args: argparse.Namespace) -> None:
    if any(n1 > args.n2 or n1 < 1 for n1 in args.n1s):
        raise UsageError("every --n1s value must lie in [1, --n2]")
    frame = layered_sweep(
        _code_spec(args), args.n1s, args.n2, args.shots, args.seed,
        pooling2=args.pooling2, params=_params(args), sink=CsvSink(args.out), threads=args.threads,
    )
    _write_table(frame, args)


COMMANDS = {
    "gen": cmd_gen,
    "sample": cmd_sample,
    "decode": cmd_decode,
    "bench": cmd_bench,
    "scan-chi": cmd_scan_chi,
    "layered": cmd_layered,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_paths(args)
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return 1
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)

    configure_logging(args.log_level)
    try:
        COMMANDS[args.command](args)
    except UsageError as e:
        sys.stderr.write(f"harmony {args.command}: error: {e}\n")
        return 1
    except ValidationError as e:
        sys.stderr.write(f"harmony {args.command}: invalid parameters: {e}\n")
        return 1
    except (HarmonyError, OSError) as e:
        sys.stderr.write(f"harmony {args.command}: {e}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
