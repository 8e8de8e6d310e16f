"""Command line: gen, estimate, exact, experiment.

Run ``r`` of ``estimate`` and trial ``r`` of ``experiment`` use seed
``seed + r``; every command is a pure function of its arguments and input.
"""

from __future__ import annotations

import argparse
import csv
import io
import statistics
import sys
from dataclasses import dataclass, replace

from .countsketch import DEFAULT_C_D, DEFAULT_C_W
from .fk import FkConfig, RecursiveFkState, format_report
from .oracle import FrequencyVector, exact_fk
from .streams import StreamFile, format_stream, generate, read_stream

CSV_COLUMNS = ("trial", "estimate", "exact", "rel_error", "failed", "words")


def run_pipeline(stream: StreamFile, config: FkConfig) -> RecursiveFkState:
    state = RecursiveFkState(config, stream.n, m_hint=max(stream.m, 1))
    state.update_many(stream.items)
    return state


def estimate_report(stream: StreamFile, config: FkConfig, runs: int = 1) -> dict:
    """Median of ``runs`` independent pipelines plus per-run values."""
    if runs < 1 or runs % 2 == 0:
        raise ValueError(f"runs must be a positive odd number, got {runs}")
    values, overflowed, space = [], False, None
    for r in range(runs):
        state = run_pipeline(stream, replace(config, seed=config.seed + r))
        values.append(state.estimate())
        overflowed |= state.overflowed
        space = space or state.space_report()
    report = {"estimate": statistics.median(values), "runs": runs, "overflowed": overflowed}
    report.update({f"run_{r}": v for r, v in enumerate(values)})
    report.update(space)
    return report


@dataclass(frozen=True)
class ExperimentRow:
    trial: int
    estimate: float
    exact: float
    rel_error: float
    failed: bool
    words: int


def relative_error(estimate: float, exact: float) -> float:
    if exact == 0:
        return 0.0 if estimate == 0 else float("inf")
    return (estimate - exact) / exact


def experiment_rows(stream: StreamFile, config: FkConfig, trials: int) -> list[ExperimentRow]:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    exact = exact_fk(FrequencyVector.from_stream(stream.items, stream.n), config.k)
    rows = []
    for r in range(trials):
        state = run_pipeline(stream, replace(config, seed=config.seed + r))
        est = state.estimate()
        rel = relative_error(est, exact)
        rows.append(ExperimentRow(r, est, exact, rel, abs(rel) > config.epsilon,
                                  state.space_report()["total_words"]))
    return rows


def format_experiment(rows: list[ExperimentRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([row.trial, repr(row.estimate), repr(row.exact), repr(row.rel_error),
                         int(row.failed), row.words])
    fail = sum(r.failed for r in rows) / len(rows)
    mean_abs = sum(abs(r.rel_error) for r in rows) / len(rows)
    buf.write(f"# failure_fraction={fail!r} mean_abs_rel_error={mean_abs!r}\n")
    return buf.getvalue()


def _config(args) -> FkConfig:
    return FkConfig(
        k=args.k,
        epsilon=args.epsilon,
        t=args.t,
        seed=args.seed,
        base_capacity=args.base_capacity,
        c_w=args.c_w,
        c_d=args.c_d,
        c_alpha=args.c_alpha,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> None:
    items = generate(args.dist, args.n, args.m, args.seed)
    _emit(format_stream(items, args.n), args.out)


def cmd_estimate(args) -> None:
    stream = read_stream(args.input, args.n)
    _emit(format_report(estimate_report(stream, _config(args), args.runs)), args.out)


def cmd_exact(args) -> None:
    stream = read_stream(args.input, args.n)
    value = exact_fk(FrequencyVector.from_stream(stream.items, stream.n), args.k)
    _emit(f"exact={value!r}\n", args.out)


def cmd_experiment(args) -> None:
    stream = read_stream(args.input, args.n)
    _emit(format_experiment(experiment_rows(stream, _config(args), args.trials)), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recsketch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a synthetic stream file")
    gen.add_argument("--dist", default="zipf:1.2",
                     help="zipf:<s>, uniform or single_heavy:<ratio> (default zipf:1.2)")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_gen)

    def sketch_args(p, estimating=True):
        p.add_argument("input")
        p.add_argument("--n", type=int, help="universe size when the file has no header")
        p.add_argument("--k", type=float, required=True)
        p.add_argument("--out")
        if not estimating:
            return
        p.add_argument("--epsilon", type=float, default=0.2)
        p.add_argument("--t", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--base-capacity", type=int, default=1 << 16)
        p.add_argument("--c-w", type=float, default=DEFAULT_C_W)
        p.add_argument("--c-d", type=float, default=DEFAULT_C_D)
        p.add_argument("--c-alpha", type=float, default=1.0)

    est = sub.add_parser("estimate", help="median-of-runs F_k estimate")
    sketch_args(est)
    est.add_argument("--runs", type=int, default=1)
    est.set_defaults(func=cmd_estimate)

    exact = sub.add_parser("exact", help="exact F_k by brute force")
    sketch_args(exact, estimating=False)
    exact.set_defaults(func=cmd_exact)

    exp = sub.add_parser("experiment", help="repeated trials as CSV")
    sketch_args(exp)
    exp.add_argument("--trials", type=int, default=100)
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, IndexError) as exc:
        print(f"recsketch {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
