"""Command-line front door.

Every subcommand builds one report: a command echo, the model in play,
notes about conventions that applied, and a results table.  Reports print
as JSON (the full report) or CSV (just the table, for spreadsheets and
plotting scripts).  Exact integers and rationals are printed as decimal
strings, never floats, because map counts outgrow doubles quickly.

Output is byte-identical for identical inputs and seeds: wall time is
only attached when --timing is passed, and everything else is ordered
deterministically.

Exit codes: 0 when everything asked for checked out, 1 when a requested
cross-check failed, 2 for bad usage or parse errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import random
import sys
import time
from fractions import Fraction

from .words import Word, word_to_str
from .potential import (Potential, PotentialSyntaxError, StarSpec,
                        parse_potential, parse_rational, parse_word)
from .engine import MapCounter, TruncationBound, catalan
from . import oracle as oracle_mod
from .oracle import count_with_adjoints, genus_census
from .onematrix import solve_equilibrium
from .montecarlo import MCConfig, sample
from . import ising as ising_mod


class CheckFailure(Exception):
    """A cross-check the user asked for did not hold."""


# -- report plumbing -----------------------------------------------------------


@dataclasses.dataclass
class Report:
    command: str
    model: str | None = None
    seed: int | None = None
    notes: list[str] = dataclasses.field(default_factory=list)
    results: list[dict] = dataclasses.field(default_factory=list)
    summary: dict = dataclasses.field(default_factory=dict)
    wall_time_s: float | None = None


def _scalar(value):
    """Stringify exact values; let floats and bools through as they are."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        return value
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else str(value)
    if isinstance(value, int):
        return str(value)
    return str(value)


def _emit(report: Report, fmt: str, columns: list[str]) -> None:
    if fmt == "json":
        payload = {
            "command": report.command,
            "model": report.model,
            "seed": report.seed,
            "notes": report.notes,
            "results": [{k: _scalar(v) for k, v in row.items()}
                        for row in report.results],
            "summary": {k: _scalar(v) for k, v in report.summary.items()},
        }
        if report.wall_time_s is not None:
            payload["wall_time_s"] = report.wall_time_s
        print(json.dumps(payload, indent=2))
        return
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in report.results:
        writer.writerow(["" if row.get(c) is None else _scalar(row.get(c, ""))
                         for c in columns])
    sys.stdout.write(out.getvalue())


def _add_format_flags(p: argparse.ArgumentParser, default: str = "json",
                      ) -> None:
    p.add_argument("--format", choices=("json", "csv"), default=default,
                   help=f"output format (default {default})")
    p.add_argument("--timing", action="store_true",
                   help="attach wall time to JSON output (breaks "
                        "byte-for-byte determinism)")


def _parse_orders(text: str, num_terms: int) -> tuple[int, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    orders = tuple(int(p) for p in parts)
    if len(orders) != num_terms:
        raise PotentialSyntaxError(
            f"--k lists {len(orders)} orders but the potential has "
            f"{num_terms} terms")
    if any(k < 0 for k in orders):
        raise PotentialSyntaxError("orders must be non-negative")
    return orders


def _bindings(pairs: list[str]) -> dict[str, Fraction]:
    out = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep:
            raise PotentialSyntaxError(f"--set wants NAME=RATIONAL, got {pair!r}")
        out[name.strip()] = parse_rational(value.strip())
    return out


def _model(args) -> tuple[Potential, StarSpec, tuple[Fraction, ...]]:
    if not args.potential:
        raise PotentialSyntaxError("this command needs --potential")
    pot = parse_potential(args.potential)
    spec = pot.star_spec()
    couplings = pot.bind(_bindings(args.set))
    return pot, spec, couplings


def _rational_list(text: str) -> list[Fraction]:
    return [parse_rational(p) for p in text.split(",") if p.strip()]


# -- subcommands ----------------------------------------------------------------


def cmd_count(args) -> tuple[Report, list[str], int]:
    # counts are indexed by --k, so named couplings may stay unbound
    if not args.potential:
        raise PotentialSyntaxError("this command needs --potential")
    spec = parse_potential(args.potential).star_spec()
    root = parse_word(args.root, spec.num_colors)
    orders = _parse_orders(args.k, spec.num_terms)
    counter = MapCounter(spec)
    doubled = counter.map_count(root, orders)
    report = Report("count", model=args.potential)
    report.notes.append(
        "map_count uses the doubled convention: every interaction word "
        "is counted together with its reversal")
    row: dict = {"root": word_to_str(root),
                 "orders": " ".join(map(str, orders)),
                 "map_count": doubled}
    stars = sum(orders)
    if all(oracle_mod.reversal_is_rotation(w) for w in spec.star_words):
        per_pair, rem = divmod(doubled, 2 ** stars)
        if rem == 0:
            row["per_pair_count"] = per_pair
            report.notes.append(
                "per_pair_count divides out 2 per star (every reversal "
                "here is a rotation)")
    try:
        row["rooted_count"] = counter.rooted_count(root, orders)
    except ArithmeticError:
        report.notes.append("rooted quotient is not an integer for this cell")
    exit_code = 0
    if args.oracle:
        stars_list = [(w, k) for w, k in zip(spec.star_words, orders) if k]
        other = count_with_adjoints(root, stars_list, force=args.force)
        row["oracle_count"] = other
        row["agree"] = other == doubled
        if other != doubled:
            exit_code = 1
    report.results.append(row)
    cols = ["root", "orders", "map_count", "per_pair_count", "rooted_count"]
    if args.oracle:
        cols += ["oracle_count", "agree"]
    return report, cols, exit_code


def cmd_series(args) -> tuple[Report, list[str], int]:
    pot, spec, couplings = _model(args)
    counter = MapCounter(spec)
    report = Report("series", model=args.potential)
    report.notes.append(
        "series convention: coefficient of each order multiplies "
        "(-t_j)^k_j, matching exp(-N tr V) weights")
    if args.free_energy:
        table = counter.free_energy_table(args.order)
        for kbar in sorted(table.entries):
            report.results.append({"orders": " ".join(map(str, kbar)),
                                   "count": table.entries[kbar]})
        report.summary["free_energy"] = table.eval(couplings)
        report.summary["entropy"] = table.entropy_eval(couplings)
        return report, ["orders", "count"], 0
    if not args.root:
        raise PotentialSyntaxError("series needs --root (or --free-energy)")
    bound = None
    if not args.no_bound:
        bound = (TruncationBound.tightened(spec) if args.tight
                 else TruncationBound.default(spec))
    for text in args.root:
        root = parse_word(text, spec.num_colors)
        sv = counter.series_eval(root, couplings, args.order, bound)
        report.results.append({
            "root": word_to_str(root),
            "order": sv.order,
            "value": sv.value,
            "tail_bound": sv.tail_bound,
            "certified": sv.certified,
        })
    if bound is not None and not all(
            4 * bound.order_base * abs(t) < 1 for t in couplings):
        report.notes.append(
            "couplings fall outside the certified radius; tail bounds "
            "are reported as missing")
    return report, ["root", "order", "value", "tail_bound", "certified"], 0


def _star_list(pairs: list[str]) -> list[tuple[Word, int]]:
    stars = []
    for pair in pairs:
        word_text, sep, count = pair.partition("=")
        stars.append((parse_word(word_text),
                      int(count) if sep else 1))
    return stars


def cmd_oracle(args) -> tuple[Report, list[str], int]:
    root = None if args.root is None else parse_word(args.root)
    stars = _star_list(args.star)
    exclusive = tuple(parse_word(w) for w in args.exclusive)
    report = Report("oracle")
    census = genus_census(root, stars, exclusive_words=exclusive,
                          force=args.force)
    for g in sorted(census.by_genus):
        report.results.append({"genus": g, "count": census.by_genus[g]})
    report.summary["planar"] = census.planar()
    report.summary["connected_total"] = census.total - census.disconnected
    report.summary["disconnected"] = census.disconnected
    if exclusive:
        report.notes.append(
            "gluings between two stars of an exclusive word are forbidden")
    return report, ["genus", "count"], 0


def cmd_genus(args) -> tuple[Report, list[str], int]:
    args.star = list(args.stars)
    args.exclusive = []
    report, cols, code = cmd_oracle(args)
    report.command = "genus"
    return report, cols, code


def cmd_mc(args) -> tuple[Report, list[str], int]:
    pot, spec, couplings = _model(args)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = MCConfig.from_text(fh.read())
    else:
        config = MCConfig()
    overrides = {}
    for name in ("n", "sweeps", "burn_in", "chains", "seed"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.cutoff is not None:
        overrides["cutoff"] = args.cutoff
    if overrides:
        config = dataclasses.replace(config, **overrides)
    words = [parse_word(w, spec.num_colors) for w in args.word]
    if not words:
        raise PotentialSyntaxError("mc needs at least one --word")
    result = sample(spec, couplings, words, config,
                    assert_convex=args.assert_convex, threads=args.threads)
    report = Report("mc", model=args.potential, seed=config.seed)
    for est in result.moments():
        report.results.append({
            "word": word_to_str(est.word),
            "mean": est.mean,
            "stderr": est.stderr,
            "n_samples": est.n_samples,
        })
    report.summary["acceptance_rate"] = float(
        sum(result.acceptance_rates) / len(result.acceptance_rates))
    report.summary["max_energy_drift"] = float(result.max_energy_drift)
    report.summary["cutoff_vetoes"] = result.veto_count
    report.notes.append(
        f"chains={config.chains} sweeps={config.sweeps} "
        f"burn_in={config.burn_in} N={config.n}")
    return report, ["word", "mean", "stderr", "n_samples"], 0


def cmd_onematrix(args) -> tuple[Report, list[str], int]:
    if not args.potential:
        raise PotentialSyntaxError("this command needs --potential")
    pot = parse_potential(args.potential)
    # the empty potential "0" infers zero colors; the solver wants one
    spec = pot.star_spec(num_colors=max(pot.num_colors, 1))
    couplings = pot.bind(_bindings(args.set))
    measure = solve_equilibrium(spec, couplings)
    report = Report("onematrix", model=args.potential)
    report.results.append({"quantity": "a", "value": measure.a})
    report.results.append({"quantity": "b", "value": measure.b})
    report.results.append({"quantity": "endpoint_residual",
                           "value": measure.endpoint_residual})
    report.results.append({"quantity": "mass", "value": measure.mass()})
    for k in range(1, args.moments + 1):
        report.results.append({"quantity": f"moment_{k}",
                               "value": measure.moment(k)})
    report.notes.append("support endpoints solve the two constraint "
                        "integrals of the equilibrium measure")
    return report, ["quantity", "value"], 0


def cmd_ising(args) -> tuple[Report, list[str], int]:
    report = Report("ising")
    if args.algebraic is not None:
        u0 = parse_rational(args.algebraic)
        p = ising_mod.map_equation_series(u0, args.order)
        series = ising_mod.rooted_quartic_series(u0, args.order)
        keys = sorted(set(p.coef) | set(series.coef))
        for (i, j) in keys:
            report.results.append({
                "x_power": i, "y_power": j,
                "equation_root": p.coefficient(i, j),
                "rooted_series": series.coefficient(i, j),
            })
        report.summary["constant_term"] = p.coefficient(0, 0)
        report.notes.append(
            "x powers count stars of the non-root color, y powers the "
            "root color; the spin weight tracks links")
        return report, ["x_power", "y_power", "equation_root",
                        "rooted_series"], 0
    ta = _rational_list(args.ta)
    tb = _rational_list(args.tb)
    link = parse_rational(args.link)
    root = parse_word(args.root, 2)
    sv = ising_mod.ising_series(root, ta, tb, link, args.order)
    report.model = (f"V_a couplings {args.ta}; V_b couplings {args.tb}; "
                    f"link {args.link}")
    for k in range(args.order + 1):
        report.results.append({"order": k, "coefficient": sv.by_order[k]})
    report.summary["value"] = sv.value
    exit_code = 0
    if args.check_dressed:
        def hybrid(ka, kb, links):
            if links == 0:
                return ising_mod.ising_map_count(root, ka, kb, 0)
            return ising_mod.ising_interaction_count(root, ka, kb, links)
        bare = ising_mod.ising_series_coefficients(
            root, len(ta), len(tb), args.order)
        dressed = ising_mod.dressed_series_coefficients(
            root, len(ta), len(tb), args.order, interaction=hybrid)
        agree = bare == dressed
        report.summary["dressed_matches"] = agree
        report.notes.append(
            "dressed check compares the chain-resummed expansion against "
            "the bare one, cell by cell, links counted by the oracle")
        if not agree:
            exit_code = 1
    return report, ["order", "coefficient"], exit_code


def cmd_verify(args) -> tuple[Report, list[str], int]:
    """A quick internal cross-check battery over all the exact routes."""
    rng = random.Random(args.seed)
    report = Report("verify", seed=args.seed)
    checks: list[tuple[str, bool, str]] = []

    quartic = parse_potential("t1*(x1^4)")
    counter = MapCounter(quartic.star_spec())
    m = counter.map_count((0, 0, 0, 0), (1,))
    checks.append(("quartic one-star counts", m == 72 and m // 2 == 36
                   and counter.rooted_count((0, 0, 0, 0), (1,)) == 18,
                   f"map 72/per-pair 36/rooted 18, got {m}"))

    cat_ok = all(counter.map_count((0,) * (2 * k), (0,)) == catalan(k)
                 for k in range(7))
    checks.append(("semicircle Catalan moments", cat_ok, "k <= 6"))

    census = genus_census(None, [((0, 0, 0, 0), 1)])
    checks.append(("one-star genus census",
                   census.by_genus == {0: 2, 1: 1},
                   f"got {dict(census.by_genus)}"))

    cell = counter.map_count((0, 0), (2,))
    via_oracle = count_with_adjoints((0, 0), [((0, 0, 0, 0), 2)])
    checks.append(("engine vs oracle, two quartic stars",
                   cell == via_oracle, f"{cell} vs {via_oracle}"))

    trace_ok = True
    mixed = parse_potential("t1*(x1^4) + t2*(x1*x2)")
    mixed_counter = MapCounter(mixed.star_spec())
    for _ in range(20):
        p = tuple(rng.randrange(2) for _ in range(rng.randrange(1, 4)))
        q = tuple(rng.randrange(2) for _ in range(rng.randrange(1, 4)))
        kbar = (rng.randrange(2), rng.randrange(2))
        if mixed_counter.map_count(p + q, kbar) != \
                mixed_counter.map_count(q + p, kbar):
            trace_ok = False
    checks.append(("traciality on random pairs", trace_ok, "20 seeded pairs"))

    measure = solve_equilibrium(StarSpec((), 1), ())
    checks.append(("quadratic equilibrium endpoints",
                   abs(measure.a + 2) < 1e-9 and abs(measure.b - 2) < 1e-9,
                   f"({measure.a:.12f}, {measure.b:.12f})"))

    bare = ising_mod.ising_series_coefficients((0, 0), 1, 1, 2)
    dressed = ising_mod.dressed_series_coefficients((0, 0), 1, 1, 2)
    checks.append(("chain-dressing identity, order 2", bare == dressed,
                   f"{len(set(bare) | set(dressed))} cells"))

    residual = ising_mod.verify_change_of_variables("1/100", "1/2")
    checks.append(("quartic change of variables", residual == 0,
                   f"residual {residual}"))

    checks.append(("rooted two-color fixture",
                   ising_mod.ising_rooted_count((0, 0), (0, 1), (0, 1), 2)
                   == 12, "J = 12"))

    exit_code = 0
    for name, ok, detail in checks:
        report.results.append({"check": name,
                               "status": "ok" if ok else "FAIL",
                               "detail": detail})
        if not ok:
            exit_code = 1
    report.summary["all_ok"] = exit_code == 0
    return report, ["check", "status", "detail"], exit_code


# -- argument wiring --------------------------------------------------------------


def _common_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--potential", help="interaction DSL, e.g. 't1*(x1^4)'")
    p.add_argument("--set", action="append", default=[], metavar="NAME=VALUE",
                   help="bind a named coupling (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapcount",
        description="Exact colored planar map counting, series, oracles, "
                    "and samplers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="exact map counts for one cell")
    _common_model_flags(p)
    p.add_argument("--root", required=True, help="root word, '1' for the unit")
    p.add_argument("--k", required=True,
                   help="interaction orders, e.g. '2' or '1,0,2'")
    p.add_argument("--oracle", action="store_true",
                   help="recount by brute-force gluing and compare")
    p.add_argument("--force", action="store_true",
                   help="let the oracle run past its size guard")
    _add_format_flags(p)
    p.set_defaults(fn=cmd_count)

    p = sub.add_parser("series", help="moment or free-energy series")
    _common_model_flags(p)
    p.add_argument("--root", action="append", default=[],
                   help="moment word (repeatable)")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--free-energy", action="store_true",
                   help="tabulate connected unrooted counts instead")
    p.add_argument("--tight", action="store_true",
                   help="use the grid-tightened growth bound")
    p.add_argument("--no-bound", action="store_true",
                   help="skip tail bounds entirely")
    _add_format_flags(p)
    p.set_defaults(fn=cmd_series)

    p = sub.add_parser("oracle", help="brute-force gluing census")
    p.add_argument("--root", help="optional root word")
    p.add_argument("--star", action="append", default=[], metavar="WORD=COUNT",
                   help="star multiset entry (repeatable; count defaults to 1)")
    p.add_argument("--exclusive", action="append", default=[], metavar="WORD",
                   help="forbid gluings between stars of this word")
    p.add_argument("--force", action="store_true")
    _add_format_flags(p)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("genus", help="genus census for a star list")
    p.add_argument("stars", nargs="+", metavar="WORD[=COUNT]")
    p.add_argument("--root")
    p.add_argument("--force", action="store_true")
    _add_format_flags(p)
    p.set_defaults(fn=cmd_genus)

    p = sub.add_parser("mc", help="Metropolis moment estimates")
    _common_model_flags(p)
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--word", action="append", default=[],
                   help="moment word to track (repeatable)")
    p.add_argument("--n", type=int, help="matrix size override")
    p.add_argument("--sweeps", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cutoff", type=float,
                   help="spectral cutoff L (enables the localized sampler)")
    p.add_argument("--assert-convex", action="store_true",
                   help="declare tr V convex and sample without a cutoff")
    p.add_argument("--threads", type=int,
                   help="worker processes (default: one per chain)")
    _add_format_flags(p, default="csv")
    p.set_defaults(fn=cmd_mc)

    p = sub.add_parser("onematrix", help="equilibrium measure solver")
    _common_model_flags(p)
    p.add_argument("--moments", type=int, default=4,
                   help="how many moments to tabulate")
    _add_format_flags(p)
    p.set_defaults(fn=cmd_onematrix)

    p = sub.add_parser("ising", help="two-color spin model series")
    p.add_argument("--root", default="x1^2")
    p.add_argument("--ta", default="0",
                   help="comma list of couplings for x^2, x^4, ... of color 1")
    p.add_argument("--tb", default="0", help="same for color 2")
    p.add_argument("--link", default="0", help="AB link coupling")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--check-dressed", action="store_true",
                   help="compare against the chain-resummed expansion "
                        "(oracle-backed; keep the order small)")
    p.add_argument("--algebraic", metavar="U",
                   help="print the quartic algebraic series at spin "
                        "weight U instead of a moment series")
    _add_format_flags(p)
    p.set_defaults(fn=cmd_ising)

    p = sub.add_parser("verify", help="internal cross-check battery")
    p.add_argument("--seed", type=int, default=20240817)
    _add_format_flags(p)
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        report, columns, exit_code = args.fn(args)
    except (PotentialSyntaxError, ValueError, OSError) as exc:
        # UnsupportedPotentialError and GluingSizeError land here too
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return 1
    if args.timing:
        report.wall_time_s = time.perf_counter() - started
    _emit(report, args.format, columns)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
