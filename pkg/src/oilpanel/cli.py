"""Command-line entry point.

Every subcommand reads the panel from a cache directory (or the bundled
fixture with ``--offline``) and writes CSV plus aligned text into ``--out``.
Exit codes: 0 success, 1 computation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import shutil
import sys
from pathlib import Path

from . import did as D
from . import event_study as E
from . import ingest
from . import synth as S
from . import tables as T
from . import unit_root as U
from .indicators import BY_LABEL, GDP_PPP_CODE, DID_OUTCOMES, EVENT_OUTCOMES, LIFE_EXPECTANCY, MORTALITY, SUMMARY_VARIABLES
from .panel import PanelError, builtin_studies, get_study, summary_stats
from .regress import RegressionError

log = logging.getLogger("oilpanel")

CONFIG_SECTION = "oilpanel"
COMPUTATION_ERRORS = (
    PanelError, RegressionError, S.SynthError, U.UnitRootError, ingest.IngestError,
)
SYNTH_OUTCOMES = ("le-total",)
PRE_MODE_STUDY = "equatorial-guinea"
ROBUSTNESS_EVENT_YEARS = {"yemen": 1988}


class UsageError(Exception):
    pass


class _Repeatable(argparse._AppendAction):
    """Append, but the first use on the command line discards any default."""

    def __call__(self, parser, namespace, values, option_string=None):
        seen = getattr(namespace, "_explicit", set())
        if self.dest not in seen:
            setattr(namespace, self.dest, None)
            namespace._explicit = seen | {self.dest}
        super().__call__(parser, namespace, values, option_string)


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data and output")
    g.add_argument("--config", help="INI file with an [oilpanel] section mirroring the flags")
    g.add_argument("--offline", action="store_true",
                   help="never touch the network; read --cache if given, else the bundled fixture")
    g.add_argument("--cache", help="cache directory (default: ./cache, or the fixture with --offline)")
    g.add_argument("--refresh", action="store_true", help="refetch indicators already cached")
    g.add_argument("--out", default="out", help="output directory (default: ./out)")
    g.add_argument("--cluster", action="store_true", help="country-clustered standard errors")
    g.add_argument("-v", "--verbose", action="store_true")


def _study_flags(p, outcome_default=None, outcomes=None):
    p.add_argument("--study", action=_Repeatable,
                   help="study id (repeatable; default: all eleven)")
    p.add_argument("--outcome", action=_Repeatable, choices=outcomes or sorted(BY_LABEL),
                   default=None, help=f"outcome label (repeatable; default: {outcome_default})")
    p.add_argument("--event-year", action=_Repeatable, default=None, metavar="[STUDY=]YEAR",
                   help="event-year override, e.g. yemen=1988 (a bare year applies to --study)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oilpanel",
        description="Panel estimators for resource-discovery health studies.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("fetch", help="download indicators into the cache")
    _common(p)
    p.add_argument("--gdp-code", default=None,
                   help=f"provider code for the GDP series (e.g. {GDP_PPP_CODE} for PPP)")

    p = sub.add_parser("summarize", help="treated/control summary statistics")
    _common(p)
    _study_flags(p, "the four summary variables")

    p = sub.add_parser("did", help="difference-in-differences cells")
    _common(p)
    _study_flags(p, "all seven", DID_OUTCOMES)
    p.add_argument("--end-year", type=int, help="end the sample in this year")

    p = sub.add_parser("event-study", help="binned event-study coefficients")
    _common(p)
    _study_flags(p, "le-total")
    p.add_argument("--pre-mode", choices=E.PRE_MODES, default="pool",
                   help="relative years before the earliest bin: pool into the reference, drop, or bin")
    p.add_argument("--width", type=int, default=3, help="bin width in years")

    p = sub.add_parser("synth", help="synthetic-control gap curves")
    _common(p)
    _study_flags(p, "le-total")
    p.add_argument("--svg", action="store_true", help="also render SVG plots")
    p.add_argument("--starts", type=int, default=S.N_STARTS, help="V-search starting points")

    p = sub.add_parser("unit-root", help="LLC test on DiD residual panels")
    _common(p)
    _study_flags(p, "the three event outcomes")
    p.add_argument("--lags", type=int, help="ADF lag order for every panel")
    p.add_argument("--bandwidth", type=int, help="Bartlett bandwidth for every panel")
    p.add_argument("--model", choices=U.MODELS, default="none",
                   help="deterministic terms (default none)")

    p = sub.add_parser("reproduce-all", help="every table and curve")
    _common(p)
    p.add_argument("--svg", action="store_true", help="also render SVG plots")
    return parser


# -- configuration ---------------------------------------------------------

def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def apply_config(parser, sub, path: str) -> None:
    """Use INI values as defaults so explicit flags still win."""
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise UsageError(f"cannot read config file {path}")
    if not cp.has_section(CONFIG_SECTION):
        raise UsageError(f"config file {path} has no [{CONFIG_SECTION}] section")
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in cp.items(CONFIG_SECTION):
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None or dest in ("help", "config"):
            raise UsageError(f"config key {key!r} is not a flag of this command")
        if isinstance(action, argparse._StoreTrueAction):
            value = cp.getboolean(CONFIG_SECTION, key)
        elif isinstance(action, argparse._AppendAction):
            value = [v.strip() for v in raw.replace(",", " ").split()]
        else:
            value = action.type(raw) if action.type else raw
        if action.choices is not None:
            items = value if isinstance(value, list) else [value]
            bad = [v for v in items if v not in action.choices]
            if bad:
                raise UsageError(f"config key {key!r}: invalid choice {bad[0]!r}")
        defaults[dest] = value
    sub.set_defaults(**defaults)


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = _subparser(parser, args.command)
        try:
            apply_config(parser, sub, args.config)
        except UsageError as exc:
            sub.error(str(exc))
        args = parser.parse_args(argv)
    return parser, args


def resolve_studies(args):
    """Study configs after filters and event-year overrides."""
    ids = getattr(args, "study", None)
    try:
        studies = [get_study(s) for s in ids] if ids else builtin_studies()
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    overrides = {}
    for item in getattr(args, "event_year", None) or []:
        if "=" in item:
            sid, year = item.split("=", 1)
        elif ids and len(ids) == 1:
            sid, year = ids[0], item
        else:
            raise UsageError("a bare --event-year needs exactly one --study")
        try:
            overrides[get_study(sid).study_id] = int(year)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        except ValueError:
            raise UsageError(f"event year {year!r} is not an integer") from None
    known = {s.study_id for s in studies}
    stray = sorted(set(overrides) - known)
    if stray:
        raise UsageError(f"event-year override for studies not selected: {stray}")
    try:
        return [s.replace(event_year=overrides[s.study_id]) if s.study_id in overrides else s
                for s in studies]
    except PanelError as exc:
        raise UsageError(str(exc)) from None


# -- data ------------------------------------------------------------------

def load_dataset(args):
    if args.offline:
        return ingest.build_dataset(args.cache) if args.cache else ingest.build_dataset()
    cache = args.cache or "cache"
    notes = ingest.fetch_all(cache, refresh=args.refresh)
    for n in notes:
        log.warning(n)
    return ingest.build_dataset(cache)


def _emit(table: T.Table, out: Path, name: str, echo: bool = False) -> None:
    table.write(out / name)
    if echo:
        sys.stdout.write(table.to_text())


# -- commands --------------------------------------------------------------

def cmd_fetch(args) -> int:
    cache = Path(args.cache or "cache")
    if args.offline:
        cache.mkdir(parents=True, exist_ok=True)
        for src in sorted(ingest.fixture_dir().iterdir()):
            if src.suffix in (".csv", ".json"):
                shutil.copyfile(src, cache / src.name)
        print(f"copied fixture snapshot into {cache}")
        return 0
    for n in ingest.fetch_all(cache, refresh=args.refresh, gdp_code=args.gdp_code):
        log.warning(n)
    bad = ingest.Cache(cache).verify()
    if bad:
        log.error("cache files do not match manifest: %s", ", ".join(bad))
        return 1
    print(f"cache {cache} is complete")
    return 0


def summarize(dataset, studies, variables=SUMMARY_VARIABLES) -> T.Table:
    return T.summary_table((summary_stats(dataset, s, variables) for s in studies),
                           title="Summary statistics, treated vs controls")


def cmd_summarize(args) -> int:
    studies = resolve_studies(args)
    ds = load_dataset(args)
    _emit(summarize(ds, studies, args.outcome or SUMMARY_VARIABLES), Path(args.out), "table3.csv", True)
    return 0


def cmd_did(args) -> int:
    studies = resolve_studies(args)
    outcomes = args.outcome or DID_OUTCOMES
    ds = load_dataset(args)
    cells = []
    if args.end_year is not None:
        for s in studies:
            for o in outcomes:
                try:
                    res = D.did_estimate(ds, D.DidSpec(s, o, args.end_year), cluster=args.cluster)
                    cells.append(D.DidCell(s.study_id, f"end-{args.end_year}", o, res))
                except (PanelError, RegressionError) as exc:
                    cells.append(D.DidCell(s.study_id, f"end-{args.end_year}", o, None, str(exc)))
    else:
        cells = D.did_table(ds, studies, outcomes, cluster=args.cluster)
    _emit(T.did_long_table(cells, title="Difference-in-differences"), Path(args.out), "did.csv", True)
    return 0


def event_results(ds, studies, outcome, **kw):
    out = []
    for s in studies:
        try:
            out.append((s.study_id, E.event_study_estimate(ds, s, outcome, **kw), ""))
        except (PanelError, RegressionError) as exc:
            out.append((s.study_id, None, str(exc)))
    return out


def cmd_event_study(args) -> int:
    studies = resolve_studies(args)
    ds = load_dataset(args)
    out = Path(args.out)
    for outcome in args.outcome or ["le-total"]:
        res = event_results(ds, studies, outcome, width=args.width, pre_mode=args.pre_mode,
                            cluster=args.cluster)
        _emit(T.event_long_table(res, title=f"Event study: {outcome}"), out,
              f"event_study_{outcome}.csv", True)
    return 0


def run_synth(ds, study, outcome, out: Path, svg: bool, n_starts=S.N_STARTS) -> S.SynthResult:
    res = S.synth_study(ds, study, outcome, n_starts=n_starts)
    d = out / "synth"
    d.mkdir(parents=True, exist_ok=True)
    stem = f"{study.study_id}_{outcome}"
    (d / f"{stem}.csv").write_text(res.curve_csv(), encoding="utf-8", newline="")
    (d / f"{stem}_weights.csv").write_text(res.weights_csv(), encoding="utf-8", newline="")
    if svg:
        from .plotting import plot_synth

        plot_synth(res, d / f"{stem}.svg")
    for n in res.notes:
        log.info("%s: %s", stem, n)
    return res


def cmd_synth(args) -> int:
    studies = resolve_studies(args)
    ds = load_dataset(args)
    failed = 0
    for s in studies:
        for outcome in args.outcome or SYNTH_OUTCOMES:
            try:
                res = run_synth(ds, s, outcome, Path(args.out), args.svg, args.starts)
            except (PanelError, S.SynthError) as exc:
                log.error("%s/%s: %s", s.study_id, outcome, exc)
                failed += 1
                continue
            flag = "  poor overlap" if res.poor_overlap else ""
            print(f"{s.study_id:18s} {outcome:16s} pre-RMSPE {T.fmt(res.pre_rmspe)}{flag}")
    return 1 if failed else 0


def llc_results(ds, studies, outcomes, *, lags=None, bandwidth=None, model="none", fits=None):
    """(study, outcome, result, reason) rows; ``fits`` reuses DiD results."""
    rows = []
    for s in studies:
        for o in outcomes:
            try:
                fit = fits[(s.study_id, o)] if fits and (s.study_id, o) in fits else \
                    D.did_estimate(ds, D.DidSpec(s, o)).fit
                res = U.llc_test(U.residual_panel(fit), lags, bandwidth, model)
                rows.append((s.study_id, o, res, ""))
            except (PanelError, RegressionError, U.UnitRootError) as exc:
                rows.append((s.study_id, o, None, str(exc)))
    return rows


def cmd_unit_root(args) -> int:
    studies = resolve_studies(args)
    ds = load_dataset(args)
    rows = llc_results(ds, studies, args.outcome or EVENT_OUTCOMES,
                       lags=args.lags, bandwidth=args.bandwidth, model=args.model)
    table = T.llc_table(rows, title="Levin-Lin-Chu test on DiD residuals")
    table.notes.append(U.CAVEAT)
    _emit(table, Path(args.out), "unit_root.csv", True)
    return 0


def reproduce_all(ds, out: Path, svg: bool = False, cluster: bool = False) -> list[str]:
    """Write every table and curve; returns notes worth showing the user."""
    out.mkdir(parents=True, exist_ok=True)
    studies = builtin_studies()
    notes: list[str] = []

    summarize(ds, studies).write(out / "table3.csv")

    cells = D.did_table(ds, studies, DID_OUTCOMES, cluster=cluster)
    for name, group, title in (("table4.csv", LIFE_EXPECTANCY, "DiD: life expectancy"),
                               ("table5.csv", MORTALITY, "DiD: mortality")):
        sel = [c for c in cells if c.outcome in group]
        T.did_long_table(sel, title=title).write(
            out / name, layout=T.did_wide_table(sel, group, title=title))
    for c in cells:
        if c.result is not None and c.result.sample.coverage_note:
            notes.append(c.result.sample.coverage_note)

    for name, outcome in zip(("table6.csv", "table7.csv", "table8.csv"), EVENT_OUTCOMES):
        res = event_results(ds, studies, outcome, cluster=cluster)
        title = f"Event study: {outcome}"
        T.event_long_table(res, title=title).write(out / name, layout=T.event_wide_table(res, title))

    fits = {(c.study_id, c.outcome): c.result.fit
            for c in cells if c.variant == "main" and c.result is not None}
    t9 = T.llc_table(llc_results(ds, studies, EVENT_OUTCOMES, fits=fits),
                     title="Levin-Lin-Chu test on DiD residuals")
    t9.notes.append(U.CAVEAT)
    t9.write(out / "table9.csv")

    for s in studies:
        for outcome in SYNTH_OUTCOMES:
            try:
                res = run_synth(ds, s, outcome, out, svg)
            except (PanelError, S.SynthError) as exc:
                notes.append(f"synth {s.study_id}/{outcome}: {exc}")
                raise
            notes.extend(f"synth {s.study_id}/{outcome}: {n}" for n in res.notes)

    # diagnostics: pooled versus dropped far-pre years, and the 1988 Yemen run
    pm = get_study(PRE_MODE_STUDY)
    rows = []
    for mode in ("pool", "drop"):
        (sid, res, why), = event_results(ds, [pm], "le-total", pre_mode=mode, cluster=cluster)
        rows.append((f"{sid}:{mode}", res, why))
    T.event_long_table(rows, title="Far pre-event years: pooled vs dropped").write(
        out / "robustness" / "event_pre_modes.csv")
    rb = [get_study(k, v) for k, v in ROBUSTNESS_EVENT_YEARS.items()]
    for outcome in EVENT_OUTCOMES:
        T.event_long_table(event_results(ds, rb, outcome, cluster=cluster),
                           title=f"Event study, alternative event year: {outcome}").write(
            out / "robustness" / f"event_alt_year_{outcome}.csv")
    T.did_long_table(D.did_table(ds, rb, DID_OUTCOMES, cluster=cluster),
                     title="DiD, alternative event year").write(out / "robustness" / "did_alt_year.csv")

    notes.append(U.CAVEAT)
    (out / "notes.txt").write_text("\n".join(notes) + "\n", encoding="utf-8", newline="")
    return notes


def cmd_reproduce_all(args) -> int:
    ds = load_dataset(args)
    notes = reproduce_all(ds, Path(args.out), svg=args.svg, cluster=args.cluster)
    for n in notes:
        log.info(n)
    print(f"wrote tables 3-9 and synth curves to {args.out}")
    return 0


COMMANDS = {
    "fetch": cmd_fetch,
    "summarize": cmd_summarize,
    "did": cmd_did,
    "event-study": cmd_event_study,
    "synth": cmd_synth,
    "unit-root": cmd_unit_root,
    "reproduce-all": cmd_reproduce_all,
}


def run(argv=None) -> int:
    try:
        parser, args = parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"oilpanel {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ingest.OfflineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except COMPUTATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
