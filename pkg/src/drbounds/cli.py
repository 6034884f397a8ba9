"""Command-line front end.

    drbounds verify      --config cfg.toml   run every invariant check (exit 3 on failure)
    drbounds rates       --config cfg.toml   quantile-risk sweep -> rates.csv, rates_fit.csv, rates.svg
    drbounds distinguish --config cfg.toml   likelihood-ratio test error -> distinguish.csv
    drbounds adversary   --config cfg.toml   family diagnostics -> adversary.txt
    drbounds report      --config cfg.toml   merge the CSVs of an output directory -> summary.csv

Every output starts with ``# config=<sha256> seed=<seed>``; timestamps go to a
``<file>.meta.json`` sidecar so that CSV bodies are reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .adversary import build_partition
from .analysis import bias_scenario, distinguishability_experiment, rate_scenario, rate_sweep
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DRBoundsError
from .model import NuisancePair
from .nuisance_oracle import ErrorBudget
from .suite import build_family, check_family, check_bump_identities, sample_lambdas
from .svg import loglog_svg

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2, 3

RATES_HEADER = ["n", "gamma", "quantile_risk", "reps", "estimator", "case"]
FIT_HEADER = ["gamma", "fitted_slope", "slope_stderr", "intercept", "estimator", "case"]
DIST_HEADER = ["n", "M", "trials", "empirical_test_error", "fano_floor", "delta", "case"]
VERIFY_HEADER = ["suite", "case", "value", "bound", "passed", "detail"]


class InvariantFailure(Exception):
    pass


class Outputs:
    """Writes artifacts and removes them all if the command fails."""

    def __init__(self, root: Path, cfg: ExperimentConfig, command: str):
        self.root, self.cfg, self.command = root, cfg, command
        self.written: list[Path] = []
        self.header = f"# config={cfg.sha256 or 'none'} seed={cfg.seed}"

    def _write(self, name: str, text: str):
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / name
        self.written.append(path)
        path.write_text(text, encoding="utf-8")
        meta = self.root / f"{name}.meta.json"
        self.written.append(meta)
        meta.write_text(json.dumps({
            "file": name, "command": self.command, "config_sha256": self.cfg.sha256,
            "seed": self.cfg.seed, "version": __version__,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }, indent=2) + "\n", encoding="utf-8")
        return path

    def csv(self, name: str, header: list[str], rows) -> Path:
        buf = io.StringIO()
        buf.write(self.header + "\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) for v in row])
        return self._write(name, buf.getvalue())

    def text(self, name: str, body: str) -> Path:
        return self._write(name, body)

    def cleanup(self):
        for p in self.written:
            p.unlink(missing_ok=True)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_csv(path: Path) -> list[dict]:
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _center(cfg: ExperimentConfig) -> tuple[NuisancePair, object]:
    return cfg.scenario.center(), cfg.scenario.weight()


def _case_budget(cfg: ExperimentConfig, case: str, n: int | None = None) -> ErrorBudget:
    return cfg.construction.case_budgets.get(case, cfg.budgets).at(n)


def cmd_verify(cfg: ExperimentConfig, out: Outputs, threads: int) -> int:
    center, w = _center(cfg)
    levels = cfg.construction.levels
    M = 2**levels
    lams = sample_lambdas(M, cfg.construction.lambdas, cfg.seed)
    part = build_partition(w, levels)
    results = check_bump_identities(center, w, part, lams, 10_000, cfg.seed)
    for case in cfg.construction.cases:
        budget = _case_budget(cfg, case)
        fam = build_family(center, w, case, budget, levels, cfg.construction.strict,
                           partition=None if case == "ATT" else part)
        results.extend(check_family(fam, budget, lams))
    out.csv("verify.csv", VERIFY_HEADER,
            [(r.suite, r.case, r.value, r.bound, r.passed, r.detail) for r in results])
    failed = [r for r in results if not r.passed]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.suite:<24} {r.case:<8} value={r.value:.3e} bound={r.bound:.3e}")
    if failed:
        raise InvariantFailure(f"{len(failed)} invariant check(s) failed")
    return EXIT_OK


def cmd_rates(cfg: ExperimentConfig, out: Outputs, threads: int) -> int:
    rc = cfg.rates
    kind = "ATT" if rc.estimator.endswith("att") else "WATE"
    if rc.scenario == "bias":
        def scenario(n):
            return bias_scenario(rc.bias, kind, c=cfg.scenario.c)
    else:
        def scenario(n):
            return rate_scenario(n, kind, center=rc.center, c=cfg.scenario.c, budget=cfg.budgets.at(n))
    report = rate_sweep(scenario, rc.n, rc.estimator, rc.gamma, rc.reps, cfg.seed, threads)
    out.csv("rates.csv", RATES_HEADER,
            [(r.n, r.gamma, r.quantile_risk, r.reps, report.estimator, rc.scenario) for r in report.rows])
    out.csv("rates_fit.csv", FIT_HEADER,
            [(g, f.slope, f.stderr, f.intercept, report.estimator, rc.scenario) for g, f in report.fits.items()])
    series = []
    for g, f in report.fits.items():
        rows = [r for r in report.rows if r.gamma == g]
        series.append((f"gamma={g} slope={f.slope:.3f}", [r.n for r in rows],
                       [r.quantile_risk for r in rows], (f.slope, f.intercept)))
    out.text("rates.svg", loglog_svg(series, title=f"{report.estimator} quantile risk",
                                     comment=out.header.lstrip("# ")))
    for g, f in report.fits.items():
        print(f"gamma={g}: slope {f.slope:.4f} +/- {f.stderr:.4f}")
    return EXIT_OK


def cmd_distinguish(cfg: ExperimentConfig, out: Outputs, threads: int) -> int:
    dc = cfg.distinguish
    center, w = _center(cfg)
    budget = _case_budget(cfg, dc.case, dc.n)
    rows = []
    for levels in dc.levels:
        fam = build_family(center, w, dc.case, budget, levels)
        rep = distinguishability_experiment(fam, dc.n, dc.trials, cfg.seed, dc.delta, threads)
        rows.append((rep.n, rep.M, rep.trials, rep.empirical_test_error, rep.fano_floor, rep.delta, dc.case))
        print(f"M={rep.M}: test error {rep.empirical_test_error:.4f} (floor {rep.fano_floor:.4f})")
    out.csv("distinguish.csv", DIST_HEADER, rows)
    return EXIT_OK


def cmd_adversary(cfg: ExperimentConfig, out: Outputs, threads: int) -> int:
    center, w = _center(cfg)
    levels = cfg.construction.levels
    lams = sample_lambdas(2**levels, cfg.construction.lambdas, cfg.seed)
    lines = [out.header, f"levels = {levels}", f"M = {2**levels}", f"lambdas = {len(lams)}"]
    part = build_partition(w, levels)
    for case in cfg.construction.cases:
        budget = _case_budget(cfg, case)
        fam = build_family(center, w, case, budget, levels, cfg.construction.strict,
                           partition=None if case == "ATT" else part)
        p = fam.params
        lines += ["", f"[{case}]", f"budget = e:{budget.e!r} e_prime:{budget.e_prime!r} f:{budget.f!r}",
                  f"alpha = {p.alpha!r}", f"beta = {p.beta!r}"]
        for name, (lhs, rhs, ok) in p.conditions.items():
            lines.append(f"condition = {name} | lhs={lhs!r} rhs={rhs!r} holds={str(ok).lower()}")
        if fam.aux is not None:
            a = fam.aux
            lines += [f"C_u = {a.C_u!r}", f"c_u = {a.c_u!r}", f"delta0 = {a.delta0!r}",
                      f"theta_ml = {a.theta_ml!r}"]
        for r in check_family(fam, budget, lams):
            lines.append(f"{r.suite} = {r.value!r} | bound={r.bound!r} passed={str(r.passed).lower()}")
    out.text("adversary.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_report(cfg: ExperimentConfig, out: Outputs, threads: int) -> int:
    names = cfg.report_inputs or ("verify.csv", "rates_fit.csv", "rates.csv", "distinguish.csv")
    rows = []
    for name in names:
        path = out.root / name
        if not path.exists():
            continue
        for i, rec in enumerate(read_csv(path)):
            for key, val in rec.items():
                rows.append((name, i, key, val))
    if not rows:
        raise ConfigError("report.inputs", f"no input CSVs found in {out.root}")
    out.csv("summary.csv", ["source", "row", "field", "value"], rows)
    print(f"merged {len({r[0] for r in rows})} file(s) into {out.root / 'summary.csv'}")
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "rates": cmd_rates,
    "distinguish": cmd_distinguish,
    "adversary": cmd_adversary,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="drbounds", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="TOML experiment config")
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument("--seed", type=int, help="u64 seed (overrides config)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for replications")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed", "must be a u64")
            cfg = replace(cfg, seed=args.seed)
        if args.threads < 1:
            raise ConfigError("threads", "must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Outputs(Path(args.out or cfg.out), cfg, args.command)
    try:
        return COMMANDS[args.command](cfg, out, args.threads)
    except ConfigError as exc:
        out.cleanup()
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantFailure as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except DRBoundsError as exc:
        out.cleanup()
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except BaseException:
        out.cleanup()
        raise


if __name__ == "__main__":
    sys.exit(main())
