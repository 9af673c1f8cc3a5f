"""Command line interface: ``uqt <command> [options]``.

Exit status: 0 success, 1 identity audit above tolerance, 2 invalid input,
3 measure undefined for the chosen rule, 4 degenerate labels. Errors are
printed to stderr as one line ``uqt: <CODE>: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from uqt import beta_bernoulli as bb
from uqt.errors import (
    DegenerateLabelsError,
    InvariantViolation,
    UndefinedMeasureError,
    UQTError,
    ValidationError,
)
from uqt.estimators import MeasureSpec, identity_audit
from uqt.harness import REPORT_FIELDS, misclassification_detect, ood_detect, score_samples
from uqt.io import read_ensemble, read_ensemble_csv, read_labels, write_ensemble
from uqt.scoring import DEFAULT_RULES, ScoringRule
from uqt.simplex import PredictionKind

EXIT_OK = 0
EXIT_AUDIT_FAILED = 1
EXIT_VALIDATION = 2
EXIT_UNDEFINED = 3
EXIT_DEGENERATE = 4

RULE_CHOICES = [r.value for r in ScoringRule]
AUDIT_CHUNK = 256


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"uqt: {ValidationError.code}: {message}\n")
        raise SystemExit(EXIT_VALIDATION)


def _fmt(x) -> str:
    return repr(float(x))


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows, fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _specs(names, rule) -> list[MeasureSpec]:
    return [MeasureSpec.parse(n, rule) for n in names]


def cmd_measures(args) -> int:
    e = read_ensemble(args.input, args.temperature)
    spec = MeasureSpec.parse(args.measure, ScoringRule.parse(args.rule))
    result = score_samples(e, spec)
    rows = [{"sample_index": i, "score": _fmt(s)} for i, s in enumerate(result.scores)]
    _emit(_csv(rows, ("sample_index", "score")), args.output)
    return EXIT_OK


def cmd_identities(args) -> int:
    e = read_ensemble(args.input, args.temperature)
    rules = [ScoringRule.parse(args.rule)] if args.rule else list(DEFAULT_RULES)
    stacks = e.by_sample()
    out = []
    ok = True
    for rule in rules:
        report = None
        for lo in range(0, e.N, AUDIT_CHUNK):
            part = identity_audit(rule, stacks[lo:lo + AUDIT_CHUNK])
            report = part if report is None else report.merge(part)
        for name in sorted(report.residuals):
            res = report.residuals[name]
            good = not (res > args.tolerance)
            ok &= good
            out.append(f"{rule.value:<10} {name:<24} {res:>12.3e} {report.indeterminate[name]:>8d}  "
                       f"{'ok' if good else 'FAIL'}")
        for name in report.skipped:
            out.append(f"{rule.value:<10} {name:<24} {'-':>12} {'-':>8}  skipped (central prediction Not defined)")
    header = f"{'rule':<10} {'identity':<24} {'max_resid':>12} {'indet':>8}  status"
    _emit("\n".join([header, *out]) + "\n", args.output)
    return EXIT_OK if ok else EXIT_AUDIT_FAILED


def _group_rows(reports_by_spec) -> tuple[list, tuple]:
    rows = []
    multi = any(len(r) > 1 for r in reports_by_spec.values())
    fields = REPORT_FIELDS + (("auroc_std",) if multi else ())
    for spec, reports in reports_by_spec.items():
        row = reports[0].row()
        if multi:
            values = np.array([r.auroc for r in reports])
            row["auroc"] = _fmt(values.mean())
            row["auroc_std"] = _fmt(values.std(ddof=1)) if len(values) > 1 else ""
            row["n_pos"] = sum(r.n_pos for r in reports)
            row["n_neg"] = sum(r.n_neg for r in reports)
            row["indeterminate"] = sum(r.indeterminate for r in reports)
        rows.append(row)
    return rows, fields


def cmd_auroc(args) -> int:
    if len(args.in_dist) != len(args.out_dist):
        raise ValidationError("give the same number of --in-dist and --out-dist files (one pair per ensemble group)")
    pairs = [(read_ensemble(a, args.temperature), read_ensemble(b, args.temperature))
             for a, b in zip(args.in_dist, args.out_dist)]
    specs = _specs(args.measure, ScoringRule.parse(args.rule))
    reports = {s: [ood_detect(i, o, s) for i, o in pairs] for s in specs}
    rows, fields = _group_rows(reports)
    _emit(_csv(rows, fields), args.output)
    return EXIT_OK


def cmd_misclassification(args) -> int:
    if len(args.input) != len(args.labels):
        raise ValidationError("give one --labels file per --input file")
    groups = [(read_ensemble(p, args.temperature), read_labels(l)) for p, l in zip(args.input, args.labels)]
    specs = _specs(args.measure, ScoringRule.parse(args.rule))
    reports = {s: [misclassification_detect(e, y, s) for e, y in groups] for s in specs}
    rows, fields = _group_rows(reports)
    _emit(_csv(rows, fields), args.output)
    return EXIT_OK


ORACLE_FIELDS = ("alpha_prior", "beta_prior", "n", "successes", "alpha", "beta", "measure",
                 "closed_form", "mc_estimate", "mc_std_error", "within_3se")


def cmd_oracle(args) -> int:
    ns = args.n
    if args.successes is not None:
        if len(args.successes) != len(ns):
            raise ValidationError("--successes needs one value per --n value")
        plan = list(zip(ns, args.successes))
    else:
        plan = [(n, int(round(args.success_rate * n))) for n in ns]
    prior = bb.BetaPosterior(args.alpha_prior, args.beta_prior)
    rows = []
    for n, x in plan:
        post = bb.posterior_update(prior, x, n)
        mc = {}
        if args.mc_draws:
            report = bb.mc_validate(post, args.mc_draws, args.seed)
            mc = {r.measure: r for r in report.rows}
        for name, fn in bb.CLOSED_FORMS.items():
            r = mc.get(name)
            rows.append({
                "alpha_prior": _fmt(prior.alpha), "beta_prior": _fmt(prior.beta), "n": n, "successes": x,
                "alpha": _fmt(post.alpha), "beta": _fmt(post.beta), "measure": name,
                "closed_form": _fmt(fn(post)),
                "mc_estimate": _fmt(r.estimate) if r else "",
                "mc_std_error": _fmt(r.std_error) if r else "",
                "within_3se": ("yes" if r.within(3.0) else "no") if r else "",
            })
    _emit(_csv(rows, ORACLE_FIELDS), args.output)
    return EXIT_OK


def cmd_convert(args) -> int:
    kind = PredictionKind.LOGITS if args.kind == "logits" else PredictionKind.PROBABILITIES
    e = read_ensemble_csv(args.input, kind, args.temperature if args.temperature is not None else 1.0)
    write_ensemble(args.output, e)
    return EXIT_OK


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uqt", description="Risk-based predictive uncertainty measures for ensembles.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, rule_required=True):
        sp.add_argument("--rule", choices=RULE_CHOICES, required=rule_required, default=None)
        sp.add_argument("--temperature", type=_positive_float, default=None,
                        help="override the temperature stored in the file")
        sp.add_argument("--output", default=None, help="write here instead of stdout")

    sp = sub.add_parser("measures", help="per-sample uncertainty scores as CSV")
    sp.add_argument("--input", required=True)
    sp.add_argument("--measure", required=True,
                    help="bayes1..3, exc11..exc33, tot11..tot33, energy-of-mean, mean-energy, energy-diff")
    common(sp)
    sp.set_defaults(func=cmd_measures)

    sp = sub.add_parser("identities", help="audit the exact relations between estimates")
    sp.add_argument("--input", required=True)
    sp.add_argument("--tolerance", type=_positive_float, default=1e-9)
    common(sp, rule_required=False)
    sp.set_defaults(func=cmd_identities)

    sp = sub.add_parser("auroc", help="out-of-distribution detection AUROC")
    sp.add_argument("--in-dist", nargs="+", required=True)
    sp.add_argument("--out-dist", nargs="+", required=True)
    sp.add_argument("--measure", nargs="+", required=True)
    common(sp)
    sp.set_defaults(func=cmd_auroc)

    sp = sub.add_parser("misclassification", help="misclassification detection AUROC")
    sp.add_argument("--input", nargs="+", required=True)
    sp.add_argument("--labels", nargs="+", required=True, help="CSV with header sample_index,label")
    sp.add_argument("--measure", nargs="+", required=True)
    common(sp)
    sp.set_defaults(func=cmd_misclassification)

    sp = sub.add_parser("oracle", help="Beta-Bernoulli closed forms with optional Monte Carlo check")
    sp.add_argument("--alpha-prior", type=_positive_float, required=True)
    sp.add_argument("--beta-prior", type=_positive_float, required=True)
    sp.add_argument("--n", type=_nonneg_int, nargs="+", required=True)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--successes", type=_nonneg_int, nargs="+")
    group.add_argument("--success-rate", type=float)
    sp.add_argument("--mc-draws", type=_nonneg_int, default=0)
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("--output", default=None)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("convert", help="convert a member,sample,class,value CSV to the binary format")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--kind", choices=("probabilities", "logits"), default="probabilities")
    sp.add_argument("--temperature", type=_positive_float, default=None)
    sp.set_defaults(func=cmd_convert)
    return p


EXIT_CODES = (
    (DegenerateLabelsError, EXIT_DEGENERATE),
    (UndefinedMeasureError, EXIT_UNDEFINED),
    (ValidationError, EXIT_VALIDATION),
    (InvariantViolation, EXIT_VALIDATION),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UQTError as exc:
        status = next((code for kind, code in EXIT_CODES if isinstance(exc, kind)), EXIT_VALIDATION)
        message = " ".join(str(exc).split())
        sys.stderr.write(f"uqt: {exc.code}: {message}\n")
        return status


if __name__ == "__main__":
    raise SystemExit(main())
