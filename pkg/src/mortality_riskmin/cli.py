"""Command line entry point: validate, hedge, securitize, represent,
oracle-check and explicit.

Exit codes: 0 success, 1 validation/check failure, 2 input error,
3 internal invariant breach.
"""
from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from .enlargement import bundle_problems, validate_model
from .hedging import (
    ModelAssumptionError,
    hedge_G,
    hedge_G_direct,
    phi_m,
    special_case_formulas,
)
from .oracle import OracleSizeError, brute_force_hedge, random_benefits, random_scenario
from .representation import optional_representation
from .scenario import ScenarioError
from .scenario_io import (
    ScenarioFileError,
    dump_yaml,
    explicit_document,
    load_scenario_file,
    process_rows,
    rows_to_csv,
    rows_to_json,
)
from .securitization import hedge_with_securities
from .space import InvariantError, PREDICTABLE

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2, 3
HEDGE_DEFAULT = ("xi", "L", "V", "C", "R")
BUNDLE_PROCESSES = ("G", "Gtilde", "m", "NG", "DoF")
ORACLE_FAMILIES = ("pseudo-stopping", "independent", "f-stopping", "hazard-modulated")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mortality-riskmin",
                                description="Exact risk-minimizing hedging of mortality-linked claims.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_required=True):
        if scenario_required:
            sp.add_argument("scenario", help="scenario YAML file")
        else:
            sp.add_argument("scenario", nargs="?", help="scenario YAML file")
        sp.add_argument("--mode", choices=("rational", "float"), help="override the numeric mode")
        sp.add_argument("--seed", type=int, help="seed for random market families")
        sp.add_argument("--out", help="output path (default: file setting or stdout)")
        sp.add_argument("--format", choices=("csv", "json"), help="override the output format")
        sp.add_argument("--emit", help="comma-separated process list")

    common(sub.add_parser("validate", help="check the structure conditions on (S, tau)"))
    common(sub.add_parser("hedge", help="risk-minimizing hedge under G"))
    sp = sub.add_parser("securitize", help="hedges with mortality-linked securities")
    common(sp)
    sp.add_argument("--instruments", help="comma list from {endowment, bond}; default: all models")
    sp.add_argument("--degenerate", choices=("min_norm", "zero"), default="min_norm")
    common(sub.add_parser("represent", help="three-part martingale representation of the claim"))
    sp = sub.add_parser("oracle-check", help="compare formulas with the least-squares oracle")
    common(sp, scenario_required=False)
    sp.add_argument("--random", type=int, metavar="N", help="check N seeded random scenarios per family")
    common(sub.add_parser("explicit", help="emit the explicit-tree form of a scenario"))
    return p


def _load(args):
    spec = load_scenario_file(args.scenario, args.mode)
    if args.seed is not None and spec.document.get("market", {}).get("family") == "random":
        doc = dict(spec.document)
        doc["market"] = {**doc["market"], "seed": args.seed}
        from .scenario_io import parse_scenario

        spec = parse_scenario(doc, args.mode)
    return spec


def _split(raw) -> list:
    if isinstance(raw, str):
        return [s.strip() for s in raw.split(",") if s.strip()]
    return [str(s) for s in raw]


def _emit_list(args, spec, default, known=None):
    """--emit wins; a file-level list is filtered to names this command knows,
    a file-level mapping is keyed by command."""
    if args.emit:
        return _split(args.emit)
    raw = spec.output.get("emit")
    if isinstance(raw, dict):
        raw = raw.get(args.command)
    if raw is None:
        return list(default)
    names = _split(raw)
    if known is not None:
        names = [n for n in names if n in known or n in BUNDLE_PROCESSES]
    return names or list(default)


def _write(args, spec, rows, extra, summary_lines):
    fmt = args.format or (spec.output.get("format") if spec else None) or "csv"
    out = args.out or (spec.output.get("path") if spec else None)
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows, extra)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        for line in summary_lines:
            print(line)
    else:
        sys.stdout.write(text)
        for line in summary_lines:
            print(line, file=sys.stderr)


def _g_rows(name, proc, spec, tag=None):
    sc = spec.scenario
    bundle = spec.bundle
    values = proc.values if hasattr(proc, "values") else np.asarray(proc)
    tag = tag or getattr(proc, "tag", None)
    filt = getattr(proc, "filtration", None) or bundle.gfilt
    if tag == PREDICTABLE:
        return _predictable_rows(name, values, filt)
    return process_rows(name, values, sc, filt)


def _predictable_rows(name, values, filt):
    from .scenario import format_atom_key

    rows = []
    for t in range(values.shape[0]):
        part = filt[max(t - 1, 0)]
        for a, atom in enumerate(part.atoms):
            rows.append((name, t, format_atom_key(part.keys[a]), values[t, atom[0]]))
    return rows


def _lookup(named: dict, name: str, bundle):
    if name in named:
        return named[name]
    table = {k: getattr(bundle, k) for k in BUNDLE_PROCESSES}
    if name not in table:
        raise ScenarioFileError("emit", f"unknown process {name!r}")
    return table[name]


def _validation(spec):
    bundle = spec.bundle
    S = spec.scenario.S
    report = validate_model(S, bundle)
    lines, ok = [], True
    for name, diag in report.items():
        ok &= bool(diag.ok)
        lines.append(("PASS" if diag.ok else "FAIL", name, diag.detail))
    problems = bundle_problems(bundle)
    ok &= not problems
    lines.append(("PASS" if not problems else "FAIL", "Azema supermartingale identities",
                  "; ".join(problems)))
    if report.ok:
        try:
            phi_m(S, bundle, check=True)
            lines.append(("PASS", "G_- + phi^(m) > 0 on {G_- > 0} and the S-hat identity", ""))
        except InvariantError as exc:
            ok = False
            lines.append(("FAIL", "G_- + phi^(m) > 0 on {G_- > 0} and the S-hat identity", str(exc)))
    return ok, lines


def cmd_validate(args):
    spec = _load(args)
    ok, lines = _validation(spec)
    for status, name, detail in lines:
        print(f"{status}  {name}" + (f"  ({detail})" if detail else ""))
    return EXIT_OK if ok else EXIT_FAILED


def _need_claim(spec):
    if spec.claim is None:
        raise ScenarioFileError("claim", "this command needs a claim section")
    return spec.claim


def _max_dev(a, b):
    d = np.asarray(a - b).ravel()
    return max((abs(float(v)) for v in d), default=0.0)


def _matches(value, exact_mode):
    return value == 0 if exact_mode else value <= 1e-9


def cmd_hedge(args):
    spec = _load(args)
    claim = _need_claim(spec)
    bundle = spec.bundle
    S = spec.scenario.S
    report = hedge_G(claim, S, bundle)
    direct = hedge_G_direct(claim, S, bundle)
    oracle = brute_force_hedge(claim.payoff(bundle), report.assets, bundle.gfilt)
    cut = bundle.at_risk(report.term)
    dev = _max_dev(report.xi.values[cut], direct.xi.values[cut])
    dev = max(dev, _max_dev(report.residual.values, direct.residual.values))
    r_gap = abs(float(report.risk0 - oracle.risk))
    rows, extra = [], {"route": report.route, "initial_capital": report.initial_capital,
                       "R0": report.risk0, "R0_oracle": oracle.risk,
                       "max_deviation_direct": dev}
    special = None
    try:
        special = special_case_formulas(claim, S, bundle)
        extra["special_case"] = special.route
        extra["special_case_deviation"] = max(
            _max_dev(special.xi.values[cut], report.xi.values[cut]),
            _max_dev(special.residual.values, report.residual.values))
    except ValueError:
        pass
    named = {"xi": report.xi, "L": report.residual, "V": report.value, "C": report.cost,
             "R": report.risk, "H": report.claim_value}
    named.update({k: v for k, v in report.attribution.items() if hasattr(v, "values")})
    emit = _emit_list(args, spec, HEDGE_DEFAULT, named)
    for name in emit:
        proc = _lookup(named, name, bundle)
        rows += _g_rows(name, proc, spec)
        if special is not None and name in ("xi", "L"):
            sp = special.xi if name == "xi" else special.residual
            rows += _g_rows(f"{name}[{special.route}]", sp, spec)
    summary = [f"H_0 = {report.initial_capital}", f"R_0 = {report.risk0} (oracle {oracle.risk})",
               f"max deviation transfer vs direct = {dev:g}"]
    if special is not None:
        summary.append(f"{special.route} closed form deviation = {extra['special_case_deviation']:g}")
    _write(args, spec, rows, extra, summary)
    exact_mode = spec.scenario.space.exact
    if not (_matches(r_gap, exact_mode) and _matches(dev, exact_mode)):
        raise InvariantError("transfer formula disagrees with the direct decomposition or the oracle")
    return EXIT_OK


def cmd_securitize(args):
    spec = _load(args)
    claim = _need_claim(spec)
    bundle = spec.bundle
    S = spec.scenario.S
    if args.instruments:
        models = [[s.strip() for s in args.instruments.split(",") if s.strip()]]
    elif spec.instruments:
        models = [spec.instruments]
    else:
        models = [["bond"], ["endowment"], ["endowment", "bond"]]
    rows, extra, summary = [], {"models": []}, []
    emit = _emit_list(args, spec, ("xi", "L", "prices"), {"xi", "L", "prices", "V", "C", "R"})
    exact_mode = spec.scenario.space.exact
    ok = True
    for insts in models:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = hedge_with_securities(claim, insts, S, bundle, degenerate=args.degenerate)
        oracle = brute_force_hedge(claim.payoff(bundle), report.assets, bundle.gfilt)
        tag = "+".join(insts)
        gap = abs(float(report.risk0 - oracle.risk))
        ok &= _matches(gap, exact_mode)
        extra["models"].append({"instruments": insts, "R0": report.risk0, "R0_oracle": oracle.risk,
                                "warnings": [str(w.message) for w in caught]})
        summary.append(f"[{tag}] R_0 = {report.risk0} (oracle {oracle.risk})")
        summary += [f"[{tag}] warning: {w.message}" for w in caught]
        if "xi" in emit:
            for proc in report.strategy:
                rows += _g_rows(f"{tag}:{proc.name}", proc, spec)
        if "L" in emit:
            rows += _g_rows(f"{tag}:L", report.residual, spec)
        if "prices" in emit:
            for a in report.assets[1:]:
                rows += _g_rows(f"{tag}:{a.name}", a, spec)
        for name in emit:
            if name not in ("xi", "L", "prices"):
                proc = _lookup({"V": report.value, "C": report.cost, "R": report.risk}, name, bundle)
                rows += _g_rows(f"{tag}:{name}", proc, spec)
    _write(args, spec, rows, extra, summary)
    if not ok and args.degenerate == "min_norm":
        raise InvariantError("securitized hedge misses the joint oracle minimum")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_represent(args):
    spec = _load(args)
    claim = _need_claim(spec)
    bundle = spec.bundle
    K, g = claim.legs(bundle)
    rep = optional_representation(K, bundle, claim.term, survival=g)
    named = {"H": rep.H, **rep.components}
    emit = _emit_list(args, spec, ("H", "pure_financial", "correlation", "pure_mortality"), named)
    rows = []
    for name in emit:
        proc = _lookup(named, name, bundle)
        rows += _g_rows(name, proc, spec)
    resid = _max_dev(rep.reconstruction_residual(), 0 * rep.reconstruction_residual())
    _write(args, spec, rows, {"reconstruction_residual": resid},
           [f"H_0 = {rep.H.values[0, 0]}", f"reconstruction residual = {resid:g}"])
    return EXIT_OK


def _check_one(sc, claim):
    bundle = sc.bundle
    r1 = hedge_G(claim, sc.S, bundle)
    r2 = hedge_G_direct(claim, sc.S, bundle)
    o = brute_force_hedge(claim.payoff(bundle), r1.assets, bundle.gfilt)
    cut = bundle.at_risk(r1.term)
    dev = max(_max_dev(r1.xi.values[cut], r2.xi.values[cut]),
              _max_dev(r1.residual.values, r2.residual.values),
              abs(float(r1.risk0 - o.risk)))
    return dev


def cmd_oracle_check(args):
    from .hedging import Claim

    exact_mode = (args.mode or "rational") == "rational"
    worst, count = 0.0, 0
    if args.random:
        base = args.seed or 0
        for fam in ORACLE_FAMILIES:
            fam_worst = 0.0
            for seed in range(base, base + args.random):
                sc = random_scenario(seed, fam, exact_mode=exact_mode)
                ben = random_benefits(sc, seed)
                T = ben["term"]
                for claim in (Claim.endowment(ben["g"], ben["K"], T), Claim.annuity_claim(ben["C"], T)):
                    fam_worst = max(fam_worst, _check_one(sc, claim))
                    count += 1
            print(f"{fam}: {args.random} scenarios, max deviation {fam_worst:g}")
            worst = max(worst, fam_worst)
    else:
        if not args.scenario:
            raise ScenarioFileError("scenario", "give a scenario file or --random N")
        spec = _load(args)
        claim = _need_claim(spec)
        exact_mode = spec.scenario.space.exact
        worst = _check_one(spec.scenario, claim)
        count = 1
    print(f"checked {count} claims; max deviation {worst:g}")
    return EXIT_OK if _matches(worst, exact_mode) else EXIT_FAILED


def cmd_explicit(args):
    spec = _load(args)
    text = dump_yaml(explicit_document(spec))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "hedge": cmd_hedge, "securitize": cmd_securitize,
            "represent": cmd_represent, "oracle-check": cmd_oracle_check, "explicit": cmd_explicit}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ScenarioFileError, ScenarioError, OracleSizeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ModelAssumptionError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except InvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
