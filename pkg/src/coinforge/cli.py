"""Command-line front end.

Every subcommand prints one report. JSON reports carry the schema tag, the
library version and the run configuration, and are byte-stable for a given
argv and seed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass

from coinforge import __version__
from coinforge import anf
from coinforge import design as dsg
from coinforge import formula as fml
from coinforge import prob
from coinforge.errors import CoinforgeError, KindError, ParameterError, PreconditionError

SCHEMA = "coinforge-report/1"
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PRECONDITION = 2
EXIT_USAGE = 64


@dataclass(frozen=True)
class RunConfig:
    seed: int = 42
    trials: int = 10 ** 4
    output: str = "text"
    force_params: bool = False
    threads: str = "auto"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


# -- output -------------------------------------------------------------------

def _clean(obj):
    # JSON has no infinities; spell non-finite floats out
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, int) and not isinstance(obj, bool) and abs(obj) > 2 ** 63:
        return str(obj)
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}{k}.")
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj


def emit(command: str, config: RunConfig, result: dict, csv_text: str | None = None,
         text: str | None = None) -> str:
    if config.output == "json":
        doc = {"schema": SCHEMA, "version": __version__, "command": command,
               "config": asdict(config), "result": result}
        return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"
    if config.output == "csv":
        if csv_text is not None:
            return csv_text
        rows = ["key,value"] + [f"{k},{json.dumps(_clean(v))}" for k, v in _flatten(result)]
        return "\n".join(rows) + "\n"
    if text is not None:
        return text
    return "\n".join(f"{k}: {_clean(v)}" for k, v in _flatten(result)) + "\n"


# -- argument handling ----------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=int, default=10 ** 4)
    p.add_argument("--output", choices=["json", "csv", "text"], default="text")
    p.add_argument("--force", action="store_true", help="accept parameters outside the proven regime")
    p.add_argument("--threads", default="auto", help="Monte Carlo workers (or COINFORGE_THREADS)")
    return p


def _formula_args(p: argparse.ArgumentParser, kind_choice: bool = True):
    if kind_choice:
        p.add_argument("--kind", choices=["amano", "ow2", "derand"])
    p.add_argument("--delta", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--f2", type=int)
    p.add_argument("--fanins", type=lambda s: [int(x) for x in s.split(",")])
    p.add_argument("--ell", type=int)
    p.add_argument("--c0", type=float, default=10.0)
    p.add_argument("--gamma", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--load", help="formula JSON written by --dump")


def _spec_from_args(a, kind: str | None = None) -> fml.FormulaSpec:
    if getattr(a, "load", None):
        return fml.load(a.load)
    kind = kind or a.kind
    if kind is None:
        raise ParameterError("give --load or a formula kind")
    if kind == "amano":
        if a.fanins:
            if not a.force:
                raise ParameterError("custom fan-ins require --force")
            return fml.readonce_spec(a.fanins, a.delta, "AMANO")
        _need(a, "delta", "d")
        return fml.amano_spec(a.delta, a.d)
    if kind == "ow2":
        if a.fanins or a.m is not None or a.f2 is not None:
            if not a.force:
                raise ParameterError("custom fan-ins require --force")
            fanins = a.fanins or [a.m, a.f2 if a.f2 is not None else 2 ** a.m]
            return fml.readonce_spec(fanins, a.delta, "OW2")
        _need(a, "delta")
        return fml.ow2_spec(a.delta, a.c0)
    if kind == "derand":
        d = a.d if a.d is not None else (len(a.fanins) if a.fanins else 2)
        fanins = a.fanins
        if fanins is None and a.f2 is not None:
            fanins = [a.f2]
        return fml.gamma_spec(a.delta, d, C0=a.c0, force=a.force, m=a.m, fanins=fanins,
                              gamma=a.gamma, eta=a.eta, ell=a.ell)
    raise ParameterError(f"unknown formula kind {kind!r}")


def _need(a, *names):
    missing = [n for n in names if getattr(a, n, None) is None]
    if missing:
        raise ParameterError("missing " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _spec_summary(spec: fml.FormulaSpec) -> dict:
    doc = spec.to_dict()
    doc.pop("designs", None)
    doc.pop("relabel", None)
    doc["fanins"] = [f if f < 2 ** 53 else str(f) for f in spec.fanins]
    doc["gate_count"] = str(spec.gate_count) if spec.gate_count > 2 ** 53 else spec.gate_count
    doc["variable_count"] = (str(spec.variable_count) if spec.variable_count > 2 ** 53
                             else spec.variable_count)
    if spec.delta_params is not None and spec.kind == "AMANO":
        doc["delta_params"] = {"deltas": list(spec.delta_params.deltas), "C2": spec.delta_params.C2}
    return doc


# -- subcommands ----------------------------------------------------------------

def cmd_build(a, cfg):
    spec = _spec_from_args(a, a.family)
    if a.dump:
        fml.dump(spec, a.dump)
    return _spec_summary(spec), None, None


def cmd_design_verify(a, cfg):
    if a.load:
        spec = fml.load(a.load)
        if not spec.designs:
            raise KindError("formula has no designs to verify")
        reports = [dsg.verify_properties(z, spec.fanins[i + 1]).to_dict()
                   for i, z in enumerate(spec.designs)]
        return {"levels": reports, "all_passed": all(r["all_passed"] for r in reports)}, None, None
    _need(a, "q")
    z = dsg.lines_design(a.q, a.n2, a.ell if a.ell is not None else 2)
    used = a.m_used if a.m_used is not None else z.size
    return dsg.verify_properties(z, used).to_dict(), None, None


def _exact_accept(spec, alpha):
    if spec.read_once and spec.relabel is None:
        return prob.readonce_prob(spec, alpha).accept
    if spec.variable_count <= prob.ENUM_LIMIT:
        return prob.enumerate_prob(spec, alpha)
    return None


def cmd_simulate(a, cfg):
    spec = _spec_from_args(a)
    if a.alpha is not None:
        alphas = {"alpha": a.alpha}
    else:
        delta = a.delta if a.delta is not None else spec.delta
        if delta is None:
            raise ParameterError("give --alpha or --delta")
        a0, a1 = prob.coin_biases(delta)
        alphas = {"mu0": a0, "mu1": a1}
    out = {"formula": _spec_summary(spec), "sides": {}}
    for name, alpha in alphas.items():
        p_hat, ci = prob.mc_estimate(spec, alpha, cfg.trials, cfg.seed, cfg.threads)
        out["sides"][name] = {"alpha": alpha, "p_hat": p_hat, "ci_halfwidth": ci,
                              "exact": _exact_accept(spec, alpha)}
    if "mu0" in out["sides"]:
        out["empirical_error"] = max(out["sides"]["mu0"]["p_hat"], 1 - out["sides"]["mu1"]["p_hat"])
        # two published error levels; report both without choosing
        out["thresholds"] = {"analytic": 0.05, "union_bound": math.exp(-spec.C0) if spec.C0 else None}
    return out, None, None


def cmd_recurrence(a, cfg):
    if a.sweep:
        _need(a, "d")
        ms = a.ms or list(range(10, 21, 2))
        sweep = prob.amano_bracket_sweep(a.d, ms)
        lines = ["m,delta,delta_1,violations,excused"]
        for e in sweep:
            lines.append(f"{e.m},{e.delta!r},{e.delta_1!r},{' '.join(map(str, e.violations))},"
                         f"{str(e.excused).lower()}")
        res = {"d": a.d, "entries": [e.to_dict() for e in sweep],
               "all_excused": all(e.excused for e in sweep)}
        return res, "\n".join(lines) + "\n", None
    spec = _spec_from_args(a, a.kind or ("amano" if a.load is None else None))
    table = prob.recurrence_table(spec)
    return table.to_dict(), table.to_csv(), table.to_csv()


def cmd_janson_check(a, cfg):
    if a.load:
        spec = fml.load(a.load)
    else:
        _need(a, "m", "f2")
        spec = fml.gamma_spec(None, 2, force=True, m=a.m, fanins=[a.m, a.f2],
                              ell=a.ell if a.ell is not None else 2)
    alpha = a.alpha if a.alpha is not None else 0.5
    chk = prob.janson_check(spec, alpha)
    out = chk.to_dict()
    if spec.kind == "DERAND":
        out["delta_analytic_bound"] = prob.delta_compute(spec, 2, alpha, "closed_form").analytic_bound
    out["variables"] = spec.variable_count
    return out, None, None


def cmd_tv(a, cfg):
    r = prob.tv_distance(a.delta_prime, a.n)
    return r.to_dict(), None, f"{r.tv!r}\n"


def cmd_degree_search(a, cfg):
    r = anf.degree_search(a.n, a.delta, a.epsilon, a.mode or "exhaustive")
    return r.to_dict(), None, f"{r.to_dict()['min_degree']}\n"


def _named_function(n: int, name: str) -> anf.TruthTable:
    if name == "maj":
        return anf.TruthTable.maj(n)
    if name in ("const0", "const1"):
        return anf.TruthTable.const(n, int(name[-1]))
    if name == "parity":
        return anf.TruthTable.parity(n)
    if name == "dictator":
        return anf.TruthTable.dictator(n)
    if name.startswith("thr:"):
        return anf.TruthTable.threshold(n, int(name[4:]))
    if name.startswith("0x"):
        return anf.TruthTable.from_int(n, int(name, 16))
    raise ParameterError(f"unknown function {name!r}")


def cmd_smolensky(a, cfg):
    if a.sweep:
        return anf.smolensky_sweep(a.n).to_dict(), None, None
    _need(a, "R", "D")
    h = _named_function(a.n, a.function)
    return anf.smolensky_check(h, a.R, a.D).to_dict(), None, None


def cmd_amplify(a, cfg):
    _need(a, "lo", "hi")
    if a.width is None:
        if a.kind != "THR":
            raise ParameterError("width search is defined for THR")
        w = anf.smallest_thr_width(a.lo, a.hi)
        width, thr = w.width, w.threshold
        out = {"search": w.to_dict()}
    else:
        width, thr = a.width, anf.amplify_threshold(a.width, a.kind)
        out = {}
    sides = {}
    for name, p in (("lo", a.lo), ("hi", a.hi)):
        exact = anf.binom_tail(width, thr, p, exact=True)
        est, ci = anf.amplify_mc(p, width, thr, cfg.trials, cfg.seed)
        sides[name] = {"p_in": p, "exact_out": exact, "mc_out": est, "ci_halfwidth": ci,
                       "within_ci": abs(est - exact) <= ci}
    out.update({"kind": a.kind, "width": width, "threshold": thr, "sides": sides})
    return out, None, None


def cmd_counting_check(a, cfg):
    r = anf.counting_check(a.n, a.r, zeta=a.zeta, delta_k=a.delta_k, log_zeta=a.log_zeta)
    return r.to_dict(), None, None


def cmd_substitute(a, cfg):
    spec = _spec_from_args(a)
    new = fml.random_substitute(spec, a.n, cfg.seed)
    if a.dump:
        fml.dump(new, a.dump)
    out = {"formula": _spec_summary(new)}
    if a.alpha is not None:
        w = math.floor(a.alpha * a.n)
        est, ci = prob.mc_weight_slice(new, w, cfg.trials, cfg.seed)
        out["weight"] = w
        out["p_hat"] = est
        out["ci_halfwidth"] = ci
        if new.variable_count <= prob.ENUM_LIMIT:
            out["exact"] = prob.weight_slice_prob(new, w)
    return out, None, None


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = _Parser(prog="coinforge", description="Constant-depth coin-problem formulas and oracles.")
    p.add_argument("--version", action="version", version=f"coinforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", parents=[common], help="construct a formula")
    b.add_argument("family", choices=["amano", "ow2", "derand"])
    _formula_args(b, kind_choice=False)
    b.add_argument("--dump", help="write the formula JSON here")
    b.set_defaults(func=cmd_build)

    dv = sub.add_parser("design-verify", parents=[common], help="check design properties exhaustively")
    dv.add_argument("--q", type=int, help="field degree of a lines-type design")
    dv.add_argument("--n2", type=int)
    dv.add_argument("--ell", type=int)
    dv.add_argument("--m-used", type=int)
    dv.add_argument("--load")
    dv.set_defaults(func=cmd_design_verify)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo acceptance estimate")
    _formula_args(s)
    s.add_argument("--alpha", type=float)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("recurrence", parents=[common], help="read-once recurrence and brackets")
    _formula_args(r)
    r.add_argument("--sweep", action="store_true", help="analytic bracket sweep over m")
    r.add_argument("--ms", type=lambda s: [int(x) for x in s.split(",")])
    r.set_defaults(func=cmd_recurrence)

    j = sub.add_parser("janson-check", parents=[common], help="exact Janson sandwich on a toy formula")
    j.add_argument("--m", type=int)
    j.add_argument("--f2", type=int)
    j.add_argument("--ell", type=int)
    j.add_argument("--alpha", type=float)
    j.add_argument("--load")
    j.set_defaults(func=cmd_janson_check)

    t = sub.add_parser("tv", parents=[common], help="exact total variation distance")
    t.add_argument("--delta-prime", type=float, required=True)
    t.add_argument("--n", type=int, required=True)
    t.set_defaults(func=cmd_tv)

    ds = sub.add_parser("degree-search", parents=[common], help="minimum F2 degree oracle")
    ds.add_argument("--n", type=int, required=True)
    ds.add_argument("--delta", type=float, required=True)
    ds.add_argument("--epsilon", type=float, default=0.1)
    ds.add_argument("--mode", choices=["exhaustive", "symmetric"])
    ds.set_defaults(func=cmd_degree_search)

    sm = sub.add_parser("smolensky", parents=[common], help="Smolensky extension check")
    sm.add_argument("--n", type=int, required=True)
    sm.add_argument("--function", default="maj",
                    help="maj, const0, const1, parity, dictator, thr:K or a hex table")
    sm.add_argument("--R", type=int)
    sm.add_argument("--D", type=int)
    sm.add_argument("--sweep", action="store_true", help="all functions and all valid (R, D)")
    sm.set_defaults(func=cmd_smolensky)

    am = sub.add_parser("amplify", parents=[common], help="threshold amplification of a profile")
    am.add_argument("--lo", type=float, help="profile value at the low bias")
    am.add_argument("--hi", type=float, help="profile value at the high bias")
    am.add_argument("--kind", choices=["THR", "MAJ"], default="THR")
    am.add_argument("--width", type=int)
    am.set_defaults(func=cmd_amplify)

    cc = sub.add_parser("counting-check", parents=[common], help="binomial counting inequality")
    cc.add_argument("--n", type=int, required=True)
    cc.add_argument("--r", type=float, default=10.0)
    cc.add_argument("--delta-k", type=float, default=0.1)
    cc.add_argument("--zeta", type=float)
    cc.add_argument("--log-zeta", type=float)
    cc.set_defaults(func=cmd_counting_check)

    su = sub.add_parser("substitute", parents=[common], help="random substitution onto n variables")
    _formula_args(su)
    su.add_argument("--n", type=int, required=True)
    su.add_argument("--alpha", type=float, help="also estimate acceptance at weight floor(alpha n)")
    su.add_argument("--dump")
    su.set_defaults(func=cmd_substitute)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    cfg = RunConfig(seed=a.seed, trials=a.trials, output=a.output, force_params=a.force,
                    threads=str(a.threads))
    try:
        if cfg.trials < 1:
            raise ParameterError("--trials must be >= 1")
        result, csv_text, text = a.func(a, cfg)
    except PreconditionError as e:
        sys.stderr.write(f"coinforge: {e}\n")
        return EXIT_PRECONDITION
    except (ParameterError, KindError) as e:
        sys.stderr.write(f"coinforge: usage: {e}\n")
        return EXIT_USAGE
    except CoinforgeError as e:
        sys.stderr.write(f"coinforge: {e}\n")
        return EXIT_FAILURE
    sys.stdout.write(emit(a.command, cfg, result, csv_text, text))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
