"""Command-line entry point: ``polyprog <command> [options]``.

Exit status is 0 on success, 1 when a check or invariant fails and 2 on
usage errors.  Reports go to ``<out>/<command>.csv`` with a JSON mirror and a
``.meta.json`` file holding timestamps and runtimes.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from .errors import ArgumentError, InvariantError, NumericalInstabilityError, PolyprogError, ResourceError

log = logging.getLogger("polyprog")

COMMANDS = ("localfactor", "classify-primes", "nu-stats", "gowers-norm", "pet-linearize", "decompose",
            "count-progressions", "correlation", "verify")


def _apply_thread_cap() -> None:
    cap = os.environ.get("POLYPROG_THREADS")
    if not cap:
        return
    if not cap.isdigit() or int(cap) < 1:
        raise ArgumentError("POLYPROG_THREADS must be a positive integer")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = cap


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\ncommands: {', '.join(COMMANDS)}\n")
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file layered over the defaults")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    common.add_argument("--out", help="output directory (default polyprog-out)")
    common.add_argument("--mode", choices=("exact", "sampled"))
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="polyprog", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("localfactor", parents=[common], help="principal and complementary local factors")
    s.add_argument("--p", type=int, dest="localfactor.p")
    s.add_argument("--poly", action="append", dest="localfactor.poly", help="repeat for a family")

    s = sub.add_parser("classify-primes", parents=[common], help="good / bad / terrible primes of a family")
    s.add_argument("--polys", dest="classify.polys")
    s.add_argument("--primes-upto", type=int, dest="classify.primes_upto")

    s = sub.add_parser("nu-stats", parents=[common], help="majorant statistics")
    s.add_argument("--N", type=int, dest="nu.N")
    s.add_argument("--w", type=float, dest="nu.w")
    s.add_argument("--R-exponent", type=float, dest="nu.R_exponent")
    s.add_argument("--chi", dest="nu.chi")

    s = sub.add_parser("gowers-norm", parents=[common], help="averaged local Gowers norm")
    s.add_argument("--N", type=int, dest="gowers.N")
    s.add_argument("--function", choices=("random", "primes"), dest="gowers.function")
    s.add_argument("--family", dest="gowers.family")
    s.add_argument("--H", type=int, dest="gowers.H")
    s.add_argument("--sqrtM", type=int, dest="gowers.sqrtM")
    s.add_argument("--samples", type=int, dest="gowers.samples")

    s = sub.add_parser("pet-linearize", parents=[common], help="PET linearization trace")
    s.add_argument("--polys", dest="pet.polys")
    s.add_argument("--distinguished", type=int, dest="pet.distinguished",
                   help="distinguished node (default: the last polynomial)")
    s.add_argument("--deadline", type=float, dest="pet.deadline")

    s = sub.add_parser("decompose", parents=[common], help="structure theorem decomposition")
    s.add_argument("--N", type=int, dest="decompose.N")
    s.add_argument("--eta4", type=float, dest="decompose.eta4")
    s.add_argument("--eta5", type=float, dest="decompose.eta5")
    s.add_argument("--family", dest="decompose.family")
    s.add_argument("--g", choices=("nu", "f"), dest="decompose.g")

    s = sub.add_parser("count-progressions", parents=[common], help="count polynomial progressions in primes")
    s.add_argument("--polys", dest="progressions.polys")
    s.add_argument("--N", type=int, dest="progressions.N")
    s.add_argument("--M", type=int, dest="progressions.M")
    s.add_argument("--witnesses", type=int, dest="progressions.witnesses")
    s.add_argument("--P0", type=float, dest="progressions.P0")

    s = sub.add_parser("correlation", parents=[common], help="polynomial forms average of the majorant")
    s.add_argument("--N", type=int, dest="correlation.N")
    s.add_argument("--polys", dest="correlation.polys")
    s.add_argument("--h-max", type=int, dest="correlation.h_max")

    s = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.add_argument("--no-repro", action="store_true", help="skip the second run used for reproducibility")
    return p


# ---------------------------------------------------------------------------
# commands; each returns (rows, passed, extra metadata)


def _parse_list(text: str):
    """Polynomials separated by semicolons, sharing the sorted set of identifiers as variables."""
    import re

    from .polyalg import parse_poly

    texts = [t.strip() for t in text.split(";") if t.strip()]
    if not texts:
        raise ArgumentError("no polynomials given")
    idents = sorted({m for t in texts for m in re.findall(r"[A-Za-z_][A-Za-z_0-9]*", t)}) or ["x"]
    return [parse_poly(t, idents) for t in texts], idents, "; ".join(texts)


def cmd_localfactor(cfg):
    from .localfactors import complementary_factor, local_factor
    from .report import ReportRow

    p = cfg.get_int("localfactor.p")
    polys, idents, label = _parse_list(cfg.get("localfactor.poly"))
    D = len(idents)
    note = f"p={p} polys={label}"
    rows = [ReportRow("localfactor", "c_p", local_factor(p, polys, D), None, None, note),
            ReportRow("localfactor", "cbar_p", complementary_factor(p, polys, D), None, None, note)]
    return rows, True, {}


def cmd_classify(cfg):
    from .polyalg import classify_prime, is_prime
    from .report import ReportRow

    polys, _, _ = _parse_list(cfg.get("classify.polys"))
    rows = []
    for p in range(2, cfg.get_int("classify.primes_upto") + 1):
        if is_prime(p):
            c = classify_prime(p, polys)
            rows.append(ReportRow("classify-primes", f"p={p}", c.tag, None, None, c.witness))
    return rows, True, {}


def cmd_nu_stats(cfg):
    from .acceptance import sieve_setup
    from .report import ReportRow
    from .sieve import check_majorant

    params, _, chi, nu_fn, f = sieve_setup(cfg.get_int("nu.N"), cfg.get_float("nu.w"),
                                           cfg.get_float("nu.R_exponent"), cfg.get("nu.chi"))
    maj = check_majorant(f, nu_fn)
    c = "nu-stats"
    rows = [ReportRow(c, "N", params.N), ReportRow(c, "W", params.W), ReportRow(c, "b", params.b),
            ReportRow(c, "R", params.R), ReportRow(c, "mean_nu", nu_fn.mean(), 1.0),
            ReportRow(c, "max_nu", float(nu_fn.values.max())), ReportRow(c, "mean_f", f.mean()),
            ReportRow(c, "f_le_nu_violations", maj.violations, 0),
            ReportRow(c, "chi_prime_norm", chi.norm_integral(), 1.0),
            ReportRow(c, "phi_identity_real", chi.phi_identity().real, 1.0)]
    rows += [ReportRow(c, "warning", "", None, None, w) for w in params.warnings]
    return rows, maj.holds, {}


def cmd_gowers(cfg):
    import numpy as np

    from .pet import linearize, make_system
    from .polyalg import parse_family
    from .report import ReportRow
    from .sieve import CyclicFn, build_prime_table

    N = cfg.get_int("gowers.N")
    if cfg.get("gowers.function") == "random":
        f = CyclicFn(N, np.random.default_rng(cfg.seed).uniform(-1, 1, size=N))
    else:
        table = build_prime_table(max(N, 2))
        ind = table.is_prime(np.arange(N)).astype(float)
        f = CyclicFn(N, ind - ind.mean())
    res = linearize(make_system(parse_family(cfg.get("gowers.family"))))
    spec = res.spec_with(cfg.get_int("gowers.H"), 1, cfg.get_int("gowers.sqrtM"))
    from .gowers import gowers_estimate

    est = gowers_estimate(f, spec, cfg.mode, cfg.get_int("gowers.samples"), cfg.seed % 2 ** 63)
    c = "gowers-norm"
    rows = [ReportRow(c, "d", spec.d), ReportRow(c, "t", spec.t),
            ReportRow(c, "Qvec", "; ".join(res.qvec_strings())),
            ReportRow(c, "norm", est.value), ReportRow(c, "power", est.power, None, est.stderr or None, est.mode),
            ReportRow(c, "degenerate_fine_points", est.degenerate_steps)]
    return rows, True, {}


def cmd_pet(cfg):
    from .pet import linearize, make_system, next_target, vdc_step
    from .polyalg import parse_family
    from .report import ReportRow

    polys = parse_family(cfg.get("pet.polys"))
    dist = cfg.get_int("pet.distinguished", len(polys))
    sys0 = make_system(polys, W_symbolic=False, distinguished=dist)
    c = "pet-linearize"
    rows = [ReportRow(c, "initial", "; ".join(sys0.describe()))]
    target = next_target(sys0)
    if target is not None:
        first, _, _ = vdc_step(sys0, target)
        rows += [ReportRow(c, f"step1.node[{i}]", line) for i, line in enumerate(first.describe())]
    try:
        res = linearize(sys0, deadline=cfg.get_float("pet.deadline"))
    except ResourceError:
        rows.append(ReportRow(c, "terminated", False, True, None, "stopped at the deadline"))
        return rows, False, {}
    for k, r in enumerate(res.steps, start=1):
        rows.append(ReportRow(c, f"step{k}", str(r.weight_after), None, None,
                              f"target={r.target} translate={r.translation} new={','.join(r.new_vars)} "
                              f"before={r.weight_before} ref={r.new_ref} nodes={r.nodes_after}"))
    rows += [ReportRow(c, "terminated", True, True), ReportRow(c, "d", res.d), ReportRow(c, "t", res.t)]
    rows += [ReportRow(c, f"Q[{i}]", q) for i, q in enumerate(res.qvec_strings(), start=1)]
    return rows, True, {}


def cmd_decompose(cfg):
    from .acceptance import sieve_setup
    from .pet import linearize, make_system
    from .polyalg import parse_family
    from .report import ReportRow
    from .structure import knvn_decompose

    params, _, _, nu_fn, f = sieve_setup(cfg.get_int("decompose.N"), cfg.get_float("decompose.w"), 0.25)
    res = linearize(make_system(parse_family(cfg.get("decompose.family"))))
    spec = res.spec_with(cfg.get_int("decompose.H"), params.W, cfg.get_int("decompose.sqrtM"))
    g = nu_fn if cfg.get("decompose.g") == "nu" else f
    eta4 = cfg.get_float("decompose.eta4")
    c = "decompose"
    try:
        dec = knvn_decompose(g, nu_fn, spec, eta4, cfg.get_float("decompose.eta5"), seed=cfg.seed % 2 ** 32)
    except InvariantError as exc:
        rows = [ReportRow(c, f"trace[{r.K}]", r.correlation, None, eta4,
                          f"sigma={r.sigma:.12g} energy={r.energy:.12g} atoms={r.atoms}") for r in exc.trace or []]
        rows.append(ReportRow(c, "error", "InvariantError", None, None, str(exc)))
        return rows, False, {}
    rows = [ReportRow(c, f"trace[{r.K}]", r.correlation, None, eta4,
                      f"sigma={r.sigma:.12g} energy={r.energy:.12g} atoms={r.atoms}") for r in dec.trace]
    rows += [ReportRow(c, "iterations", dec.iterations), ReportRow(c, "sigma", dec.sigma),
             ReportRow(c, "sigma_mass_only", dec.sigma_mass)]
    rows += [ReportRow(c, k, v) for k, v in dec.bounds(g).items()]
    return rows, True, {}


def cmd_progressions(cfg):
    from .progressions import HEURISTIC, ProgressionSpec, count_progressions, singular_series
    from .report import ReportRow
    from .sieve import build_prime_table

    spec = ProgressionSpec.parse(cfg.get("progressions.polys"), cfg.get_int("progressions.N"),
                                 cfg.get_int("progressions.M"))
    need = spec.N + max(0, int(spec.shift_table().max()))
    out = count_progressions(spec, build_prime_table(max(need, 2)), cfg.get_int("progressions.witnesses"))
    ss = singular_series(spec, cfg.get_float("progressions.P0"))
    c = "count-progressions"
    rows = [ReportRow(c, "count", out.count),
            ReportRow(c, "gamma", ss.gamma, None, None, HEURISTIC),
            ReportRow(c, "predicted", ss.predicted_count(spec.N, spec.M, spec.k), None, None, HEURISTIC)]
    rows += [ReportRow(c, "witness", " ".join(map(str, w)), None, None, "x m x+P_1(m) ...") for w in out.witnesses]
    return rows, True, {}


def cmd_correlation(cfg):
    from .acceptance import sieve_setup
    from .convexlat import Box
    from .polyalg import parse_poly
    from .report import ReportRow
    from .sieve import polyform_average

    params, _, _, nu_fn, _ = sieve_setup(cfg.get_int("correlation.N"), cfg.get_float("correlation.w"), 0.25)
    polys = [parse_poly(t, ["h"]) for t in cfg.get("correlation.polys").split(";") if t.strip()]
    hmax = cfg.get_int("correlation.h_max")
    rep = polyform_average(nu_fn, polys, Box((0.0,), (hmax + 1.0,)), params)
    c = "correlation"
    rows = [ReportRow(c, "average", rep.value, rep.prediction), ReportRow(c, "h_count", rep.h_count),
            ReportRow(c, "window", f"{rep.window[0]}..{rep.window[1]}"),
            ReportRow(c, "terrible", rep.terrible), ReportRow(c, "exp_sum_inverse_bad", rep.exp_term)]
    return rows, True, {}


def cmd_verify(cfg, only=None, repro=True):
    from .acceptance import reproducibility, run_suite
    from .report import render_csv, render_json

    results = run_suite(cfg, only)
    rows = [r for res in results for r in res.rows]
    if repro:
        again = run_suite(cfg, only)
        rows2 = [r for res in again for r in res.rows]
        rep = reproducibility((render_csv(cfg, rows), render_json(cfg, rows)),
                              (render_csv(cfg, rows2), render_json(cfg, rows2)))
        results.append(rep)
        rows = rows + rep.rows
    meta = {"criteria": {str(r.number): {"title": r.title, "passed": r.passed, "runtime_s": r.runtime,
                                          "runtime_limit_s": r.runtime_limit, "runtime_ok": r.runtime_ok,
                                          "detail": r.detail} for r in results}}
    for r in results:
        print(r.line())
    passed = all(r.ok for r in results)
    return rows, passed, meta


def run(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    from .report import RunConfig, write_report

    overrides = {k: v for k, v in vars(args).items() if "." in k and v is not None}
    if "localfactor.poly" in overrides:
        overrides["localfactor.poly"] = "; ".join(overrides["localfactor.poly"])
    try:
        cfg = RunConfig.resolve(args.command, args.config, overrides, args.seed, args.out, args.mode)
        t0 = time.perf_counter()
        if args.command == "verify":
            only = [int(v) for v in args.only.split(",")] if args.only else None
            repro = not args.no_repro and cfg.get_int("verify.repro", 1) == 1
            rows, passed, meta = cmd_verify(cfg, only, repro)
        else:
            handler = {
                "localfactor": cmd_localfactor, "classify-primes": cmd_classify, "nu-stats": cmd_nu_stats,
                "gowers-norm": cmd_gowers, "pet-linearize": cmd_pet, "decompose": cmd_decompose,
                "count-progressions": cmd_progressions, "correlation": cmd_correlation,
            }[args.command]
            rows, passed, meta = handler(cfg)
        meta = dict(meta, runtime_s=time.perf_counter() - t0)
        paths = write_report(cfg, rows, meta)
    except ArgumentError as exc:
        print(f"polyprog: usage error: {exc}", file=sys.stderr)
        return 2
    except (InvariantError, NumericalInstabilityError) as exc:
        print(f"polyprog: check failed: {exc}", file=sys.stderr)
        return 1
    except PolyprogError as exc:
        print(f"polyprog: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return 0 if passed else 1


def main(argv=None) -> None:
    raise SystemExit(run(argv))


if __name__ == "__main__":
    main()
