"""``isolab`` command line.

Exit codes: 0 when every asserted check passes, 1 when one fails, 2 for
invalid configuration, 3 when a resource cap is hit, 4 for I/O errors.
"""
from __future__ import annotations

import argparse
import datetime
import math
import sys
from fractions import Fraction

import numpy as np

from ._validation import InteriorityError, check_positive_int
from .forests import BallSampler, check_rsf_inequality, degree_stats, sample_degrees
from .groups import GroupSpecError, ResourceError, cayley_ball, parse_generators, parse_group_spec
from .harmonic import (
    ChainComplex,
    NumericalRankError,
    center_trace,
    harmonic_projector,
    known_beta1,
    restriction_rank_check,
)
from .isoperimetry import (
    Check,
    check_comparisons,
    edge_boundary,
    growth_rate,
    min_ratio_exact,
    ratio_profile,
    sphere_set,
)
from .relsim import (
    Graphing,
    PartialInjection,
    RelsimError,
    build_hzero_graphing,
    check_main_inequality,
    cycle_permutation,
    power_family,
    random_scenario,
    segment_property,
    worked_compression,
)
from .report import Report, dumps, emit, profile_csv

DEFAULT_SEED = 42

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_IO = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


# -- helpers ---------------------------------------------------------------------------


def _ball_from(args, radius=None):
    spec = parse_group_spec(args.group)
    gens = parse_generators(spec, args.gens)
    return spec, gens, cayley_ball(spec, gens, args.radius if radius is None else radius)


def _gens_text(spec, gens):
    return ",".join(spec.label(g) for g in gens)


def _info(args, name, passed, values):
    """A check that is informational unless ``--assert`` is given."""
    return Check(name, bool(args.assert_), bool(passed), values)


def _is_tree(ball):
    return ball.n_edges == ball.n_vertices - 1


def _config(args, keys):
    cmd = args.command
    if cmd == "relsim":
        cmd = f"relsim {args.relsim_command}"
    out = {"command": cmd}
    for k in keys:
        out[k] = getattr(args, k)
    return out


# -- commands --------------------------------------------------------------------------


def cmd_ball(args):
    spec, gens, ball = _ball_from(args)
    g = growth_rate(ball.ball_sizes) if ball.radius >= 1 else None
    payload = {
        "group": str(spec),
        "gens": _gens_text(spec, gens),
        "ball": ball.to_dict(),
        "ball_sizes": ball.ball_sizes,
        "n_vertices": ball.n_vertices,
        "n_edges": ball.n_edges,
        "degree": ball.full_degree,
        "saturated": ball.saturated,
        "growth_estimate": None if g is None else g.estimate,
    }
    checks = [Check("edge_count", True,
                    int(ball.degree.sum()) == 2 * ball.n_edges,
                    {"edges": ball.n_edges})]
    return Report("ball", _config(args, ["group", "gens", "radius"]), payload, checks)


def cmd_cheeger(args):
    spec, gens, ball = _ball_from(args)
    if ball.radius < 1:
        raise ConfigError("cheeger needs --radius >= 1 so that the interior is nonempty")
    extra = {}
    if args.exact:
        check_positive_int(args.max_size, "--max-size")
        A, ratio, count = min_ratio_exact(ball, args.max_size, n_jobs=args.jobs)
        extra["n_enumerated"] = count
    else:
        # best interior ball B(n), n < radius
        best = None
        for n in range(ball.radius):
            S = sphere_set(ball, n)
            r = Fraction(edge_boundary(S), len(S))
            if best is None or r < best[1]:
                best = (S, r)
        A, ratio = best
    omega = growth_rate(ball.ball_sizes).estimate
    rep = check_comparisons(A, growth=omega)
    checks = list(rep.checks)
    if args.exact and _is_tree(ball):
        want = (ball.full_degree - 2) * len(A) + 2
        checks.append(Check("tree_boundary_law", True, rep.edge_boundary == want,
                            {"edge_boundary": rep.edge_boundary, "expected": want}))
    labels = ball.labels()
    payload = {
        "group": str(spec),
        "gens": _gens_text(spec, gens),
        "radius": ball.radius,
        "exact": bool(args.exact),
        "minimizer": [labels[v] for v in A.members],
        "size": len(A),
        "edge_boundary": rep.edge_boundary,
        "inner_boundary": rep.inner_boundary,
        "ratio": ratio,
        "folner": rep.folner_ratio,
        "kazhdan": rep.kazhdan_value,
        "growth_estimate": omega,
        "growth_bound": rep.growth_bound,
        **extra,
    }
    return Report("cheeger", _config(args, ["group", "gens", "radius", "max_size", "exact"]),
                  payload, checks)


def cmd_profile(args):
    spec = parse_group_spec(args.group)
    gens = parse_generators(spec, args.gens)
    rows = ratio_profile(spec, gens, args.radius)
    ratios = [r.ratio for r in rows]
    decreasing = all(a > b for a, b in zip(ratios, ratios[1:]))
    checks = [_info(args, "strictly_decreasing", decreasing, {})]
    if spec.kind == "free":
        limit = 2 * spec.rank - 2
        checks.append(_info(args, "above_limit", all(r > limit for r in ratios),
                            {"limit": limit}))
    payload = {
        "group": str(spec),
        "gens": _gens_text(spec, gens),
        "rows": [{"n": r.n, "ball": r.ball, "boundary": r.boundary, "ratio": r.ratio,
                  "ratio_float": float(r.ratio)} for r in rows],
    }
    report = Report("profile", _config(args, ["group", "gens", "radius"]), payload, checks)
    report.csv = profile_csv(rows)
    return report


class _ForestChecker:
    """Per-sample acyclicity and forest degree bound on fixed interior sets."""

    def __init__(self, sets):
        self.sets = sets

    def __call__(self, sample):
        ok = sample.is_acyclic()
        for A in self.sets:
            ok = ok and check_rsf_inequality(sample, A)
        return ok


def cmd_forest(args):
    spec, gens, ball = _ball_from(args)
    if ball.radius < 1:
        raise ConfigError("forest needs --radius >= 1")
    sampler = BallSampler(ball, args.mode)
    sets = [list(range(ball.ball_sizes[n])) for n in range(ball.radius)]
    degs, rsf_ok = sample_degrees(sampler, 0, args.samples, args.seed, n_jobs=args.jobs,
                                  checker=_ForestChecker(sets))
    st = degree_stats(degs)
    target = known_beta1(spec) if args.mode == "free" else 0.0
    if st.variance == 0:
        near = st.beta1_estimate == target
    else:
        near = abs(st.beta1_estimate - target) <= st.ci99 / 2
    checks = [
        Check("rsf_inequality_and_acyclicity", True, rsf_ok, {"sets": len(sets)}),
        _info(args, "beta1_target_in_ci", near,
              {"target": target, "estimate": st.beta1_estimate, "half_width": st.ci99 / 2}),
    ]
    payload = {
        "graph": {"group": str(spec), "gens": _gens_text(spec, gens), "radius": ball.radius,
                  "vertices": ball.n_vertices, "edges": ball.n_edges},
        "mode": args.mode,
        "samples": st.n_samples,
        "seed": args.seed,
        "mean_degree": st.mean_degree,
        "variance": st.variance,
        "ci99": st.ci99,
        "cost_estimate": st.cost_estimate,
        "beta1_estimate": st.beta1_estimate,
        "rsf_checks_passed": rsf_ok,
    }
    return Report("forest", _config(args, ["group", "gens", "radius", "mode", "samples", "seed"]),
                  payload, checks)


def _parse_sweep(text):
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"--sweep must look like 2:8, got {text!r}") from None
    if a < 2 or b < a:
        raise ConfigError(f"--sweep needs 2 <= start <= end, got {text!r}")
    return list(range(a, b + 1))


def cmd_betti(args):
    spec = parse_group_spec(args.group)
    gens = parse_generators(spec, args.gens)
    radii = _parse_sweep(args.sweep) if args.sweep else [args.radius]
    if radii[0] < 2:
        raise ConfigError("betti needs radius >= 2")
    traces, dims, restr = [], [], []
    rank_ok = True
    for r in radii:
        ball = cayley_ball(spec, gens, r)
        h = harmonic_projector(ChainComplex.from_ball(ball))
        traces.append(center_trace(h))
        dims.append(h.dim)
        rc = restriction_rank_check(h, sphere_set(ball, r - 2))
        rank_ok &= rc.equal
        restr.append({"radius": r, "A": f"B({r - 2})", **rc.to_dict()})
    target = known_beta1(spec)
    checks = [
        Check("restriction_rank_equal", True, rank_ok, {}),
        _info(args, "trace_near_beta1", abs(traces[-1] - target) <= 0.1,
              {"target": target, "trace": traces[-1], "tolerance": 0.1}),
    ]
    payload = {"group": str(spec), "gens": _gens_text(spec, gens), "radii": radii,
               "center_trace": traces, "dims": dims, "restr_checks": restr,
               "beta1_target": target}
    return Report("betti", _config(args, ["group", "gens", "radius", "sweep"]), payload, checks)


def _hzero_parts(N, n, eps):
    check_positive_int(N, "--N")
    check_positive_int(n, "--n")
    if not 0 < eps <= 1:
        raise ConfigError(f"--eps must lie in (0, 1], got {eps}")
    if N < 4 * n:
        raise ConfigError(f"hzero needs N >= 4n, got N={N}, n={n}")
    g = build_hzero_graphing(N, n, eps)
    family = power_family(g.maps[0].forward(N), range(n + 1))
    return g, family


def cmd_relsim_hzero(args):
    N, n, eps = args.N, args.n, args.eps
    g, family = _hzero_parts(N, n, eps)
    main = check_main_inequality(g, family)
    ratio = main.witness_ratio
    want_cost = 1 + Fraction(math.ceil(Fraction(eps).limit_denominator(10**12) * N), N)
    checks = [
        Check("cost_exact", True, main.cost == want_cost, {"cost": main.cost, "expected": want_cost}),
        Check("witness_ratio_bound", True, ratio <= Fraction(4, n + 1),
              {"ratio": ratio, "bound": Fraction(4, n + 1)}),
        Check("segment_property", True, segment_property(g, n) <= 1, {}),
        *main.checks,
    ]
    payload = {"N": N, "n": n, "eps": eps, "cost": main.cost, "cost_treeing": main.cost_treeing,
               "witness_ratio": ratio, "bound_4_over_n1": Fraction(4, n + 1)}
    return Report("relsim hzero", _config(args, ["N", "n", "eps"]), payload, checks)


def cmd_relsim_main(args):
    N = check_positive_int(args.N, "--N")
    if args.scenario == "random":
        g, family = random_scenario(N, np.random.default_rng(args.seed))
    elif args.scenario == "cycle":
        phi = cycle_permutation(N)
        g = Graphing(N, [PartialInjection.from_permutation(phi)])
        family = power_family(phi, range(min(args.n, N)))
    else:
        g, family = _hzero_parts(N, args.n, args.eps)
    main = check_main_inequality(g, family)
    payload = {"N": N, "scenario": args.scenario, "family_size": len(family),
               "classes": main.n_classes, "cost": main.cost, "cost_treeing": main.cost_treeing,
               "witness_ratio": main.witness_ratio}
    cfg = _config(args, ["scenario", "N", "n", "eps", "seed"])
    return Report("relsim main-check", cfg, payload, list(main.checks))


def cmd_relsim_compress(args):
    rep = worked_compression(args.N, args.n, args.k)
    payload = rep.to_dict()
    checks = payload.pop("checks")
    return Report("relsim compress", _config(args, ["N", "n", "k"]), payload,
                  [Check(**c) for c in checks])


# -- parser ----------------------------------------------------------------------------


def _common(p, group=True):
    if group:
        p.add_argument("--group", required=True, help="group spec, e.g. F2, Z^2, Zmod7^2, F2 x Zmod3")
        p.add_argument("--gens", default=None, help="comma-separated words (default: standard)")
        p.add_argument("--radius", type=int, default=4)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="treat informational checks as asserted")
    p.add_argument("--timestamp", action="store_true", help="record the UTC time in the report")


def build_parser():
    parser = argparse.ArgumentParser(prog="isolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ball", help="Cayley ball summary")
    _common(p)
    p.set_defaults(func=cmd_ball)

    p = sub.add_parser("cheeger", help="boundary ratio of interior sets")
    _common(p)
    p.add_argument("--max-size", type=int, default=8)
    p.add_argument("--exact", action="store_true", help="exhaustive search over connected sets")
    p.set_defaults(func=cmd_cheeger)

    p = sub.add_parser("profile", help="boundary ratio of B(n), n = 1..radius")
    _common(p)
    p.add_argument("--csv", default=None, help="also write the profile as CSV")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("forest", help="spanning forest degree statistics")
    _common(p)
    p.add_argument("--mode", choices=["free", "wired"], default="free")
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_forest)

    p = sub.add_parser("betti", help="harmonic center trace sweep")
    _common(p)
    p.add_argument("--sweep", default=None, help="radius range a:b (inclusive)")
    p.set_defaults(func=cmd_betti)

    rel = sub.add_parser("relsim", help="finite graphing simulations")
    rsub = rel.add_subparsers(dest="relsim_command", required=True)
    p = rsub.add_parser("hzero")
    _common(p, group=False)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(func=cmd_relsim_hzero)
    p = rsub.add_parser("main-check")
    _common(p, group=False)
    p.add_argument("--scenario", choices=["random", "cycle", "hzero"], default="random")
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(func=cmd_relsim_main)
    p = rsub.add_parser("compress")
    _common(p, group=False)
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_relsim_compress)
    return parser


def run(argv=None):
    """Parse ``argv``, run the command and return ``(report, exit_code)``."""
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    report = args.func(args)
    if args.timestamp:
        report.timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    emit(dumps(report), args.out)
    if getattr(args, "csv", None):
        emit(report.csv, args.csv)
    return report, (EXIT_OK if report.ok else EXIT_CHECK)


def main(argv=None):
    try:
        report, code = run(argv)
    except (ConfigError, GroupSpecError, InteriorityError, RelsimError, NumericalRankError) as exc:
        print(f"isolab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"isolab: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"isolab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"isolab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if code:
        print(f"isolab: asserted checks failed: {', '.join(report.failed())}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
