"""Command line pipeline: validate, monodromy, surface, oracle.

Exit codes are a total function of the gate results: 0 success, 1 failed
hypothesis validation, 2 malformed configuration, 3 closing failure,
4 unitarizability failure, 5 factorization failure, 6 closure failure.
No gate is skipped silently; --force proceeds past the validation gate
and is recorded in every report it affects.
"""

import argparse
import json
import math
import sys
import warnings

import numpy as np
from scipy.linalg import expm

from .config import ConfigError, load_config
from .flow import lambda_jet_at_one, monodromy_circle
from .iwasawa import IwasawaError
from .loops import LoopError, lambda_grid
from .monodromy import (MonodromyError, MonodromyReport, closing_check,
                        extract_A, find_scale, fit_series_coefficient,
                        p1_residue_oracle, trace_profile, weight,
                        weight_preservation_check)
from .potential import LaurentSpec, kappa, superposition_split, symmetric_spec, validate_symmetry
from .surface import (DomainGrid, SurfaceError, build_surface, export_obj,
                      find_umbilics, mean_curvature_probe,
                      verify_symmetry_planes)
from .unitarize import UnitarizeError, build_unitarizer

EXIT_OK = 0
EXIT_VALIDATE = 1
EXIT_CONFIG = 2
EXIT_CLOSING = 3
EXIT_UNITARIZE = 4
EXIT_FACTORIZE = 5
EXIT_CLOSURE = 6


def _printer(quiet):
    def say(fmt, *args):
        if not quiet:
            print(fmt % args if args else fmt)
    return say


def _hypothesis_failures(spec):
    """Named violations of the construction hypotheses, empty when all hold."""
    failures = []
    sym = validate_symmetry(spec)
    if not sym["rho_ok"]:
        failures.append("rho symmetry violated: coefficients must be real")
    if not sym["sigma_ok"]:
        failures.append("sigma symmetry violated: a_k must equal conj(a_-k)")
    k = kappa(spec)
    if k == 0.0:
        failures.append("kappa = 0: the discriminant must be positive")
    elif k < 0.0:
        failures.append("kappa = %g: the discriminant must be positive" % k)
    return failures


def _pipeline_failures(spec):
    """Gate for the monodromy and surface commands.

    f = 0 is admitted despite kappa = 0: it is the degenerate zero-weight
    case (a round sphere) and every downstream stage handles it exactly.
    """
    failures = _hypothesis_failures(spec)
    if spec.is_zero:
        failures = [msg for msg in failures if not msg.startswith("kappa")]
    return failures


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def cmd_validate(cfg, args):
    say = _printer(args.quiet)
    spec = cfg.spec
    sym = validate_symmetry(spec)
    k = kappa(spec)
    minus, zero, plus = superposition_split(spec)
    say("spec: tau = %g, f terms = %s", spec.tau,
        [[kk, str(a)] for kk, a in spec.terms])
    say("rho symmetry (real coefficients): %s", sym["rho_ok"])
    say("sigma symmetry (a_k = conj(a_-k)): %s", sym["sigma_ok"])
    say("kappa = %.6e", k)
    say("superposition split: %d negative / %d constant / %d positive terms",
        len(minus.terms), len(zero.terms), len(plus.terms))
    if spec.is_zero:
        say("umbilic locus is the whole domain (f = 0)")
    else:
        roots = find_umbilics(spec, (cfg.z_grid["r_min"], cfg.z_grid["r_max"]))
        say("umbilic roots in the annulus: %d", roots.size)
        for z in roots:
            say("  %.12g %+.12gi  |f| = %.2e", z.real, z.imag,
                abs(spec.f(z)))
    failures = _hypothesis_failures(spec)
    for msg in failures:
        say("FAIL: %s", msg)
    say("validate: %s", "ok" if not failures else "hypotheses violated")
    return EXIT_OK if not failures else EXIT_VALIDATE


# ---------------------------------------------------------------------------
# monodromy
# ---------------------------------------------------------------------------

def cmd_monodromy(cfg, args):
    say = _printer(args.quiet)
    spec = cfg.spec
    failures = _pipeline_failures(spec)
    if failures and not args.force:
        for msg in failures:
            say("FAIL: %s", msg)
        say("monodromy: refusing to run (pass --force to override)")
        return EXIT_VALIDATE

    report_path = cfg.outputs["report_path"] or "monodromy.json"
    csv_path = cfg.outputs["csv_path"]
    if not csv_path:
        raise ConfigError("outputs.csv_path required for the monodromy command")

    tol_ode = cfg.tolerances["tol_ode"]
    try:
        jet = lambda_jet_at_one(spec, tol_ode=tol_ode)
        sgn, res_m, res_mp = closing_check(jet)
    except MonodromyError as exc:
        say("closing failed: %s", exc)
        return EXIT_CLOSING

    m_loop = monodromy_circle(spec, n_samples=cfg.lambda_grid["L"],
                              n_modes=cfg.lambda_grid["N"], tol_ode=tol_ode)
    prof = trace_profile(m_loop, sign=sgn)
    try:
        # A non-unitarizable loop still gets a report; only then is the
        # series-fit consistency gate waived (the deviation stays on record).
        fit_tol = 1e-6 if prof["unitarizable"] else float("inf")
        a_matrix = extract_A(jet, m_loop, fit_tol=fit_tol)
    except MonodromyError as exc:
        say("series extraction failed: %s", exc)
        return EXIT_CLOSING
    a_fit = fit_series_coefficient(m_loop, sgn)
    w = weight(a_matrix, spec)
    rep = MonodromyReport(
        sign=sgn,
        closing_residuals=(res_m, res_mp),
        a_matrix=a_matrix,
        kappa_measured=w["kappa_measured"],
        kappa_spec=kappa(spec),
        weight=w["weight"],
        weight_closed_form=w["closed_form"],
        trace_theta=prof["theta"],
        trace_values=prof["trace"],
        trace_range=prof["trace_range"],
        max_im_trace=prof["max_im_trace"],
        unitarizable=prof["unitarizable"],
        first_failure=prof["first_failure"],
        fit_deviation=float(np.max(np.abs(a_matrix - a_fit))),
        oracle=p1_residue_oracle(spec),
    )

    doc = rep.to_json_dict()
    doc["tau"] = spec.tau
    doc["force"] = bool(args.force)
    doc["config"] = cfg.to_json_dict()
    with open(report_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    rep.write_trace_csv(csv_path)

    say("sign s = %+d", rep.sign)
    say("closing residuals: |M(1) - s id| = %.3e, |M'(1)| = %.3e",
        *rep.closing_residuals)
    say("kappa: measured %.6e, from coefficients %.6e",
        rep.kappa_measured, rep.kappa_spec)
    if rep.weight_closed_form is not None:
        say("weight: %.8f (closed form %.8f)", rep.weight,
            rep.weight_closed_form)
    else:
        say("weight: %.8f", rep.weight)
    say("trace range: [%.6f, %.6f], max |Im trace| = %.2e",
        rep.trace_range[0], rep.trace_range[1], rep.max_im_trace)
    say("unitarizable at tau = %g: %s", spec.tau, rep.unitarizable)
    say("wrote %s and %s", report_path, csv_path)
    if not rep.unitarizable:
        say("monodromy: trace escapes the unitarizable range at sample %s",
            rep.first_failure)
        return EXIT_UNITARIZE
    return EXIT_OK


# ---------------------------------------------------------------------------
# surface
# ---------------------------------------------------------------------------

def cmd_surface(cfg, args):
    say = _printer(args.quiet)
    spec = cfg.spec
    tol = cfg.tolerances
    n_samples = cfg.lambda_grid["L"]
    n_modes = cfg.lambda_grid["N"]

    failures = _pipeline_failures(spec)
    forced = bool(failures and args.force)
    if failures and not args.force:
        for msg in failures:
            say("FAIL: %s", msg)
        say("surface: refusing to run (pass --force to override)")
        return EXIT_VALIDATE
    if forced:
        say("proceeding despite: %s", "; ".join(failures))

    scale_info = {"enabled": bool(cfg.scale_search["enabled"])}
    if spec.is_zero:
        tau0 = spec.tau
        scale_info["note"] = "skipped: f = 0 makes the scale immaterial"
    elif cfg.scale_search["enabled"]:
        try:
            found = find_scale(spec, tau_min=cfg.scale_search["tau_min"],
                               n_samples=n_samples, n_modes=n_modes,
                               tol_ode=tol["tol_ode"], force=args.force)
        except MonodromyError as exc:
            say("scale search failed: %s", exc)
            return EXIT_UNITARIZE
        tau0 = found["tau0"]
        scale_info.update({"tau0": tau0, "sign": found["sign"],
                           "n_evaluations": found["n_evaluations"]})
    else:
        tau0 = spec.tau
    say("scale tau0 = %g", tau0)
    wspec = spec.with_tau(tau0)

    try:
        jet = lambda_jet_at_one(wspec, tol_ode=tol["tol_ode"])
        sign, res_m, res_mp = closing_check(jet)
    except MonodromyError as exc:
        say("closing failed: %s", exc)
        return EXIT_CLOSING
    say("closing residuals: %.3e / %.3e, sign %+d", res_m, res_mp, sign)

    m_loop = monodromy_circle(wspec, n_samples=n_samples, n_modes=n_modes,
                              tol_ode=tol["tol_ode"])
    try:
        unit = build_unitarizer(m_loop, eps_pos=tol["eps_pos"])
    except UnitarizeError as exc:
        say("unitarization failed: %s", exc)
        return EXIT_UNITARIZE
    say("unitarizer: %s, residual %.3e",
        "trivial" if unit.trivial else unit.method, unit.residual)

    weight_info = None
    try:
        a_matrix = extract_A(jet, m_loop)
        weight_info = weight(a_matrix, wspec)
    except MonodromyError as exc:
        say("series coefficient unstable, weight omitted: %s", exc)

    grid = DomainGrid.regular(cfg.z_grid["n_r"], cfg.z_grid["n_theta"],
                              cfg.z_grid["r_min"], cfg.z_grid["r_max"])
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            mesh = build_surface(wspec, tau0, unit, grid=grid,
                                 n_samples=n_samples, n_modes=n_modes,
                                 tol_ode=tol["tol_ode"],
                                 tol_fact=tol["tol_fact"],
                                 tol_unit=tol["tol_unit"],
                                 closure_tol=tol["closure_tol"])
        for w in caught:
            say("warning: %s", w.message)
    except (IwasawaError, LoopError, SurfaceError) as exc:
        say("factorization failed: %s", exc)
        return EXIT_FACTORIZE

    sym_report = verify_symmetry_planes(mesh, spec=wspec)
    probe = mean_curvature_probe(mesh)

    mesh.metadata.update({
        "sign": int(sign),
        "closing_residuals": [float(res_m), float(res_mp)],
        "kappa": float(kappa(wspec)),
        "weight": None if weight_info is None else weight_info["weight"],
        "weight_closed_form": (None if weight_info is None
                               else weight_info["closed_form"]),
        "symmetry": sym_report,
        "meanH": probe,
        "scale_search": scale_info,
        "force": forced,
        "config": cfg.to_json_dict(),
    })

    obj_path = cfg.outputs["obj_path"]
    if not obj_path:
        raise ConfigError("outputs.obj_path required for the surface command")
    out = export_obj(mesh, obj_path, cfg.output_path("report_path"))
    say("wrote %s and %s (checksum %s)", out["obj_path"],
        out["report_path"], out["checksum"][:16])

    meta = mesh.metadata
    say("closure residual %.3e (bbox diagonal %.3e): %s",
        meta["closure_residual"], meta["bbox_diagonal"],
        "ok" if meta["closure_ok"] else "FAILED")
    if "plane_angle" in sym_report:
        say("symmetry planes: angle %.6f rad, residuals %.2e / %.2e of bbox",
            sym_report["plane_angle"],
            sym_report["reflection_theta"]["residual_rel"],
            sym_report.get("reflection_ends", {}).get("residual_rel",
                                                      float("nan")))
    say("mean curvature: %.6f +- %.2e (rsd %.3f%%)",
        probe["mean"], probe["std"], 100.0 * probe["rsd"])
    if not meta["closure_ok"]:
        return EXIT_CLOSURE
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

DEFAULT_ORACLES = ("zero_f_closing", "delaunay_exponential",
                   "trace_closed_form", "p1_residue", "series_constant",
                   "weight_identity", "weight_preservation")

AUDITED_CONSTANT = -4.0


def _run_oracle(name, n_samples, n_modes, tol_ode):
    zero = LaurentSpec.from_coeffs({})
    const = LaurentSpec.from_coeffs({0: 1.0 / 32.0})
    figure = symmetric_spec(2, 1.0 / 32.0, 1.0 / 1000.0)

    if name == "zero_f_closing":
        m = monodromy_circle(zero, n_samples=n_samples, n_modes=n_modes,
                             tol_ode=tol_ode)
        dev = float(np.max(np.abs(m.samples + np.eye(2))))
        return dev, 1e-9, "f = 0 monodromy vs -id on %d samples" % n_samples

    if name == "delaunay_exponential":
        from .potential import eval_Q
        lam = lambda_grid(n_samples)
        m = monodromy_circle(const, n_samples=n_samples, n_modes=n_modes,
                             tol_ode=tol_ode)
        dev = 0.0
        for j in range(n_samples):
            want = expm(2j * np.pi * eval_Q(const, 1.0, lam[j]))
            dev = max(dev, float(np.max(np.abs(m.samples[j] - want))))
        return dev, 1e-7, "constant f monodromy vs exp(2 pi i Q(lambda))"

    if name == "trace_closed_form":
        m = monodromy_circle(const, n_samples=n_samples, n_modes=n_modes,
                             tol_ode=tol_ode)
        tr = m.samples[n_samples // 2, 0, 0] + m.samples[n_samples // 2, 1, 1]
        want = 2.0 * math.cos(2.0 * math.pi * math.sqrt(1.0 / 8.0))
        dev = abs(abs(complex(tr)) - abs(want))
        return float(dev), 1e-6, ("trace at lambda = -1 vs 2 cos(2 pi sqrt(1/8))"
                                  " = %.7f" % abs(want))

    if name == "p1_residue":
        orc = p1_residue_oracle(figure)
        return orc["mismatch"], 1e-9, "residue vs quadrature period matrix"

    if name == "series_constant":
        orc = p1_residue_oracle(figure)
        c = orc["constant_vs_printed"]
        dev = abs(c - AUDITED_CONSTANT)
        return float(dev), 1e-9, ("measured global constant %.6f%+.6fi, "
                                  "audited value %g" % (c.real, c.imag,
                                                        AUDITED_CONSTANT))

    if name == "series_constant_literal":
        orc = p1_residue_oracle(figure)
        c = orc["constant_vs_printed"]
        dev = abs(c - 1.0)
        return float(dev), 1e-9, (
            "printed normalization assumes constant 1; measured %.6f%+.6fi: "
            "the two differ by the audited factor %g" % (c.real, c.imag,
                                                         AUDITED_CONSTANT))

    if name == "weight_identity":
        jet = lambda_jet_at_one(const, tol_ode=tol_ode)
        m = monodromy_circle(const, n_samples=n_samples, n_modes=n_modes,
                             tol_ode=tol_ode)
        a = extract_A(jet, m)
        w = weight(a, const)
        dev = abs(w["weight"] - 0.5 * math.pi / 32.0)
        return float(dev), 1e-4, "weight vs (pi/2) a0 for constant f"

    if name == "weight_preservation":
        jet = lambda_jet_at_one(figure, tol_ode=tol_ode)
        m = monodromy_circle(figure, n_samples=n_samples, n_modes=n_modes,
                             tol_ode=tol_ode)
        s, _, _ = closing_check(jet)
        a = extract_A(jet, m)
        unit = build_unitarizer(m)
        chk = weight_preservation_check(a, unit.apply(m), s)
        return chk["a2_squared_deviation"], 1e-5, (
            "unitarized vs original squared series coefficient")

    raise ConfigError("unknown oracle %r" % name)


def cmd_oracle(cfg, args):
    say = _printer(args.quiet)
    select = cfg.oracles["select"]
    names = list(DEFAULT_ORACLES) if select is None else list(select)
    for name in names:
        if name not in DEFAULT_ORACLES + ("series_constant_literal",):
            raise ConfigError("unknown oracle %r" % name)
    if cfg.oracles["inject_literal"] and "series_constant_literal" not in names:
        names.append("series_constant_literal")
    if not names:
        say("no oracles selected")
        return EXIT_OK

    all_ok = True
    say("%-26s %-12s %-10s %s", "oracle", "deviation", "tolerance", "verdict")
    for name in names:
        dev, tol, note = _run_oracle(name, cfg.lambda_grid["L"],
                                     cfg.lambda_grid["N"],
                                     cfg.tolerances["tol_ode"])
        ok = dev <= tol
        all_ok = all_ok and ok
        say("%-26s %-12.3e %-10.1e %s", name, dev, tol,
            "pass" if ok else "FAIL")
        say("    %s", note)
    return EXIT_OK if all_ok else EXIT_VALIDATE


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="cmcyl",
        description="Constant mean curvature cylinders with umbilics: "
                    "validation, monodromy analysis, surface construction, "
                    "and oracle cross-checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, desc in (
            ("validate", cmd_validate,
             "check the construction hypotheses of a spec"),
            ("monodromy", cmd_monodromy,
             "monodromy analysis at the configured scale; JSON + CSV"),
            ("surface", cmd_surface,
             "full pipeline to a mesh: OBJ + JSON report"),
            ("oracle", cmd_oracle,
             "closed-form cross-checks of the numerical pipeline")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", metavar="PATH",
                       help="JSON configuration file")
        p.add_argument("--set", metavar="KEY=VALUE", action="append",
                       default=[], help="dotted config override, repeatable")
        p.add_argument("--force", action="store_true",
                       help="proceed past failed hypothesis validation")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress output")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        return args.func(cfg, args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
