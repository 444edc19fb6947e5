"""Command-line entry point: dirac1d <spectrum|density|anomaly|evolve|freefield>."""
from __future__ import annotations

import argparse
import contextlib
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, GapClosedError, UnsupportedRegimeError, WindowError
from .evolution import EvolutionSchedule, mapped_overlap, verify_gauge_identity
from .oracle import bound_states_shooting
from .output import RunWriter
from .potentials import ramp_lambda, theta_from_V
from .spectral import (
    FourierBasis,
    HamiltonianFactory,
    chiral_map_modes,
    diagonalize,
    eigenvalues,
    free_modes,
    free_spinor,
)
from .vacuum import (
    anomaly_difference,
    capri_check,
    damped_exponential_integral,
    density_unreg,
    free_bilinear_analytic,
    free_bilinear_box,
    free_bilinear_exact,
    gamma5_bilinear,
    profile_grid,
    regularized_bilinear,
)

THREADS_ENV = "DIRAC1D_THREADS"


def _free_dispersion(cfg) -> np.ndarray:
    k = FourierBasis(cfg.L, cfg.N).k
    w = np.sqrt(k**2 + cfg.m**2)
    return np.sort(np.concatenate([-w, w]))


def _in_gap(E: np.ndarray, cfg) -> np.ndarray:
    c = cfg.shift
    return (E > c - cfg.m) & (E < c + cfg.m)


def cmd_spectrum(rc: RunConfig, w: RunWriter) -> list[str]:
    cfg = rc.potential()
    m = cfg.m
    fac = HamiltonianFactory(cfg)
    EA, EB = eigenvalues(fac.A()), eigenvalues(fac.B())
    win = rc.numerics.energy_window * m
    inwin = np.abs(EA) <= win
    d = np.abs(EA - EB)
    free = _free_dispersion(cfg)
    w.table(
        "spectrum",
        ["index", "E_A", "E_B", "abs_diff", "in_window", "free_dispersion"],
        zip(range(len(EA)), EA, EB, d, inwin, free),
        note=f"energies in units of 1/length (m = {m}); window |E_A| <= {win}",
    )
    max_win = float(d[inwin].max())
    w.result("max_level_diff_window", max_win)
    w.result("max_level_diff_all", float(d.max()))
    w.result("negative_levels_A", int(np.sum(EA < 0)))
    w.result("negative_levels_B", int(np.sum(EB < 0)))
    w.check("level_diff", max_win <= 1e-3 * m, "max |E_A - E_B| <= 1e-3 m for |E| <= window")
    if cfg.eta == 0:
        w.check("free_dispersion", float(np.max(np.abs(EA - free))) <= 1e-10, "|E_A - free| <= 1e-10")

    if cfg.eta < m:
        res = bound_states_shooting(cfg, use_parity=fac.field.is_even)
        gapE = EA[_in_gap(EA, cfg)]
        rows, worst = [], 0.0
        for E, r, par in zip(res.energies, res.match_residuals, res.parity):
            near = gapE[np.argmin(np.abs(gapE - E))] if gapE.size else np.nan
            worst = max(worst, abs(near - E)) if gapE.size else np.inf
            rows.append((E, r, par or "", near, abs(near - E)))
        w.table("oracle", ["E_shooting", "match_residual", "parity", "E_spectral", "abs_diff"], rows)
        w.result("bound_states_shooting", len(res.energies))
        w.result("bound_states_spectral", int(gapE.size))
        w.result("oracle_max_diff", worst)
        w.check("oracle_match", worst <= 1e-4 * m and gapE.size == len(res.energies),
                "each shooting root within 1e-4 m of a spectral level; equal counts")

    rows, diffs, lowest = [], {}, {}
    for N in rc.numerics.convergence_N:
        c = cfg.replace(N=N)
        f = HamiltonianFactory(c)
        a, b = eigenvalues(f.A()), eigenvalues(f.B())
        dd = float(np.abs(a - b)[np.abs(a) <= win].max())
        g = a[_in_gap(a, c)]
        lo = float(g.min()) if g.size else np.nan
        diffs[N], lowest[N] = dd, lo
        rows.append((N, dd, lo))
    w.table("convergence", ["N", "max_level_diff_window", "lowest_bound_state"], rows)
    Ns = sorted(diffs)
    if len(Ns) >= 2 and Ns[-1] >= 4 * Ns[0]:
        ratio = diffs[Ns[0]] / diffs[Ns[-1]]
        w.result("level_diff_reduction", ratio)
        w.check("level_diff_convergence", ratio >= 4, f"diff(N={Ns[0]}) / diff(N={Ns[-1]}) >= 4")
    if cfg.N in lowest and 2 * cfg.N in lowest and np.isfinite(lowest[cfg.N]):
        ch = abs(lowest[2 * cfg.N] - lowest[cfg.N])
        w.result("lowest_bound_state_change", ch)
        w.check("bound_state_convergence", ch < 1e-6 * m, "|E0(2N) - E0(N)| < 1e-6 m")
    return []


def _lambda(rc: RunConfig) -> float:
    lam = rc.numerics.Lambda_damp
    if lam is None:
        raise ConfigError("numerics.Lambda_damp: required for unregularized densities")
    return lam


def cmd_density(rc: RunConfig, w: RunWriter) -> list[str]:
    cfg = rc.potential()
    Lam = _lambda(rc)
    fac = HamiltonianFactory(cfg)
    mA, mB = diagonalize(fac.A()), diagonalize(fac.B())
    mM = chiral_map_modes(mA, fac.field)
    z = profile_grid(cfg.L, rc.numerics.grid_points)
    rA = density_unreg(mA, z, Lam).values
    rM = density_unreg(mM, z, Lam).values
    rB = density_unreg(mB, z, Lam).values
    V = fac.field.V(z)
    w.table(
        "density",
        ["z", "V", "rho_A", "rho_B_mapped", "rho_B_independent", "diff_mapped", "diff_independent"],
        zip(z, V, rA, rM, rB, rM - rA, rB - rA),
        note=f"half-commutator convention; energy damping exp(-(E/{Lam})^2)",
    )
    dm, di = float(np.max(np.abs(rM - rA))), float(np.max(np.abs(rB - rA)))
    dz = cfg.L / len(z)
    qA, qM = float(rA.sum() * dz), float(rM.sum() * dz)
    w.result("sup_diff_mapped", dm)
    w.result("sup_diff_independent", di)
    w.result("total_charge_A", qA)
    w.result("total_charge_B_mapped", qM)
    w.check("mapped_equality", dm <= 1e-10, "sup |rho_B(mapped) - rho_A| <= 1e-10")
    w.check("independent_equality", di <= 1e-3, "sup |rho_B(independent) - rho_A| <= 1e-3")
    w.check("total_charge", abs(qA - qM) <= 1e-8, "|Q_A - Q_B(mapped)| <= 1e-8")
    if cfg.eta == 0:
        w.check("free_zero", max(np.abs(rA).max(), np.abs(rB).max()) <= 1e-10, "free densities <= 1e-10")

    rows, sup = [], {}
    for N in rc.numerics.convergence_N:
        if N == cfg.N:
            sup[N] = di
        else:
            f = HamiltonianFactory(cfg.replace(N=N))
            a, b = diagonalize(f.A()), diagonalize(f.B())
            sup[N] = float(np.max(np.abs(density_unreg(b, z, Lam).values - density_unreg(a, z, Lam).values)))
        rows.append((N, sup[N]))
    w.table("density_convergence", ["N", "sup_diff_independent"], rows)
    if cfg.N in sup and 2 * cfg.N in sup:
        ratio = sup[cfg.N] / sup[2 * cfg.N]
        w.result("independent_diff_reduction", ratio)
        w.check("independent_convergence", ratio >= 4, f"sup diff(N={cfg.N}) / sup diff(N={2 * cfg.N}) >= 4")
    return mM.warnings


def cmd_anomaly(rc: RunConfig, w: RunWriter) -> list[str]:
    cfg = rc.potential()
    Lam = _lambda(rc)
    fac = HamiltonianFactory(cfg)
    mA, mB = diagonalize(fac.A()), diagonalize(fac.B())
    z = profile_grid(cfg.L, rc.numerics.grid_points)
    eps = rc.epsilons()
    rep = anomaly_difference(cfg, mA, mB, z, eps, fac.field)
    cap = capri_check(cfg, mA, z, eps, mB, Lam, fac.field)
    rel = np.abs(rep.intercept - rep.expected) / max(cfg.eta / np.pi, 1e-300)
    w.table(
        "anomaly_profile",
        ["z", "V", "interior", "plateau_B_minus_A", "V_over_pi", "fit_rms",
         "capri_shift_A", "minus_V_over_pi", "shift_B", "abs_err_over_eta_pi"],
        zip(z, fac.field.V(z), rep.interior, rep.intercept, rep.expected, rep.fit_rms,
            cap.shift_A, cap.expected_A, cap.shift_B, rel),
        note="plateau = linear eps -> 0 fit; shifts against energy-damped sums",
    )
    fam = []
    for i, e in enumerate(eps):
        for j in range(len(z)):
            fam.append((e, z[j], rep.rho_A[i, j], rep.rho_B[i, j], rep.difference[i, j], rep.reconstruction[i, j]))
    w.table("anomaly_family", ["epsilon", "z", "rho_A", "rho_B", "difference", "reconstruction"], fam)

    # short-distance law of the bilinear at the well centre
    kmin = 4.0 / cfg.k_max
    be = np.linspace(kmin, max(kmin, rc.numerics.bilinear_eps_max / cfg.m), 6)
    rows, scaled = [], []
    for e in be:
        raw = gamma5_bilinear(mA, 0.0, e).value
        reg = complex(regularized_bilinear(mA, [0.0], e, cfg.m)[0])
        freeb = complex(free_bilinear_exact(cfg.m, e))
        scaled.append(abs(reg) * e * np.pi / 2)
        rows.append((e, raw.imag, reg.imag, freeb.imag, scaled[-1], abs(reg) / abs(freeb)))
    w.table("bilinear_window",
            ["epsilon", "raw_imag", "regularized_imag", "free_continuum_imag", "abs_times_eps_over_2_by_pi", "well_over_free"],
            rows, note="z = 0; raw sums include the sharp-cutoff oscillation")
    scaled = np.array(scaled)
    ratio_free = np.array([r[-1] for r in rows])
    w.result("plateau_rel_error", rep.plateau_error)
    w.result("reconstruction_rel_error", rep.reconstruction_error)
    w.result("capri_A_inside_rel_error", cap.error_A_inside)
    w.result("capri_A_outside_error_over_eta_pi", cap.error_A_outside)
    w.result("shift_B_over_eta_pi", cap.error_B)
    w.result("bilinear_sign", rep.bilinear_sign)
    w.result("bilinear_eps_spread", float(scaled.max() / scaled.min() - 1))
    w.result("interior_points", int(rep.interior.sum()))
    w.check("plateau", rep.plateau_error <= 0.05, "|plateau - V/pi| <= 5% of |V|/pi at interior points")
    w.check("reconstruction", rep.reconstruction_error <= 0.02, "|diff - recon| <= 2% of |V|/pi")
    w.check("capri_A_inside", cap.error_A_inside <= 0.10, "|shift_A + V/pi| <= 10% of |V|/pi inside")
    w.check("capri_A_outside", cap.error_A_outside <= 0.10, "|shift_A + V/pi| <= 10% of eta/pi outside")
    w.check("shift_B", cap.error_B <= 0.10, "|shift_B| <= 10% of eta/pi")
    w.check("bilinear_constancy", float(scaled.max() / scaled.min() - 1) <= 0.05,
            "|B| eps constant within 5% over the short-distance window")
    w.check("bilinear_well_vs_free", float(np.max(np.abs(ratio_free - 1))) <= 0.05,
            "well / free bilinear at z = 0 within 5%")
    return rep.diagnostics


def cmd_evolve(rc: RunConfig, w: RunWriter) -> list[str]:
    ev = rc.evolution
    cfg = rc.potential(N=ev.N, section="evolution")
    fac = HamiltonianFactory(cfg)
    mA = diagonalize(fac.A())
    pos = np.flatnonzero(mA.energies > 0)
    idx = int(pos[ev.mode_index])
    psi0 = mA.coeffs[:, idx].astype(complex)
    target = chiral_map_modes(mA.select(np.arange(len(mA)) == idx), fac.field).projected[:, 0]

    def schedule(dt, t_f=None):
        ramp = rc.ramp(t_f)
        t_end = None if ev.t_end is None else ev.t_end + (ramp.t_f - rc.evolution.t_f)
        return EvolutionSchedule(cfg, ramp, dt, ev.t_start, t_end)

    sch = schedule(ev.dt)
    rep = verify_gauge_identity(psi0, sch, ev.save_every, fac.field)
    lam = ramp_lambda(sch.ramp, rep.times)[0]
    w.table("trajectory", ["t", "lambda", "norm_direct", "norm_reconstructed", "distance"],
            zip(rep.times, lam, rep.direct.norms, rep.reconstructed.norms, rep.distances))
    warn = []
    if sch.dt_ratio > 0.1:
        warn.append(f"dt * E_max = {sch.dt_ratio:.3f} above 0.1")
    main_ov = mapped_overlap(rep.direct.final, target)
    w.result("energy", mA.energies[idx])
    w.result("dt_times_Emax", sch.dt_ratio)
    w.result("max_distance", rep.max_distance)
    w.result("end_overlap_deficit", 1 - rep.end_overlap)
    w.result("end_phase", rep.end_phase)
    w.result("norm_drift", rep.norm_drift)
    w.result("projection_loss", rep.projection_loss)
    w.result("mapped_overlap_deficit", 1 - main_ov)
    w.check("gauge_identity_distance", rep.max_distance <= 1e-4, "max_t ||phi_direct - phi_reconstructed|| <= 1e-4")
    w.check("norm_drift", rep.norm_drift <= 1e-10, "norm drift <= 1e-10")
    w.check("mapped_overlap", main_ov >= 1 - 1e-4, "|<u_B|psi(t_end)>| >= 1 - 1e-4")

    # order in dt
    finals, overlaps, rows = {}, {}, []
    for fct in ev.order_factors:
        try:
            s = schedule(ev.dt * fct)
        except ConfigError as exc:
            warn.append(f"order run dt={ev.dt * fct:g} skipped: {exc}")
            continue
        r = rep if fct == 1.0 else verify_gauge_identity(psi0, s, ev.save_every, fac.field)
        finals[fct], overlaps[fct] = r.direct.final, r.end_overlap
        rows.append((s.dt, r.max_distance, 1 - r.end_overlap))
    fs = sorted(finals, reverse=True)
    steps = [float(np.linalg.norm(finals[a] - finals[b])) for a, b in zip(fs[:-1], fs[1:])]
    w.table("dt_order", ["dt", "max_distance", "end_overlap_deficit"], rows,
            note="successive end-state differences: " + ",".join(f"{x:.6e}" for x in steps))
    deficit = 1 - rep.end_overlap
    if 1.0 in overlaps and 0.5 in overlaps:
        deficit = 1 - (4 * overlaps[0.5] - overlaps[1.0]) / 3
    w.result("end_overlap_deficit_extrapolated", deficit)
    w.check("end_overlap", deficit <= 1e-6, "end-state overlap deficit (dt-extrapolated) <= 1e-6")
    if len(steps) >= 2:
        ratio = steps[-2] / steps[-1]
        w.result("dt_order_ratio", ratio)
        w.check("dt_order", 3.2 <= ratio <= 4.8, "halving dt shrinks the end-state change by 4 +- 20%")

    # ramp-duration independence
    alt, rows = [], []
    for t_f in ev.t_f_alt:
        s = schedule(ev.dt, t_f)
        r = verify_gauge_identity(psi0, s, max(ev.save_every, 200), fac.field)
        ov = mapped_overlap(r.direct.final, target)
        alt.append(r.direct.final)
        rows.append((t_f, s.t_end, ov, 1 - ov, r.max_distance))
        w.check(f"mapped_overlap_tf_{t_f:g}", ov >= 1 - 1e-4, "|<u_B|psi(t_end)>| >= 1 - 1e-4")
    w.table("ramp_durations", ["t_f", "t_end", "mapped_overlap", "deficit", "max_distance"], rows)
    if len(alt) >= 2:
        mutual = float(abs(np.vdot(alt[0], alt[-1])))
        w.result("ramp_mutual_overlap_deficit", 1 - mutual)
        w.check("ramp_independence", mutual >= 1 - 1e-4, "end states for two t_f agree up to phase, 1e-4")
    return warn


def cmd_freefield(rc: RunConfig, w: RunWriter) -> list[str]:
    n, m = rc.numerics, rc.physics.m
    box = FourierBasis(n.free_L, n.free_N)
    Lam = n.free_Lambda or box.k_max / 4.5
    fm = free_modes(box, m)
    rows, worst_a, worst_b, anti = [], 0.0, 0.0, 0.0
    for e in n.free_epsilons:
        an = free_bilinear_analytic(m, e)
        bx = gamma5_bilinear(fm, 0.0, e, Lam).value
        bx_neg = gamma5_bilinear(fm, 0.0, -e, Lam).value
        anti = max(anti, abs(bx + bx_neg) / abs(bx))
        ra, rb = abs(an.value) * e * np.pi / 2, abs(bx) * e * np.pi / 2
        worst_a, worst_b = max(worst_a, abs(ra - 1)), max(worst_b, abs(rb - 1))
        rows.append((e, an.value.imag, an.abs_p_value.imag, an.closed_form.imag, an.asymptote.imag,
                     bx.imag, ra, rb))
    w.table("bilinear_free",
            ["epsilon", "analytic_imag", "abs_p_variant_imag", "closed_form_imag", "asymptote_imag",
             "box_sum_imag", "analytic_ratio", "box_ratio"],
            rows, note=f"box L={n.free_L}, N={n.free_N}, damping Lambda={Lam:.6g}; ratio = |B| eps pi / 2")
    w.result("analytic_max_rel_dev", worst_a)
    w.result("box_max_rel_dev", worst_b)
    w.result("antisymmetry_residual", anti)
    w.check("analytic_singularity", worst_a <= 0.02, "|B| eps = 2/pi within 2% (momentum integral)")
    w.check("box_singularity", worst_b <= 0.02, "|B| eps = 2/pi within 2% (box mode sum)")
    w.check("antisymmetry", anti <= 1e-10, "B(-eps) = -B(eps)")

    far = free_bilinear_analytic(m, 10.0 / m)
    w.result("massive_suppression_ratio_m_eps_10", abs(far.value) / abs(far.asymptote))

    e = 1.0 / m
    rows = []
    for delta in np.logspace(-1, -6, 6) / e:
        v = damped_exponential_integral(e, delta)
        rows.append((e, delta, v.real, v.imag, abs(v - 1j / e) * e))
    w.table("damped_integral", ["epsilon", "delta", "real", "imag", "rel_err_vs_i_over_eps"], rows)
    w.check("damped_integral", rows[-1][-1] <= 1e-3, "damped integral within 0.1% of -1/(i eps)")

    rows, worst = [], 0.0
    for p in (-5.0, -1.0, -0.1, 0.0, 0.1, 1.0, 5.0):
        for j in (-1, 1):
            E, up, lo = free_spinor(np.array([p]), m, j)
            E, up, lo = float(E[0]), complex(up[0]), complex(lo[0])
            v = np.array([up, lo])
            H = np.array([[m, p], [p, -m]])
            resid = float(np.linalg.norm(H @ v - E * v))
            n2 = (E + m) / (2 * E)
            worst = max(worst, resid, abs(np.vdot(v, v) - 1))
            rows.append((p, j, E, abs(up) ** 2, n2, abs(np.vdot(v, v) - 1), resid))
    w.table("normalization", ["p", "j", "E", "upper_sq", "N_sq_formula", "norm_defect", "eigen_residual"], rows)
    w.check("normalization", worst <= 1e-12, "unit spinors solving the free eigenproblem")
    return []


COMMANDS = {
    "spectrum": cmd_spectrum,
    "density": cmd_density,
    "anomaly": cmd_anomaly,
    "evolve": cmd_evolve,
    "freefield": cmd_freefield,
}


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        warnings.warn(f"{THREADS_ENV} set but threadpoolctl is not installed", RuntimeWarning)
        return contextlib.nullcontext()
    return threadpool_limits(int(raw))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirac1d", description="1+1D Dirac vacuum and chiral-map experiments.")
    parser.add_argument("--version", action="version", version=f"dirac1d {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", help="INI file with physics/numerics/evolution/flags/output sections")
        p.add_argument("--out", help="output directory (default: <output.directory>/<command>)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value, e.g. numerics.N=128 (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = load_config(args.config, args.override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else Path(rc.output.directory) / args.command
    w = RunWriter(out, args.command, rc.flat())
    try:
        with _thread_limit():
            notes = COMMANDS[args.command](rc, w)
    except (ConfigError, WindowError, UnsupportedRegimeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GapClosedError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    w.manifest(notes)
    for k, v in w.checks.items():
        print(f"{'PASS' if v else 'FAIL'}  {k}  ({w.tolerances[k]})")
    print(f"wrote {len(w.files)} tables and manifest to {out}")
    return 0 if w.passed else 1


if __name__ == "__main__":
    sys.exit(main())
