"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary block at
the end of the session lists every criterion line.
"""
import time

import numpy as np
import pytest

from hdgpoisson import hdg
from hdgpoisson.analysis import convergence_study, fitted_slope, linf_error, manufactured, run_level
from hdgpoisson.mesh import build_ladder_mesh, build_unit_cube_simplex, build_unit_square_simplex
from hdgpoisson.projections import element_boundary_l2_error, element_l2_error

U_BAND = (1.75, 2.35)  # offsets from k for the u_inf rate
Q_BAND = (0.75, 1.35)  # offsets from k for the q_inf rate


def in_band(rate, k, band):
    return k + band[0] <= rate <= k + band[1]


@pytest.fixture(scope="module")
def studies():
    """Every convergence run the criteria look at, keyed by (dim, family, k)."""
    out, seconds = {}, {}
    for family, levels in (("simplex", [3, 4, 5, 6]), ("ladder", [4, 5, 6])):
        for k in (0, 1, 2):
            t0 = time.perf_counter()
            gamma = 0.5 if family == "simplex" else None
            out[2, family, k] = convergence_study(manufactured("sine2d"), family, 2, k, levels, gamma=gamma)
            seconds[2, family, k] = time.perf_counter() - t0
    for k in (0, 1, 2):
        t0 = time.perf_counter()
        rep = convergence_study(manufactured("poly3d"), "simplex", 3, k, [1, 2, 3])
        seconds[3, "simplex<=3", k] = time.perf_counter() - t0
        # m = 4 extends every degree; the PCG path keeps memory low
        errs, info, _ = run_level(manufactured("poly3d"), "simplex", 3, k, 4, solver="pcg")
        rep.h.append(2.0**-4)
        for key in rep.errors:
            rep.errors[key].append(errs[key])
        rep.meta["levels"].append(4)
        rep.meta["levels_info"].append(info)
        out[3, "simplex", k] = rep
        seconds[3, "simplex", k] = time.perf_counter() - t0
    return out, seconds


def test_criterion_1_bilinear_identities(criterion):
    mesh = build_unit_square_simplex(2)
    rng = np.random.default_rng(2024)
    worst_sym = worst_energy = 0.0
    t0 = time.perf_counter()
    for k in (0, 1, 2):
        for _ in range(100):
            a, b = hdg.random_fields(mesh, k, rng), hdg.random_fields(mesh, k, rng)
            scale = hdg.energy_norm_sq(a) + hdg.energy_norm_sq(b)
            sym = abs(hdg.apply_bilinear_B(a, b) - hdg.apply_bilinear_B(b, a)) / scale
            energy = abs(hdg.apply_bilinear_B(a, hdg.flip(a)) - hdg.energy_norm_sq(a)) / scale
            worst_sym, worst_energy = max(worst_sym, sym), max(worst_energy, energy)
    elapsed = time.perf_counter() - t0
    ok = worst_sym <= 1e-12 and worst_energy <= 1e-12 and elapsed < 1.0
    assert criterion(1, ok, f"symmetry {worst_sym:.1e}, energy identity {worst_energy:.1e} "
                            f"(tol 1e-12 x scale), 300 bundles in {elapsed:.2f} s (< 1 s)")


def test_criterion_2_monolithic_equivalence(criterion):
    meshes = {"square n=2": build_unit_square_simplex(2), "ladder n=2": build_ladder_mesh(2),
              "cube n=1": build_unit_cube_simplex(1)}
    worst = 0.0
    t0 = time.perf_counter()
    for name, mesh in meshes.items():
        assert mesh.n_elements <= 8

        def f(x):
            return np.exp(x[:, 0] - x[:, -1]) + np.sin(2 * x[:, 1])

        for k in (0, 1, 2):
            A, b, tr = hdg.assemble_monolithic(mesh, k, f)
            x = np.linalg.solve(A, b)
            fields = hdg.solve_poisson(mesh, k, f, solver="direct")
            lam = fields.uhat[mesh.interior_faces].ravel()
            worst = max(worst, np.linalg.norm(lam - x[tr]) / np.linalg.norm(x[tr]))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 5.0
    assert criterion(2, ok, f"condensed vs monolithic trace mismatch {worst:.1e} (tol 1e-9) "
                            f"on {len(meshes)} meshes x k=0..2 in {elapsed:.2f} s (< 5 s)")


def test_criterion_3_polynomial_exactness(criterion):
    t0 = time.perf_counter()
    problem = manufactured("poly2d-quartic")
    fields = hdg.solve_poisson(build_unit_square_simplex(4), 3, problem.f)
    e_q, e_u = linf_error(fields, problem)
    elapsed = time.perf_counter() - t0
    ok = e_q <= 1e-9 and e_u <= 1e-9 and elapsed < 5.0
    assert criterion(3, ok, f"k=3, 4x4 simplex: e_u {e_u:.1e}, e_q {e_q:.1e} (tol 1e-9) in {elapsed:.2f} s (< 5 s)")


def _rate_lines(studies, dim, family):
    reports, seconds = studies
    lines, ok = [], True
    for k in (0, 1, 2):
        rep = reports[dim, family, k]
        ru, rq = rep.final_rate("u_inf"), rep.final_rate("q_inf")
        good = in_band(ru, k, U_BAND) and in_band(rq, k, Q_BAND)
        ok &= good
        lines.append(f"k={k}: u {ru:.2f} in [{k + U_BAND[0]:.2f},{k + U_BAND[1]:.2f}], "
                     f"q {rq:.2f} in [{k + Q_BAND[0]:.2f},{k + Q_BAND[1]:.2f}]")
    return ok, lines


def test_criterion_4_rates_2d(studies, criterion):
    _, seconds = studies
    ok = True
    parts = []
    for family in ("simplex", "ladder"):
        good, lines = _rate_lines(studies, 2, family)
        ok &= good
        parts.append(f"{family}: " + "; ".join(lines))
    elapsed = sum(seconds[2, f, k] for f in ("simplex", "ladder") for k in (0, 1, 2))
    ok &= elapsed < 120
    assert criterion(4, ok, " | ".join(parts) + f" | {elapsed:.1f} s (< 120 s)")


def test_criterion_5_rates_3d(studies, criterion):
    reports, seconds = studies
    ok, lines = _rate_lines(studies, 3, "simplex")
    coarse = sum(seconds[3, "simplex<=3", k] for k in (0, 1, 2))
    total = sum(seconds[3, "simplex", k] for k in (0, 1, 2))
    ok &= coarse < 600
    # the m = 2 -> 3 pair is still preasymptotic for q; reported, not gated
    early = ", ".join(
        f"k={k} u {reports[3, 'simplex', k].rates('u_inf')[2]:.2f} q {reports[3, 'simplex', k].rates('q_inf')[2]:.2f}"
        for k in (0, 1, 2)
    )
    assert criterion(5, ok, "finest pair m=3->4: " + "; ".join(lines)
                     + f" | m=2->3 (not gated): {early} | m<=3 {coarse:.1f} s (< 600 s), with m=4 {total:.1f} s")


def test_criterion_6_interface_rates(studies, criterion):
    reports, seconds = studies
    ok, lines = True, []
    for k in (0, 1):
        rep = reports[2, "simplex", k]
        ru, rq = rep.final_rate("u_gamma"), rep.final_rate("q_gamma")
        good = abs(ru - (k + 2)) <= 0.3 and abs(rq - (k + 1)) <= 0.3
        ok &= good
        lines.append(f"k={k}: u {ru:.2f} (target {k + 2}+-0.3), q {rq:.2f} (target {k + 1}+-0.3)")
    elapsed = seconds[2, "simplex", 0] + seconds[2, "simplex", 1]
    ok &= elapsed < 60
    assert criterion(6, ok, "Gamma = {x = 1/2}: " + "; ".join(lines) + f" | {elapsed:.1f} s (< 60 s)")


def test_criterion_7_projection_rates(criterion):
    def f(x):
        return np.sin(2 * x[:, 0] + x[:, 1]) * np.exp(x[:, 1])

    t0 = time.perf_counter()
    ok, lines = True, []
    families = {
        "simplex": [build_unit_square_simplex(n) for n in (4, 8, 16, 32)],
        "ladder": [build_ladder_mesh(n) for n in (4, 8, 16, 32)],
    }
    for family, meshes in families.items():
        h = [m.h_max for m in meshes]
        for ell in range(4):
            s_in = fitted_slope(h, [element_l2_error(f, m, ell) for m in meshes])
            s_bd = fitted_slope(h, [element_boundary_l2_error(f, m, ell) for m in meshes])
            good = abs(s_in - (ell + 1)) <= 0.15 and abs(s_bd - (ell + 0.5)) <= 0.15
            ok &= good
            lines.append(f"{family} l={ell}: {s_in:.2f}/{s_bd:.2f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30
    assert criterion(7, ok, "interior/skeleton slopes vs l+1 and l+1/2 (+-0.15), 3 refinements: "
                     + "; ".join(lines) + f" | {elapsed:.1f} s (< 30 s)")


def test_criterion_8_conservation(studies, criterion):
    reports, _ = studies
    worst, runs = 0.0, 0
    for rep in reports.values():
        for info in rep.meta["levels_info"]:
            worst = max(worst, info["conservation"] / info["q_h_inf"])
            runs += 1
    ok = worst <= 1e-9
    assert criterion(8, ok, f"max interior-face flux residual / ||q_h||_inf = {worst:.1e} (tol 1e-9) over {runs} runs")
