"""Acceptance suite: one test per primary criterion, one PASS line each.

Run with  pytest tests/test_acceptance.py -v -s  to see the per-criterion
report.  Reference L1 values and their tolerances follow the published
diagnostics table for the trigonometric pair at 256x256, CFL 0.8.
"""

import math
import time

import numpy as np
import pytest

from phasebridge.grid import PhaseGrid
from phasebridge.densities import (
    TRANSPORT_WINDOW,
    TorusTrigF,
    TorusTrigG,
    check_compatibility,
    preset_pair,
)
from phasebridge.elliptic import (
    CompatibilityError,
    closed_form_gaussian_dU,
    closed_form_torus_dU,
    solve_profile,
)
from phasebridge.field import ZeroField, build_field
from phasebridge.liouville import SolverConfig, simulate
from phasebridge.diagnostics import convergence_study, l1_error, run_table1
from phasebridge.cli import main as cli_main

REFERENCE_L1 = {0.0: 0.0, 0.25: 5.0899e-4, 0.5: 1.1372e-3, 0.75: 2.3317e-3, 1.0: 5.4669e-3}


def _criterion(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {name} ({detail})")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def table1():
    start = time.monotonic()
    records = run_table1()  # 256x256, CFL 0.8, closed-form field
    return records, time.monotonic() - start


def test_table1_reproduction(table1):
    records, elapsed = table1
    ok = elapsed < 120.0
    details = [f"runtime {elapsed:.1f}s"]
    for r in records:
        ok = ok and abs(r.mass - 1.0) <= 1e-9
        ref = REFERENCE_L1[r.t]
        if r.t == 0.0:
            ok = ok and r.l1_error <= 1e-14
        else:
            ok = ok and ref / 2.0 <= r.l1_error <= 2.0 * ref
        if r.t == 1.0:
            ok = ok and 2.5e-3 <= r.l1_error <= 1.1e-2
        details.append(f"t={r.t:g}: mass-1={r.mass - 1.0:+.2e} l1={r.l1_error:.4e}")
    _criterion("Table-1 reproduction", ok, "; ".join(details))


def test_structural_mass_conservation(table1):
    records, _ = table1
    m0 = records[0].mass
    drift = max(abs(r.mass - m0) / m0 for r in records)
    _criterion("Structural conservation", drift <= 1e-12,
               f"max relative mass drift {drift:.3e} <= 1e-12")


def test_elliptic_oracle_equivalence():
    pair = preset_pair("torus")
    grid = PhaseGrid(256, 256)
    errs = {}
    for nv in (256, 512):
        worst = 0.0
        for t in (0.0, 0.5, 1.0):
            for x in grid.x_centers:
                prof = solve_profile(pair.f, pair.g, float(x), t, nv)
                exact = closed_form_torus_dU(float(x), prof.v, t, 0.3, 0.5)
                worst = max(worst, float(np.abs(prof.dU - exact).max()))
        errs[nv] = worst
    ratio = errs[256] / errs[512]
    ok = errs[256] <= 5e-3 and 3.5 <= ratio <= 4.5
    _criterion("Elliptic oracle equivalence", ok,
               f"Linf(nv=256)={errs[256]:.3e} <= 5e-3, doubling ratio {ratio:.2f} in [3.5, 4.5]")


def test_necessity_gate():
    f, g = TorusTrigF(0.3), TorusTrigG(0.2, 0.5)
    grid = PhaseGrid(1024, 256)
    expected = 0.1 / (2.0 * math.pi)
    try:
        build_field(f, g, method="closed-form", grid=grid)
    except CompatibilityError as err:
        reported = err.report.max_residual
        ok = abs(reported - expected) <= 1e-6
        _criterion("Necessity gate", ok,
                   f"refused with residual {reported:.8e}, analytic {expected:.8e}")
        return
    _criterion("Necessity gate", False, "incompatible pair was not refused")


def test_example1_triviality():
    pair = preset_pair("gaussian-shift")
    grid = PhaseGrid(256, 256)
    field = build_field(pair.f, pair.g, method="closed-form", grid=grid)
    x = np.linspace(0, 2 * math.pi, 257)[:, None]
    v = np.linspace(-math.pi, math.pi, 257)[None, :]
    sup = max(float(np.abs(field.eval(x, v, t)).max()) for t in (0.0, 0.5, 1.0))
    snaps = simulate(pair.f, field, grid, SolverConfig())
    err = l1_error(snaps[-1].rho, pair.f, pair.g, 1.0)
    ok = isinstance(field, ZeroField) and sup <= 1e-12 and err <= 5e-3
    _criterion("Example-1 triviality", ok,
               f"field sup {sup:.1e} <= 1e-12, free-transport L1(t=1) {err:.3e} <= 5e-3")


def test_example2_oracle():
    pair = preset_pair("gaussian-transport")
    f, g = pair.f, pair.g
    lo = TRANSPORT_WINDOW[0]
    worst = 0.0
    for x in (-1.5, -0.75, 0.0, 0.75, 1.5):
        for v in (-1.0, -0.25, 0.5, 1.25, 2.0):
            n = round((v - lo) / 1e-4)
            h = (v - lo) / n
            s = lo + (np.arange(n) + 0.5) * h
            F = float((f.eval(x, s) - g.eval(x + s, s)).sum()) * h
            rho = 0.5 * f.eval(x, v) + 0.5 * g.eval(x + v, v)
            brute = F / rho
            worst = max(worst, abs(closed_form_gaussian_dU(x, v, 0.5, f, g) - brute))
    x_probes = np.linspace(lo, -lo, 257)
    report = check_compatibility(f, g, x_points=x_probes, nv=2048,
                                 v_window=TRANSPORT_WINDOW, use_analytic=False)
    ok = worst <= 1e-8 and report.max_residual <= 1e-10
    _criterion("Example-2 oracle", ok,
               f"max |closed form - brute force| {worst:.2e} <= 1e-8 over 25 probes, "
               f"compat residual {report.max_residual:.2e} <= 1e-10")


def test_convergence_property():
    rows = convergence_study(sizes=(64, 128, 256))
    errs = [r.l1_final for r in rows]
    orders = [r.observed_order for r in rows[1:]]
    ok = errs[0] > errs[1] > errs[2] and all(o >= 1.0 for o in orders)
    _criterion("Convergence property", ok,
               "L1(t=1) " + " > ".join(f"{e:.3e}" for e in errs)
               + ", orders " + ", ".join(f"{o:.2f}" for o in orders) + " >= 1.0")


def test_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("preset = torus\nnx = 64\nnv = 64\nfigures = false\n")
    assert cli_main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "r1")]) == 0
    assert cli_main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "r2")]) == 0
    b1 = (tmp_path / "r1" / "diagnostics.csv").read_bytes()
    b2 = (tmp_path / "r2" / "diagnostics.csv").read_bytes()
    _criterion("Determinism", b1 == b2,
               f"diagnostics.csv bit-identical across reruns ({len(b1)} bytes)")
