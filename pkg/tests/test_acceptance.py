"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import functools
import math

import numpy as np
import pytest

from subplanck import cli
from subplanck import closedform as cf
from subplanck import fock
from subplanck.analysis import GridSpec, central_feature, eval_grid, zero_profile
from subplanck.states import OperatorRecipe, deform, make_coherent, make_compass

S2 = math.sqrt(2.0)
A = 1 / S2
C0S = (1.0, 5.0, 8.0)
RQ = [(0, 0), (4, 2), (4, 4), (12, 12), (24, 12), (24, 20), (1, 1), (5, 5), (9, 9), (16, 10), (22, 10), (22, 18)]
GRID = GridSpec.square(-4, 4, 201)


def kit(mode, r, q, c0=1.0):
    return deform(make_compass(c0), OperatorRecipe(mode, r, q))


def coh(mode, r, q, alpha=A):
    return deform(make_coherent(alpha), OperatorRecipe(mode, r, q))


def all_states():
    for c0 in C0S:
        for mode in ("sa", "as"):
            for r, q in RQ:
                yield f"compass c0={c0:g} {mode}({r},{q})", kit(mode, r, q, c0)
    for mode in ("sa", "as"):
        for r, q in RQ:
            yield f"coherent {mode}({r},{q})", coh(mode, r, q)


@functools.lru_cache(maxsize=None)
def feature(mode, r, q):
    s = make_compass(1.0) if mode is None else kit(mode, r, q)
    return central_feature(eval_grid(s, "wigner", GRID))


@functools.lru_cache(maxsize=None)
def first_zero(mode, r, q):
    return zero_profile(kit(mode, r, q), n_angles=32, r_max=4.0).max_radius


def test_criterion_01_coherent_sensitivity(acceptance):
    rng = np.random.default_rng(1)
    rad = np.concatenate([[0.0, 3.0], rng.uniform(0, 3, 200)])
    d = rad * np.exp(1j * rng.uniform(0, 2 * np.pi, rad.size))
    errs = []
    for a in (0.0, A, 1.3 - 0.4j):
        s = make_coherent(a)
        errs.append(np.max(np.abs(cf.sensitivity(s, d) - np.exp(-np.abs(d) ** 2))))
    closed = max(errs)
    sub = d[::10]
    oracle = float(np.max(np.abs(fock.sensitivity_fock(make_coherent(1.3 - 0.4j), sub) - np.exp(-np.abs(sub) ** 2))))
    ok = closed <= 1e-12 and oracle <= 1e-10
    acceptance(1, ok, f"closed-form err {closed:.1e} (tol 1e-12), oracle err {oracle:.1e} (tol 1e-10)")
    assert ok


def test_criterion_02_oracle_equivalence(acceptance):
    spec = GridSpec.square(-4, 4, 41)
    pts = (spec.x[None, :] + 1j * spec.p[:, None]) / S2
    worst, where = 0.0, ""
    for label, s in all_states():
        w = cf.wigner(s, pts)
        need = int(math.ceil(4 * np.max(np.abs(pts)) ** 2)) + 1
        v = fock.state_to_fock(s, max(fock.auto_cutoff(s), need))
        err = float(np.max(np.abs(w - fock.wigner_fock(v, pts))))
        if err > worst:
            worst, where = err, label
    ok = worst <= 1e-8
    acceptance(2, ok, f"max |W_closed - W_oracle| = {worst:.1e} at {where} (tol 1e-8)")
    assert ok


def test_criterion_03_normalization(acceptance):
    worst, where = 0.0, ""
    for label, s in all_states():
        ref = fock.state_to_fock(s).norm2
        err = abs(s.norm_const - ref) / ref
        if err > worst:
            worst, where = err, label
    ok = worst <= 1e-8
    acceptance(3, ok, f"max relative norm error {worst:.1e} at {where} (tol 1e-8)")
    assert ok


def test_criterion_04_a4_eigenstate(acceptance):
    worst = 0.0
    for r in (12, 24):
        for q in (12, 16):
            s1, s2 = kit("as", r, q), kit("as", r, q + 4)
            n = max(fock.auto_cutoff(s1), fock.auto_cutoff(s2))
            u, v = fock.state_to_fock(s1, n), fock.state_to_fock(s2, n)
            f = abs(fock.inner(u, v)) ** 2 / (u.norm2 * v.norm2)
            worst = max(worst, abs(f - 1))
    ok = worst <= 1e-10
    acceptance(4, ok, f"max |F - 1| = {worst:.1e} (tol 1e-10)")
    assert ok


def test_criterion_05_pnd(acceptance):
    n = np.arange(400)
    sums = []
    for mode, fn in (("sa", cf.pnd_sa_coherent), ("as", cf.pnd_as_coherent)):
        for r, q in RQ:
            sums.append(abs(fn(A, r, q, n).sum() - 1))
    sum_err = max(sums)
    inv = max(
        float(np.max(np.abs(cf.pnd_as_coherent(A, r, q, n) - cf.pnd_as_coherent(A, r, 0, n))))
        for r in (0, 1, 4, 12, 24)
        for q in range(1, 13)
    )

    def mean(r, q):
        return float(np.sum(n * cf.pnd_sa_coherent(A, r, q, n)))

    up_r = all(np.all(np.diff([mean(r, q) for r in range(0, 25)]) > 0) for q in (0, 2, 4, 12))
    # at r = 0 the coherent state is an a-eigenstate, so q has no effect; the trend is for r >= 1
    down_q = all(np.all(np.diff([mean(r, q) for q in range(0, 21)]) < 0) for r in (1, 4, 12, 24))
    ok = sum_err <= 1e-10 and inv <= 1e-10 and up_r and down_q
    acceptance(5, ok, f"sum err {sum_err:.1e}, q-invariance {inv:.1e}, mean up in r {up_r}, down in q {down_q}")
    assert ok


def test_criterion_06_sub_shot_noise(acceptance):
    r5 = zero_profile(make_compass(5.0), n_angles=64, r_max=2.0).max_radius
    r8 = zero_profile(make_compass(8.0), n_angles=64, r_max=2.0).max_radius
    ok = r5 is not None and r8 is not None and r5 < 1 and r8 < 1 and r8 < r5
    acceptance(6, ok, f"max first-zero radius c0=5: {r5}, c0=8: {r8}")
    assert ok


def test_criterion_07_deformed_sensitivity(acceptance):
    sa12, sa2412, sa2420 = first_zero("sa", 12, 12), first_zero("sa", 24, 12), first_zero("sa", 24, 20)
    as2412, as2420 = first_zero("as", 24, 12), first_zero("as", 24, 20)
    ok = sa2412 < sa12 and sa2420 > sa2412 and abs(as2412 - as2420) <= 2e-3
    acceptance(
        7,
        ok,
        f"SA(24,12) {sa2412:.4f} < SA(12,12) {sa12:.4f}; SA(24,20) {sa2420:.4f} > SA(24,12); "
        f"|AS(24,12) - AS(24,20)| = {abs(as2412 - as2420):.1e}",
    )
    assert ok


def test_criterion_08_feature_size(acceptance):
    a = {k: feature(*k) for k in [("sa", 12, 12), ("sa", 24, 12), ("sa", 24, 20), ("as", 12, 12), ("as", 24, 12), ("as", 22, 10), ("as", 22, 18)]}
    base = feature(None, 0, 0)
    shrink = a[("sa", 24, 12)].area < a[("sa", 12, 12)].area and a[("as", 24, 12)].area < a[("as", 12, 12)].area
    grow = a[("sa", 24, 20)].area > a[("sa", 24, 12)].area
    same = abs(a[("as", 22, 18)].area / a[("as", 22, 10)].area - 1) <= 1e-2
    worst = max(rep.planck_ratio for rep in a.values())
    ok = shrink and grow and same and worst < 0.5 and base.planck_ratio >= 0.8
    acceptance(
        8,
        ok,
        f"shrink {shrink}, SA(24,20)>SA(24,12) {grow}, AS q-invariant {same}, "
        f"max deformed planck_ratio {worst:.3f}, kitten planck_ratio {base.planck_ratio:.3f}",
    )
    assert ok


def test_criterion_09_isotropy(acceptance):
    i1, i5, i9 = (feature("as", k, k).isotropy for k in (1, 5, 9))
    isa = feature("sa", 24, 12).isotropy
    ok = i1 <= i5 <= i9 and i9 > isa
    acceptance(9, ok, f"AS r=q=1,5,9: {i1:.4f}, {i5:.4f}, {i9:.4f}; SA(24,12) {isa:.4f}")
    assert ok


def test_criterion_10_fidelity(acceptance):
    c0 = np.linspace(3, 6, 31)
    curves = {m: np.array([cf.fidelity_deformed_vs_base(kit(m, 4, 4, c)) for c in c0]) for m in ("sa", "as")}
    rising = all(np.all(np.diff(v) > 0) for v in curves.values())
    at6 = {m: float(v[-1]) for m, v in curves.items()}
    high = all(v > 0.99 for v in at6.values())
    alphas = np.linspace(0.1, 3, 30)
    coincide = max(
        abs(cf.fidelity_deformed_vs_base(coh("as", 4, 0, a)) - cf.fidelity_deformed_vs_base(coh("as", 4, 4, a))) for a in alphas
    )
    ok = rising and high and coincide <= 1e-10
    acceptance(
        10,
        ok,
        f"monotone on [3,6] {rising}; F at c0=6 SA {at6['sa']:.4f}, AS {at6['as']:.4f} (need > 0.99); "
        f"coherent AS curves differ by {coincide:.1e}",
    )
    assert ok


def test_criterion_11_symmetry(acceptance):
    rng = np.random.default_rng(11)
    b = (rng.uniform(-3, 3, 40) + 1j * rng.uniform(-3, 3, 40)) / S2
    resid = rot_w = rot_s = par_s = 0.0
    for label, s in all_states():
        resid = max(resid, float(np.max(cf.wigner_residue(s, b))))
        if label.startswith("compass"):
            rot_w = max(rot_w, float(np.max(np.abs(cf.wigner(s, 1j * b) - cf.wigner(s, b)))))
            rot_s = max(rot_s, float(np.max(np.abs(cf.sensitivity(s, 1j * b) - cf.sensitivity(s, b)))))
        par_s = max(par_s, float(np.max(np.abs(cf.sensitivity(s, -b) - cf.sensitivity(s, b)))))
    ok = resid < 1e-10 and rot_w <= 1e-9 and rot_s <= 1e-9 and par_s <= 1e-10
    acceptance(11, ok, f"residue {resid:.1e}, W rotation {rot_w:.1e}, S rotation {rot_s:.1e}, S parity {par_s:.1e}")
    assert ok


def test_criterion_12_calibration(acceptance):
    exact = math.pi * math.log(100)
    errs = []
    for n in (201, 401):
        rep = central_feature(eval_grid(make_coherent(0.0), "wigner", GridSpec.square(-4, 4, n)))
        errs.append(abs(rep.area - exact) / exact)
    ok = errs[0] <= 1e-2 and errs[0] >= 3 * errs[1]
    acceptance(12, ok, f"relative area error {errs[0]:.1e} at 201, {errs[1]:.1e} at 401 (ratio {errs[0] / errs[1]:.1f})")
    assert ok


def test_criterion_13_determinism(acceptance, tmp_path):
    jobs = [
        ["wigner", "--family", "compass", "--c0", "1", "--mode", "sa", "--r", "12", "--q", "12", "--grid", "-4:4:-4:4:81"],
        ["sensitivity", "--family", "compass", "--c0", "5", "--grid", "-2:2:-2:2:61"],
        ["features", "--family", "compass", "--c0", "1", "--mode", "as", "--r", "9", "--q", "9", "--grid", "-4:4:-4:4:101"],
        ["pnd", "--family", "coherent", "--alpha", "0.7071067811865476,0", "--mode", "sa", "--r", "4", "--q", "2"],
    ]
    same = True
    count = 0
    for k, job in enumerate(jobs):
        outs = []
        for rep, threads in enumerate(("1", "4", "1")):
            d = tmp_path / f"{k}-{rep}"
            assert cli.main([*job, "--csv", "--json", *(["--pgrd"] if job[0] != "pnd" else []), "--out", str(d), "--threads", threads]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        same &= outs[0] == outs[1] == outs[2]
        count += len(outs[0])
    acceptance(13, same, f"{len(jobs)} jobs x 3 runs, {count} files byte-identical: {same}")
    assert same
