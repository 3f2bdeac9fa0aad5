"""Acceptance suite: one test per criterion, each printing a single verdict line.

Criteria 6 to 9 run the shipped presets at full size and take several
minutes in total.
"""

from __future__ import annotations

import itertools
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import omega_ab
from vortex.experiments.config import build_config
from vortex.experiments.drivers import run_experiment
from vortex.functionals import (FunctionalTriple, MomentFunctional, delta_functional, random_rational,
                                random_table_functional, random_triple)
from vortex.matrices import StabilizerHaarSampler, sample_haar, unitarity_residual
from vortex.ncpart import free_moment_oracle
from vortex.products import ProductContext, composite, cyclic_cfree_eval, free_product_eval
from vortex.specializations import InfinitesimalOracle, cyclic_boolean_omega, cyclic_monotone_omega
from vortex.words import Polynomial, Word, X, Y, Z


def words_upto(n, letters):
    for k in range(1, n + 1):
        for tup in itertools.product(letters, repeat=k):
            yield Word(tup)


def _checks(report) -> str:
    return "; ".join(f"{'ok' if c.passed else 'FAIL'} {c.name} ({c.detail})" for c in report.checks)


# ------------------------------------------------------------ symbolic


def test_criterion_01_omega_ab_formula(criterion):
    rng = random.Random(2024)
    a, b, ab = Word((X(0),)), Word((Y(0),)), Word((X(0), Y(0)))
    start = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        unit = random_rational(rng)
        data = {}
        for f, letter in ((0, a), (1, b)):
            psi, phi, om = (random_rational(rng) for _ in range(3))
            data[f] = FunctionalTriple(
                _one_letter(f, letter, psi),
                _one_letter(f, letter, phi),
                _one_letter(f, letter, om, unit=unit),
            )
        got = cyclic_cfree_eval(ProductContext(data), ab)
        want = omega_ab(data[0].psi(a), data[0].phi(a), data[0].omega(a),
                        data[1].psi(b), data[1].phi(b), data[1].omega(b), unit)
        mismatches += got != want
    elapsed = time.perf_counter() - start
    criterion(1, "omega(ab) closed formula", mismatches == 0 and elapsed < 1.0,
              f"100 random rational triple pairs, {mismatches} mismatches, {elapsed:.3f} s (limit 1 s)")


def _one_letter(family, letter, value, unit=None):
    """Functional known only on the single letter (enough for omega(ab))."""
    if unit is None:
        return MomentFunctional(family, table={letter: value})
    return MomentFunctional(family, table={letter: value}, unital=False, tracial=True, unit=unit)


def test_criterion_02_kreweras_oracle(criterion):
    start = time.perf_counter()
    checked = mismatches = 0
    for seed in (1, 2):
        rng = random.Random(seed)
        fA = random_table_functional(0, rng, max_len=8)
        fB = random_table_functional(1, rng, max_len=8)
        ctx = ProductContext({0: fA, 1: fB})
        for w in words_upto(8, (X(0), Y(0))):
            checked += 1
            mismatches += free_product_eval(ctx, w) != free_moment_oracle(fA, fB, w)
    elapsed = time.perf_counter() - start
    criterion(2, "free product vs noncrossing/Kreweras oracle", mismatches == 0 and elapsed < 30,
              f"{checked} words of length <= 8, {mismatches} mismatches, {elapsed:.1f} s (limit 30 s)")


def _weighted(trip, weights):
    data = {}
    for f, t in trip.items():
        w = delta_functional(f) if weights[f] == "delta" else t.phi
        data[f] = {"psi": w, "phi": t.phi, "omega": t.omega}
    return ProductContext(data)


def _centered_cyclic_product(trip, rng, n):
    p = Polynomial.constant(1)
    for i in range(n):
        f = i % 2
        g = X(0) if f == 0 else Y(0)
        q = Polynomial.from_word((g,) * rng.randint(1, 3)) + rng.randint(-2, 2) * Polynomial.from_word((g,))
        p = p * (q - Polynomial.constant(trip[f].phi(q)))
    return p


def test_criterion_03_specialization_ladder(criterion):
    words = list(words_upto(6, (X(0), Y(0))))
    bad = {"cyclic-Boolean": 0, "cyclic-monotone": 0, "infinitesimal": 0, "equivalence": 0}
    for seed in range(3):
        rng = random.Random(100 + seed)
        unit = random_rational(rng)
        trip = {f: random_triple(f, rng, unit=unit, max_len=6) for f in (0, 1)}
        boolean = _weighted(trip, {0: "delta", 1: "delta"})
        monotone = _weighted(trip, {0: "delta", 1: "phi"})
        for w in words:
            bad["cyclic-Boolean"] += cyclic_cfree_eval(boolean, w) != cyclic_boolean_omega(trip, w)
            bad["cyclic-monotone"] += cyclic_cfree_eval(monotone, w) != cyclic_monotone_omega(trip[0], trip[1], w)
        tracial = {f: random_triple(f, rng, unit=unit, max_len=9, tracial_states=True) for f in (0, 1)}
        inf_ctx = _weighted(tracial, {0: "phi", 1: "phi"})
        oracle = InfinitesimalOracle(tracial)
        for w in words:
            bad["infinitesimal"] += cyclic_cfree_eval(inf_ctx, w) != oracle(w)
        # three-way equivalence: on cyclically alternating phi-centered products the
        # free phi, the cyclic omega and the infinitesimal omega all vanish
        for n in (2, 4, 6):
            p = _centered_cyclic_product(tracial, rng, n)
            vals = (free_product_eval(inf_ctx, p), cyclic_cfree_eval(inf_ctx, p),
                    sum(c * oracle(w) for w, c in p.items()))
            bad["equivalence"] += any(v != 0 for v in vals)
    detail = ", ".join(f"{k} {v} mismatches" for k, v in bad.items())
    criterion(3, "specialization ladder", not any(bad.values()), f"words <= 6, 3 seeds: {detail}")


def test_criterion_04_associativity(criterion):
    rng = random.Random(404)
    unit = random_rational(rng)
    trip = {f: random_triple(f, rng, unit=unit, max_len=6, tracial_states=True) for f in (0, 1, 2)}
    left = ProductContext({(0, 1): composite(ProductContext({0: trip[0], 1: trip[1]})), 2: trip[2]})
    right = ProductContext({0: trip[0], (1, 2): composite(ProductContext({1: trip[1], 2: trip[2]}))})
    checked = bad = 0
    for w in words_upto(6, (X(0), Y(0), Z(0))):
        checked += 1
        bad += cyclic_cfree_eval(left, w) != cyclic_cfree_eval(right, w)
    criterion(4, "cyclic c-free associativity", bad == 0,
              f"(1,2),3 vs 1,(2,3) on {checked} words of length <= 6, {bad} mismatches")


# ------------------------------------------------------------- sampler


def test_criterion_05_sampler(criterion):
    rng = np.random.default_rng(5)
    worst_u = worst_s = 0.0
    for N in (64, 256, 1024):
        v = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        v /= np.linalg.norm(v)
        U = StabilizerHaarSampler(N, v, rng).sample()
        worst_u = max(worst_u, unitarity_residual(U))
        worst_s = max(worst_s, float(np.linalg.norm(U @ v - v)))
    N, T = 8, 10_000
    sq = np.array([abs(sample_haar(N, rng)[2, 5]) ** 2 for _ in range(T)])
    z = abs(sq.mean() - 1 / N) / (sq.std(ddof=1) / np.sqrt(T))
    ok = worst_u < 1e-10 and worst_s < 1e-10 and z <= 3
    criterion(5, "sampler correctness", ok,
              f"max unitarity residual {worst_u:.1e}, max stabilizer residual {worst_s:.1e} at N in "
              f"{{64, 256, 1024}}; E|U_ij|^2 = {sq.mean():.5f} vs 1/8, z = {z:.2f} ({T} trials)")


# ---------------------------------------------------------- Monte Carlo


@pytest.mark.slow
def test_criterion_06_vortex_cfreeness(criterion):
    cfg = build_config({"preset": "cfree-basic"})
    assert cfg.dims == [32, 64, 128, 256] and cfg.trials >= 2000
    report = run_experiment(cfg, threads=4)
    criterion(6, "vortex c-freeness (cfree-basic)", report.passed, _checks(report))


@pytest.mark.slow
def test_criterion_07_infinitesimal(criterion):
    cfg = build_config({"preset": "infinitesimal-basic"})
    assert cfg.fit_terms == 2 and cfg.dims[-1] == 256
    report = run_experiment(cfg, threads=4)
    criterion(7, "infinitesimal expansion (infinitesimal-basic)", report.passed, _checks(report))


@pytest.mark.slow
def test_criterion_08_fluctuations(criterion):
    cfg = build_config({"preset": "fluctuation-basic"})
    assert cfg.dims == [128] and cfg.trials >= 10_000 and cfg.rel_tol == 0.15 and len(cfg.words) == 2
    report = run_experiment(cfg, threads=4)
    criterion(8, "fluctuations (fluctuation-basic)", report.passed, _checks(report))


@pytest.mark.slow
def test_criterion_09_ordered_indented(criterion):
    reports = []
    for name in ("ordered-basic", "indented-basic"):
        cfg = build_config({"preset": name})
        assert cfg.dims[-1] == 256 and cfg.threshold == 3
        reports.append(run_experiment(cfg, threads=4))
    criterion(9, "ordered and indented models", all(r.passed for r in reports),
              " | ".join(f"{r.kind}: {_checks(r)}" for r in reports))


def test_criterion_10_determinism(criterion, tmp_path):
    outputs = []
    for name in ("cfree-basic", "ordered-basic"):
        cfg = build_config({"preset": name, "trials": 150, "dims": [32, 64]})
        blobs = []
        for run, threads in enumerate((1, 4, 1, 3)):
            path, _ = run_experiment(cfg, threads=threads).write(tmp_path / f"{name}-{run}")
            blobs.append(path.read_bytes())
        outputs.append((name, len(blobs[0]), all(b == blobs[0] for b in blobs)))
    other = run_experiment(build_config({"preset": "smoke"}, seed=1), threads=1).csv_text()
    base = run_experiment(build_config({"preset": "smoke"}), threads=1).csv_text()
    ok = all(same for _, _, same in outputs) and other != base
    detail = ", ".join(f"{n}: 4 runs at threads 1/4/1/3 {'identical' if s else 'DIFFER'} ({size} bytes)"
                       for n, size, s in outputs)
    criterion(10, "determinism", ok, detail + "; a different seed changes the CSV")
