from __future__ import annotations

import json

import numpy as np
import pytest

from vortex.experiments.config import (PRESETS, ConfigError, build_config, load_config, preset,
                                       vector_from_spec)
from vortex.experiments.drivers import run_experiment
from vortex.experiments.program import Evaluator, compile_expression
from vortex.experiments.report import Report, Row, load_summary, render_summary
from vortex.experiments.stats import (FitDegeneracyError, chunk_rng, estimate, estimate_from_values,
                                      fit_expansion, loglog_slope, run_trials, standardized_cumulants,
                                      stream_id, zscore)
from vortex.functionals import semicircle
from vortex.matrices import (MatrixEnsemble, StabilizerHaarSampler, build_matrix, conjugate, evaluate_word_state,
                             sample_haar)
from vortex.parsing import parse_polynomial, parse_word

# ------------------------------------------------------------------ stats


def test_estimate_of_fair_coin():
    rng = np.random.default_rng(0)
    x = rng.choice([-1.0, 1.0], size=10_000)
    est = estimate_from_values(x, "coin", 1, "trace")
    assert est.trials == 10_000
    assert est.stderr == pytest.approx(0.01, rel=0.02)
    assert est.zscore(0.0) < 4
    with pytest.raises(ValueError):
        estimate_from_values([1.0])


def test_complex_stderr_combines_parts():
    est = estimate_from_values(np.array([1 + 1j, -1 - 1j, 1 - 1j, -1 + 1j]))
    assert est.stderr == pytest.approx(np.hypot(est.stderr_re, est.stderr_im))


def test_zscore_floor():
    assert zscore(1.0, 0.0, 1.0 + 1e-12) < 1
    assert zscore(1.0, 0.0, 1.001) > 1e3
    assert zscore(0.5, 0.1, 0.2) == pytest.approx(3.0)


def test_fit_recovers_coefficients():
    dims = [16, 32, 64, 128, 256]
    means = [2.0 - 3.0 / N for N in dims]
    fit = fit_expansion("w", dims, means, [0.0] * len(dims))
    assert fit.exact
    assert fit.c0 == pytest.approx(2.0) and fit.c1 == pytest.approx(-3.0)
    means = [1.0 + 0.5j + 4.0 / N + 20.0 / N ** 2 for N in dims]
    fit = fit_expansion("w", dims, means, [1e-3] * len(dims), terms=3)
    assert fit.c1 == pytest.approx(4.0, abs=1e-6) and fit.c2 == pytest.approx(20.0, abs=1e-4)


def test_fit_uncertainty_covers_noise():
    rng = np.random.default_rng(1)
    dims = [32, 64, 128, 256]
    hits = 0
    for _ in range(200):
        se = [0.01] * 4
        means = [1.0 + 2.0 / N + rng.normal(0, 0.01) for N in dims]
        fit = fit_expansion("w", dims, means, se)
        hits += abs(fit.c1 - 2.0) < 2 * fit.sigma_c1
    assert hits > 170


def test_fit_degeneracy():
    with pytest.raises(FitDegeneracyError):
        fit_expansion("w", [32, 32, 64], [1, 1, 1], [0.1] * 3)
    with pytest.raises(FitDegeneracyError):
        fit_expansion("w", [32, 64], [1, 1], [0.1] * 2)
    with pytest.raises(FitDegeneracyError):
        fit_expansion("w", [32, 64, 128], [1, 1, 1], [0.1] * 3, terms=3)


def test_loglog_slope_and_cumulants():
    assert loglog_slope([10, 100, 1000], [1e-1, 1e-2, 1e-3]) == pytest.approx(-1.0)
    rng = np.random.default_rng(2)
    skew, kurt = standardized_cumulants(rng.standard_normal(50_000))
    assert abs(skew) < 0.05 and abs(kurt) < 0.1
    assert standardized_cumulants(np.ones(5)) == (0.0, 0.0)


def test_run_trials_is_independent_of_thread_count():
    def fn(rng, n):
        return rng.standard_normal((n, 2))

    a = run_trials(fn, 230, seed=5, stream=stream_id("x"), N=8, threads=1, chunk_size=20)
    b = run_trials(fn, 230, seed=5, stream=stream_id("x"), N=8, threads=4, chunk_size=20)
    assert a.shape == (230, 2)
    assert np.array_equal(a, b)
    c = run_trials(fn, 230, seed=6, stream=stream_id("x"), N=8, threads=1, chunk_size=20)
    assert not np.array_equal(a, c)


def test_chunk_streams_differ():
    x = chunk_rng(1, 2, 3, 0).standard_normal(4)
    assert not np.array_equal(x, chunk_rng(1, 2, 3, 1).standard_normal(4))
    assert not np.array_equal(x, chunk_rng(1, 2, 4, 0).standard_normal(4))
    assert np.array_equal(x, chunk_rng(1, 2, 3, 0).standard_normal(4))
    assert stream_id("a") == stream_id("a") != stream_id("b")


def test_estimate_with_unrotated_word_has_no_noise():
    rng = np.random.default_rng(3)
    A = MatrixEnsemble(0, {0: np.diag([2.0, 1.0, 0.0, -1.0]).astype(complex)})
    B = MatrixEnsemble(1, {0: np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)})
    s = StabilizerHaarSampler(4, np.eye(4)[0], rng)
    est = estimate(parse_word("X0^2"), "trace", lambda: {1: s.sample()}, {0: A, 1: B}, 20)
    assert est.mean == pytest.approx(1.5)
    assert est.stderr < 1e-12


# ----------------------------------------------------------------- config


def test_presets_validate():
    for name in PRESETS:
        cfg = build_config({"preset": name})
        assert cfg.kind in name or name == "smoke"


def test_preset_overrides_and_seed():
    cfg = build_config({"preset": "smoke", "trials": 12}, seed=99)
    assert cfg.trials == 12 and cfg.seed == 99
    with pytest.raises(ConfigError):
        preset("nope")


@pytest.mark.parametrize("override, fragment", [
    ({"dims": [64, 32]}, "ascending"),
    ({"trials": 1}, "trials"),
    ({"words": ["X0 +"]}, "X0 +"),
    ({"ensembles": {"0": {"kind": "shift"}}}, "families 0 and 1"),
    ({"fixed_vectors": [{"kind": "basis"}, {"kind": "basis", "index": 1}]}, "fixed vector"),
    ({"bogus": 1}, "bogus"),
    ({"ensembles": {"0": {"kind": "warp"}, "1": {"kind": "shift"}}}, "ensembles"),
])
def test_config_errors(override, fragment):
    with pytest.raises(ConfigError) as exc:
        build_config({"preset": "smoke", **override})
    assert fragment in str(exc.value)


def test_kind_specific_config_errors():
    with pytest.raises(ConfigError):
        build_config({"preset": "fluctuation-basic", "trials": 500})
    with pytest.raises(ConfigError):
        build_config({"preset": "infinitesimal-basic", "dims": [32, 64]})
    with pytest.raises(ConfigError):
        build_config({"preset": "infinitesimal-basic", "dims": [16, 32, 64], "fit_terms": 3})
    with pytest.raises(ConfigError):
        build_config({"preset": "ordered-basic", "fixed_vectors": [{"kind": "basis"}]})
    with pytest.raises(ConfigError):
        build_config({"preset": "ordered-basic",
                      "fixed_vectors": [{"kind": "basis"}, {"kind": "basis", "index": 0}]})


def test_load_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"preset": "smoke", "seed": 4}))
    assert load_config(path).seed == 4
    assert load_config(path, seed=5).seed == 5
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_vector_specs():
    assert np.array_equal(vector_from_spec({"kind": "basis", "index": 2}, 4), np.eye(4)[2])
    assert np.linalg.norm(vector_from_spec({"kind": "ones"}, 9)) == pytest.approx(1)
    v = vector_from_spec({"kind": "explicit", "values": [3, [0, 4]]}, 2)
    assert np.allclose(v, [0.6, 0.8j])
    with pytest.raises(ConfigError):
        vector_from_spec({"kind": "explicit", "values": [1]}, 2)
    with pytest.raises(ConfigError):
        vector_from_spec({"kind": "basis", "index": 5}, 4)


# ---------------------------------------------------------------- program


@pytest.mark.parametrize("text", ["X0", "X0*Y0*X0*Y0", "{X0}*{Y0^2}*{X0}", "X0^2*Y0 - 2*Y0 + 1/2",
                                  "(X0 + Y0)^2*X0"])
@pytest.mark.parametrize("mode", ["trace", "Trace", "vector"])
def test_program_matches_dense_evaluation(text, mode):
    N = 12
    specs = {
        0: {"kind": "spiked_diagonal", "theta": 2.0, "a": [-1.0, 0.5], "position": 0, "angle": 0.4},
        1: {"kind": "spiked_diagonal", "theta": 1.5, "a": [1.0, -0.5, 0.25], "position": 0, "angle": 0.9},
    }
    fam = {0: semicircle(0), 1: semicircle(1)}

    def center(p):
        (f,) = p.family_set()
        return p - parse_polynomial("1") * fam[f](p)

    rng = np.random.default_rng(4)
    v = np.eye(N, dtype=complex)[0]
    U = StabilizerHaarSampler(N, v, rng).sample()
    ev = Evaluator(specs, N, rotated=(1,))
    prog = compile_expression(text, center)
    got = ev.trial({1: U}).state(prog, mode, ev.to_working(v))
    ens = {f: MatrixEnsemble(f, {0: build_matrix(s, N)}) for f, s in specs.items()}
    ens[1] = conjugate(U, ens[1])
    want = evaluate_word_state(ens, parse_polynomial(text, center), mode, v)
    assert got == pytest.approx(want, abs=1e-10)


def test_program_with_dense_family_and_two_rotations():
    N = 6
    specs = {0: {"kind": "shift"}, 1: {"kind": "projection", "rank": 2}}
    rng = np.random.default_rng(5)
    U0, U1 = sample_haar(N, rng), sample_haar(N, rng)
    ev = Evaluator(specs, N, rotated=(0, 1))
    prog = compile_expression("X0*Y0*X0^2*Y0")
    got = ev.trial({0: U0, 1: U1}).state(prog, "Trace")
    ens = {0: conjugate(U0, MatrixEnsemble(0, {0: build_matrix(specs[0], N)})),
           1: conjugate(U1, MatrixEnsemble(1, {0: build_matrix(specs[1], N)}))}
    assert got == pytest.approx(evaluate_word_state(ens, parse_word("X0*Y0*X0^2*Y0"), "Trace"), abs=1e-10)


# ----------------------------------------------------------------- report


def test_report_csv_and_summary(tmp_path):
    rep = Report("cfree", 3, {"kind": "cfree", "outputs": {}})
    rep.rows.append(Row("X0", 16, "trace", "word", 0.5 + 0j, 0.01, 0.5, 0.0))
    rep.add_check("a", True, "fine")
    assert rep.passed
    rep.add_check("b", False, "broken", z=4.2)
    assert not rep.passed
    assert rep.check("b").data == {"z": 4.2}
    text = rep.csv_text()
    assert text.splitlines()[0].startswith("word,N,mode,group,estimate_re")
    assert len(text.splitlines()) == 2
    rep.write(tmp_path)
    summary, rows = load_summary(tmp_path)
    assert summary["passed"] is False and rows[0]["word"] == "X0"
    out = render_summary(summary, rows)
    assert "[FAIL] b: broken" in out and "X0" in out


# ---------------------------------------------------------------- running


def test_smoke_run_is_byte_deterministic(tmp_path):
    cfg = build_config({"preset": "smoke"})
    a = run_experiment(cfg, threads=1)
    b = run_experiment(cfg, threads=3)
    c = run_experiment(build_config({"preset": "smoke"}), threads=1)
    assert a.csv_text() == b.csv_text() == c.csv_text()
    d = run_experiment(build_config({"preset": "smoke"}, seed=8), threads=1)
    assert d.csv_text() != a.csv_text()
    assert d.seed == 8
    rows = a.rows_where(word="X0", mode="trace")
    assert rows and all(r.zscore < 1e-3 for r in rows)
