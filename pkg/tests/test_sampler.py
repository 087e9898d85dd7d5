"""Monte Carlo quadrature sampler: PDF exactness, determinism, streaming."""

import json
import math

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.stats import kstest

from herald_sense import (
    ConfigError,
    EfficiencyPair,
    HeraldedStateSpec,
    SamplerConfig,
    apply_mixture_and_loss,
    draw,
    ingest_samples,
    joint_pdf,
    lossy_mean_x,
    lossy_var_x,
    marginal_pdf,
    quadrature_marginal,
    sample_stream_to_file,
)
from herald_sense.sampler import GENERATOR_NAME

PI = math.pi
IDEAL = EfficiencyPair(1.0, 1.0)
LOSSY = EfficiencyPair(0.9139, 0.59)


def _pdf_grid(spec, halfwidth=7.0, n=701):
    g = np.linspace(-halfwidth, halfwidth, n)
    p = joint_pdf(spec, g[:, None], g[None, :])
    return g, p


@pytest.mark.parametrize("alpha,phi", [(0.0, PI), (0.8, 2.5), (1.13, PI), (1.13, PI - 0.05)])
def test_joint_pdf_normalized(alpha, phi):
    g, p = _pdf_grid(HeraldedStateSpec(alpha, phi))
    mass = trapezoid(trapezoid(p, g, axis=1), g)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_joint_pdf_frozen_point():
    spec = HeraldedStateSpec(0.8, 2.5)
    assert joint_pdf(spec, 0.3, -0.4) == pytest.approx(0.116985561767769, abs=1e-12)
    assert marginal_pdf(spec, 0.3) == pytest.approx(0.307428696183875, abs=1e-12)


def test_joint_pdf_symmetry_single_photon():
    # alpha = 0, phi = pi: pdf proportional to (p1 - p2)^2 exp(-2 p1^2 - 2 p2^2)
    spec = HeraldedStateSpec(0.0, PI)
    pts = [(0.3, -0.4), (1.1, 0.2), (0.0, 0.9)]
    for p1, p2 in pts:
        assert joint_pdf(spec, p1, p2) == pytest.approx(joint_pdf(spec, p2, p1), rel=1e-12)
        assert joint_pdf(spec, p1, p2) == pytest.approx(joint_pdf(spec, -p1, -p2), rel=1e-12)
    assert joint_pdf(spec, 0.7, 0.7) == pytest.approx(0.0, abs=1e-15)


def test_marginal_matches_integrated_joint():
    spec = HeraldedStateSpec(1.0, PI)
    g = np.linspace(-7.0, 7.0, 1401)
    for p1 in (-0.8, 0.0, 0.5, 1.3):
        joint_slice = joint_pdf(spec, p1, g)
        assert marginal_pdf(spec, p1) == pytest.approx(trapezoid(joint_slice, g), abs=1e-6)


def test_pdf_moments_match_moment_formulas():
    spec = HeraldedStateSpec(1.0, PI)
    g, p = _pdf_grid(spec)
    x = g[:, None] - g[None, :]
    var = trapezoid(trapezoid(x**2 * p, g, axis=1), g)  # mean is 0 at pi
    assert var == pytest.approx(lossy_var_x(1.0, PI, IDEAL), abs=1e-6)
    spec2 = HeraldedStateSpec(1.13, PI)
    g2, p2 = _pdf_grid(spec2)
    x2 = g2[:, None] - g2[None, :]
    var2 = trapezoid(trapezoid(x2**2 * p2, g2, axis=1), g2)
    assert var2 == pytest.approx(1.5, abs=1e-6)


def test_draw_is_deterministic():
    spec = HeraldedStateSpec(1.13, PI - 0.05)
    a = draw(spec, LOSSY, 3000, SamplerConfig(seed=12))
    b = draw(spec, LOSSY, 3000, SamplerConfig(seed=12))
    assert np.array_equal(a, b)
    c = draw(spec, LOSSY, 3000, SamplerConfig(seed=13))
    assert not np.array_equal(a, c)


def test_draw_zero_records():
    out = draw(HeraldedStateSpec(1.0, PI), IDEAL, 0)
    assert out.shape == (0, 2)


def test_draw_rejects_bad_n():
    with pytest.raises(ConfigError):
        draw(HeraldedStateSpec(1.0, PI), IDEAL, -5)


def test_sampler_config_validation():
    with pytest.raises(ConfigError):
        SamplerConfig(seed=-1)
    with pytest.raises(ConfigError):
        SamplerConfig(grid_points=10)
    with pytest.raises(ConfigError):
        SamplerConfig(grid_halfwidth=-2.0)


def test_narrow_grid_rejected():
    spec = HeraldedStateSpec(2.0, 0.3)
    cfg = SamplerConfig(seed=0, grid_halfwidth=1.0)
    with pytest.raises(ConfigError):
        draw(spec, IDEAL, 10, cfg)


def _standard_errors(x):
    n = x.size
    m2 = np.var(x)
    m4 = np.mean((x - x.mean()) ** 4)
    se_mean = math.sqrt(m2 / n)
    se_var = math.sqrt(max(m4 - m2**2, 0.0) / n)
    return se_mean, se_var


@pytest.mark.parametrize("eff", [IDEAL, LOSSY], ids=["ideal", "lossy"])
def test_mc_moments_match_closed_forms(eff):
    alpha, phi = 1.13, PI - 0.05
    spec = HeraldedStateSpec(alpha, phi)
    rec = draw(spec, eff, 200_000, SamplerConfig(seed=21))
    x = rec[:, 0] - rec[:, 1]
    se_mean, se_var = _standard_errors(x)
    assert abs(x.mean() - lossy_mean_x(alpha, phi, eff)) < 5 * se_mean
    assert abs(x.var(ddof=1) - lossy_var_x(alpha, phi, eff)) < 5 * se_var


def test_mc_per_quadrature_moments_ideal():
    # per-mode means and variances against the exact moment formulas
    from herald_sense import assemble, mean_vector

    alpha, phi = 0.9, 2.3
    spec = HeraldedStateSpec(alpha, phi)
    m = assemble(spec)
    rec = draw(spec, IDEAL, 200_000, SamplerConfig(seed=5))
    for col, idx in ((0, 1), (1, 3)):  # sampled quadratures are p1 and p2
        se_mean, se_var = _standard_errors(rec[:, col])
        assert abs(rec[:, col].mean() - m.mean[idx]) < 5 * se_mean
        assert abs(rec[:, col].var(ddof=1) - m.gamma[idx, idx]) < 5 * se_var
    cov = np.cov(rec[:, 0], rec[:, 1], ddof=1)[0, 1]
    se_cov = math.sqrt(
        (m.gamma[1, 1] * m.gamma[3, 3] + m.gamma[1, 3] ** 2) / rec.shape[0]
    )
    assert abs(cov - m.gamma[1, 3]) < 5 * se_cov


def test_vacuum_records_at_zero_detection():
    dead = EfficiencyPair(1.0, 0.0)
    rec = draw(HeraldedStateSpec(0.0, PI), dead, 100_000, SamplerConfig(seed=31))
    for col in (0, 1):
        se_mean, se_var = _standard_errors(rec[:, col])
        assert abs(rec[:, col].mean()) < 5 * se_mean
        assert abs(rec[:, col].var(ddof=1) - 0.25) < 5 * se_var


def test_loss_commutation_against_channel_oracle():
    # drawing ideal-then-degrade must match the marginal of the fock-oracle
    # channel output: one-sample KS test at n = 1e5
    alpha, phi = 1.0, 2.4
    eff = EfficiencyPair(0.85, 0.6)
    spec = HeraldedStateSpec(alpha, phi)
    rec = draw(spec, eff, 100_000, SamplerConfig(seed=8))
    dm = apply_mixture_and_loss(alpha, phi, eff)
    grid = np.linspace(-8.0, 8.0, 4001)
    pdf = quadrature_marginal(dm, 1, PI / 2, grid)
    cdf_vals = cumulative_trapezoid(pdf, grid, initial=0.0)
    cdf_vals /= cdf_vals[-1]
    cdf = PchipInterpolator(grid, cdf_vals)
    result = kstest(rec[:, 0], lambda q: np.clip(cdf(q), 0.0, 1.0))
    assert result.pvalue > 1e-3


def test_stream_file_roundtrip(tmp_path):
    path = tmp_path / "records.csv"
    spec = HeraldedStateSpec(1.13, PI - 0.05)
    meta = sample_stream_to_file(path, spec, LOSSY, 5000, SamplerConfig(seed=42))
    assert meta["n_records"] == 5000
    assert meta["generator"] == GENERATOR_NAME
    back = ingest_samples(path)
    direct = draw(spec, LOSSY, 5000, SamplerConfig(seed=42))
    assert np.array_equal(back, direct)
    sidecar = json.loads((tmp_path / "records.meta.json").read_text())
    assert sidecar["seed"] == 42
    assert sidecar["eta_d"] == LOSSY.eta_d


def test_stream_file_empty(tmp_path):
    path = tmp_path / "empty.csv"
    sample_stream_to_file(path, HeraldedStateSpec(1.0, PI), IDEAL, 0)
    lines = path.read_text().splitlines()
    assert len(lines) == 2  # comment + header
    assert lines[1] == "p1,p2"
    assert ingest_samples(path).shape == (0, 2)


def test_stream_file_partial_buffer(tmp_path):
    path = tmp_path / "odd.csv"
    spec = HeraldedStateSpec(0.5, PI + 0.2)
    sample_stream_to_file(path, spec, IDEAL, 257, SamplerConfig(seed=3, batch=100))
    assert ingest_samples(path).shape == (257, 2)
