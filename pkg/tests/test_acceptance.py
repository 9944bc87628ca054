"""Exit criteria for the build, one test per criterion.

Run with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import itertools
import time

import numpy as np
import pytest

from conftest import sample_spearman
from copulascen.dependence import (
    RankCorrelationMatrix,
    copula_sigma_to_rank,
    nearest_psd,
    rank_to_copula_sigma,
    spearman_matrix_from_array,
    to_copula_matrix,
)
from copulascen.gaussian_copula import GaussianCopulaModel, joint_normal_transform, sample_bivariate_copula
from copulascen.ingest import Dataset, write_dataset_csv
from copulascen.marginals import fit_empirical, pit
from copulascen.pipeline import (
    FitConfig,
    ModelBundle,
    cmd_fit,
    cmd_sample,
    generate_scenarios,
    ks_statistic,
    sample_uniforms,
    uniform_cdf,
)
from copulascen.rng import SeededRng
from copulascen.synthetic import synthetic_dataset
from copulascen.vine import build_dvine, dvine_from_rank_matrix, sample_dvine

RANK_TARGET_4 = np.array(
    [
        [1.0, 0.6, -0.3, 0.2],
        [0.6, 1.0, -0.1, 0.4],
        [-0.3, -0.1, 1.0, 0.25],
        [0.2, 0.4, 0.25, 1.0],
    ]
)
RANK_TARGET_3 = np.array([[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]])


def pairwise_spearman(u):
    n = u.shape[1]
    return {(i, j): sample_spearman(u[:, i], u[:, j]) for i, j in itertools.combinations(range(n), 2)}


def test_01_sigma_rank_conversion(acceptance):
    t0 = time.perf_counter()
    fixed = all(rank_to_copula_sigma(r) == r for r in (-1.0, 0.0, 1.0))
    grid = np.linspace(-1.0, 1.0, 1000)
    err = max(abs(copula_sigma_to_rank(rank_to_copula_sigma(r)) - r) for r in grid)
    elapsed = time.perf_counter() - t0
    ok = fixed and err <= 1e-14 and elapsed < 1.0
    acceptance(1, "sigma<->rho conversion", ok, f"fixed points exact={fixed}, max round-trip err={err:.2e}, {elapsed:.3f}s")
    assert fixed
    assert err <= 1e-14
    assert elapsed < 1.0


def test_02_pit_uniformity(acceptance):
    t0 = time.perf_counter()
    data = np.random.default_rng(2).standard_normal(10_000)
    assert len(np.unique(data)) == data.size
    m = fit_empirical("x", data)
    d = ks_statistic(pit(m, data), uniform_cdf)
    elapsed = time.perf_counter() - t0
    bound = 1 / data.size + 1e-12
    ok = d <= bound and elapsed < 1.0
    acceptance(2, "PIT uniformity", ok, f"KS={d:.3e} (bound {bound:.3e}), {elapsed:.3f}s")
    assert d <= bound
    assert elapsed < 1.0


def test_03_bivariate_copula_sampling(acceptance):
    t0 = time.perf_counter()
    u = sample_bivariate_copula(0.6, 200_000, SeededRng(3))
    rho = sample_spearman(u[:, 0], u[:, 1])
    ks = [ks_statistic(u[:, j], uniform_cdf) for j in range(2)]
    elapsed = time.perf_counter() - t0
    ok = abs(rho - 0.6) <= 0.01 and max(ks) < 0.01 and elapsed < 5.0
    acceptance(3, "two-variable conditional sampling", ok, f"spearman={rho:.4f}, KS={ks[0]:.4f}/{ks[1]:.4f}, {elapsed:.2f}s")
    assert abs(rho - 0.6) <= 0.01
    assert max(ks) < 0.01
    assert elapsed < 5.0


def test_04_joint_normal_transform(acceptance):
    t0 = time.perf_counter()
    r = RankCorrelationMatrix(tuple("abcd"), RANK_TARGET_4)
    model = GaussianCopulaModel.from_matrix(to_copula_matrix(r))
    u = joint_normal_transform(model, 200_000, SeededRng(4))
    dev = max(abs(v - RANK_TARGET_4[i, j]) for (i, j), v in pairwise_spearman(u).items())
    elapsed = time.perf_counter() - t0
    ok = dev <= 0.015 and elapsed < 10.0
    acceptance(4, "joint normal transform n=4", ok, f"max |spearman - target|={dev:.4f}, {elapsed:.2f}s")
    assert dev <= 0.015
    assert elapsed < 10.0


def test_05_dvine_matches_jnt(acceptance):
    t0 = time.perf_counter()
    r = RankCorrelationMatrix(tuple("abc"), RANK_TARGET_3)
    u = sample_dvine(dvine_from_rank_matrix(r, list("abc")), 200_000, SeededRng(5, 1))
    v = joint_normal_transform(GaussianCopulaModel.from_matrix(to_copula_matrix(r)), 200_000, SeededRng(5, 2))
    su, sv = pairwise_spearman(u), pairwise_spearman(v)
    dev_target = max(abs(su[k] - RANK_TARGET_3[k]) for k in su)
    dev_jnt = max(abs(su[k] - sv[k]) for k in su)
    elapsed = time.perf_counter() - t0
    ok = dev_target <= 0.02 and dev_jnt <= 0.02 and elapsed < 10.0
    acceptance(5, "d-vine vs JNT oracle", ok, f"vs target {dev_target:.4f}, vs JNT {dev_jnt:.4f}, {elapsed:.2f}s")
    assert dev_target <= 0.02
    assert dev_jnt <= 0.02
    assert elapsed < 10.0


def test_06_independence_collapse(acceptance):
    rng = SeededRng(6)
    spec = build_dvine(list("abcd"), [[0.0] * 3, [0.0] * 2, [0.0]])
    vine_ok = sample_dvine(spec, 10_000, rng).tobytes() == rng.uniforms(10_000, 4).tobytes()
    biv_ok = sample_bivariate_copula(0.0, 10_000, rng).tobytes() == rng.uniforms(10_000, 2).tobytes()
    acceptance(6, "independence collapse", vine_ok and biv_ok, f"d-vine bitwise={vine_ok}, two-variable bitwise={biv_ok}")
    assert vine_ok and biv_ok


def test_07_bivariate_reduction(acceptance):
    rng = SeededRng(7, 5)
    same = all(
        sample_dvine(build_dvine(["x", "y"], [[rho]]), 20_000, rng).tobytes()
        == sample_bivariate_copula(rho, 20_000, rng).tobytes()
        for rho in (-0.9, -0.3, 0.45, 0.6, 1.0)
    )
    acceptance(7, "bivariate reduction", same, f"bit-identical for all tested rho={same}")
    assert same


def test_08_psd_repair(acceptance):
    m = np.array([[1.0, 0.9, 0.9], [0.9, 1.0, 0.0], [0.9, 0.0, 1.0]])
    out = nearest_psd(m)
    min_eig = float(np.linalg.eigvalsh(out)[0])
    unit = bool(np.all(np.diag(out) == 1.0))
    sym = bool(np.array_equal(out, out.T))
    psd_inputs = [np.eye(3), np.array([[1.0, 0.5], [0.5, 1.0]]), to_copula_matrix(RankCorrelationMatrix(tuple("abcd"), RANK_TARGET_4)).entries]
    passthrough = max(float(np.max(np.abs(nearest_psd(p) - p))) for p in psd_inputs)
    ok = min_eig >= -1e-8 and unit and sym and passthrough <= 1e-12
    acceptance(8, "PSD repair", ok, f"min eig={min_eig:.2e}, unit diag={unit}, symmetric={sym}, pass-through err={passthrough:.1e}")
    assert np.linalg.eigvalsh(m)[0] < 0
    assert min_eig >= -1e-8 and unit and sym
    assert passthrough <= 1e-12


@pytest.fixture(scope="module")
def fitted_model(tmp_path_factory):
    root = tmp_path_factory.mktemp("acc")
    data = synthetic_dataset(50_000, seed=9)
    write_dataset_csv(data, root / "history.csv")
    bundle = cmd_fit(FitConfig(str(root / "history.csv")), output=root / "model.json")
    return root, data, bundle


def test_09_end_to_end_marginals(acceptance, fitted_model):
    root, data, bundle = fitted_model
    for j in range(data.n_vars):
        assert len(np.unique(data.rows[:, j])) == data.n_obs  # tie-free marginals
    scen = generate_scenarios(ModelBundle.load(root / "model.json"), 100_000, 99)
    ks = {name: ks_statistic(scen.values[:, j], data.rows[:, j]) for j, name in enumerate(data.variable_names)}
    # rank preservation: scenario ranks equal the ranks of the driving uniforms
    # clipped to each marginal's knot range (the region where its quantile is strictly increasing)
    u = sample_uniforms(bundle, 100_000, SeededRng(99, 0))
    uc = np.column_stack(
        [np.clip(u[:, j], m.plotting_positions[0], m.plotting_positions[-1]) for j, m in enumerate(bundle.marginals)]
    )
    exact = spearman_matrix_from_array(uc).entries.tobytes() == spearman_matrix_from_array(scen.values).entries.tobytes()
    ok = max(ks.values()) < 0.01 and exact
    acceptance(9, "end-to-end marginal preservation", ok, f"max two-sample KS={max(ks.values()):.4f}, rank preservation exact={exact}")
    assert max(ks.values()) < 0.01
    assert exact


def test_10_determinism(acceptance, fitted_model, tmp_path):
    root, _, _ = fitted_model
    model = root / "model.json"
    cmd_sample(model, 120_000, 2024, tmp_path / "a.csv", threads=1)
    cmd_sample(model, 120_000, 2024, tmp_path / "b.csv", threads=1)
    cmd_sample(model, 120_000, 2024, tmp_path / "c.csv", threads=8)
    a, b, c = ((tmp_path / f).read_bytes() for f in ("a.csv", "b.csv", "c.csv"))
    ok = a == b == c
    acceptance(10, "determinism", ok, f"repeat identical={a == b}, 1 vs 8 threads identical={a == c}")
    assert ok


def ten_variable_bundle(kind):
    rng = np.random.default_rng(11)
    names = tuple(f"v{i}" for i in range(10))
    a = rng.standard_normal((10, 30))
    c = a @ a.T
    d = np.sqrt(np.diag(c))
    c = np.clip(c / np.outer(d, d), -1.0, 1.0)
    np.fill_diagonal(c, 1.0)
    rank = copula_sigma_to_rank(c)
    rank = 0.5 * (rank + rank.T)
    np.fill_diagonal(rank, 1.0)
    data = synthetic_dataset(20_000, seed=12, rank_target=rank, names=names)
    margs = tuple(fit_empirical(n, data.column(n)) for n in names)
    r = RankCorrelationMatrix(names, rank)
    if kind == "jnt":
        return ModelBundle(names, margs, r, "jnt", copula_matrix=to_copula_matrix(r))
    return ModelBundle(names, margs, r, "dvine", dvine=dvine_from_rank_matrix(r, list(names)))


def test_11_performance(acceptance):
    timings = {}
    for kind in ("jnt", "dvine"):
        bundle = ten_variable_bundle(kind)
        t0 = time.perf_counter()
        scen = generate_scenarios(bundle, 100_000, 11)
        timings[kind] = time.perf_counter() - t0
        assert scen.values.shape == (100_000, 10)
    ok = timings["jnt"] < 5.0 and timings["dvine"] < 30.0
    acceptance(11, "performance 100k x 10", ok, f"JNT {timings['jnt']:.2f}s (<5), d-vine {timings['dvine']:.2f}s (<30)")
    assert timings["jnt"] < 5.0
    assert timings["dvine"] < 30.0
