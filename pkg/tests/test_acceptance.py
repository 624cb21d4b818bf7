"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
summary lines.
"""

import time

import numpy as np
import pytest

from conftest import make_synthetic_records
from streampcq import bitstream as bs
from streampcq.calibration import train_full
from streampcq.evaluation import (
    ScorePairSet,
    evaluate,
    f_quantile,
    fit_logistic,
    loocv,
    plcc,
    random_split_eval,
    rmse,
    srcc,
)
from streampcq.model import (
    ModelParams,
    h_of_qp,
    j_of_qp,
    pmos_g,
    predict,
    tqs_from_qp,
)
from streampcq.subjective import SubjectiveMatrix, compute_mos, zscore


def report(criterion, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    print(line)
    assert ok, line


def test_criterion_1_model_arithmetic():
    t0 = time.monotonic()
    p = ModelParams()
    checks = [
        (tqs_from_qp(22), 8.0), (tqs_from_qp(46), 128.0),
        (h_of_qp(p, 22), 6.0213), (h_of_qp(p, 46), 92.7573),
        (j_of_qp(p, 22), 2.0922), (j_of_qp(p, 46), 7.9194),
        (pmos_g(p, 1.0), 85.4838), (pmos_g(p, 0.125), 66.5803),
    ]
    feats = bs.BitstreamFeatures(pqs=0.25, qp=46, texture_bits=0,
                                 point_count=1, tbpp=0.5)
    checks.append((predict(p, feats).pmos, 77.2487))
    p_alt = ModelParams(variant="alpha-times-tqs")
    checks.append((predict(p_alt, feats).pmos, 60.2799))
    worst = max(abs(got - want) for got, want in checks)
    elapsed = time.monotonic() - t0
    report(1, worst < 1e-3 and elapsed < 1.0,
           f"max |err| = {worst:.2e} over {len(checks)} fixtures in {elapsed * 1e3:.1f} ms")


def test_criterion_2_parser_roundtrip():
    t0 = time.monotonic()
    schema = bs.default_schema()
    rng = np.random.default_rng(2024)
    n_ok = 0
    for _ in range(1000):
        f = bs.BitstreamFeatures.from_counts(
            pqs=float(rng.choice([0.125, 0.25, 0.5, 1.0])),
            qp=int(rng.integers(22, 47)),
            texture_bits=8 * int(rng.integers(0, 10**5)),
            point_count=int(rng.integers(1, 10**7)),
        )
        trace = []
        got = bs.extract_features(bs.synthesize_bitstream(f, schema), schema,
                                  trace=trace)
        body_ok = all(cls != "attribute_data" for cls, _, _ in trace)
        for cls, consumed, payload_bits in trace:
            if cls == "geometry_data":
                body_ok &= consumed <= payload_bits - 32  # filler body untouched
        if got == f and body_ok:
            n_ok += 1
    elapsed = time.monotonic() - t0
    report(2, n_ok == 1000 and elapsed < 5.0,
           f"{n_ok}/1000 exact round-trips, zero body bits decoded, {elapsed:.2f} s")


def test_criterion_3_calibration_recovery():
    t0 = time.monotonic()
    ref = ModelParams()
    records = make_synthetic_records(ref)
    got, _ = train_full(records, variant="alpha-times-tqs")
    names = ("a1", "a2", "a3", "b1", "b2", "c", "d", "f1", "f2")
    worst = max(abs(getattr(got, n) - getattr(ref, n)) for n in names)

    noisy = make_synthetic_records(ref, noise_sigma=0.5,
                                   rng=np.random.default_rng(3))
    noisy_params, _ = train_full(noisy, variant="alpha-times-tqs")
    preds = [predict(noisy_params, r).pmos for r in noisy]
    grid_plcc = plcc(preds, [r.mos for r in noisy])
    elapsed = time.monotonic() - t0
    report(3, worst < 1e-6 and grid_plcc > 0.99 and elapsed < 10.0,
           f"max coefficient error {worst:.2e}, noisy-grid PLCC {grid_plcc:.4f}, "
           f"{elapsed:.2f} s")


def test_criterion_4_statistics_oracles():
    from scipy import stats as sps

    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        x = rng.normal(size=400)
        y = 0.3 * x + rng.normal(size=400)
        x[:50] = np.round(x[:50], 1)   # tied ranks
        y[:50] = np.round(y[:50], 1)
        worst = max(
            worst,
            abs(plcc(x, y) - sps.pearsonr(x, y).statistic),
            abs(srcc(x, y) - sps.spearmanr(x, y).statistic),
            abs(rmse(x, y) - float(np.sqrt(np.mean((x - y) ** 2)))),
        )
    metrics_ok = worst < 1e-9

    q = f_quantile(0.975, 10, 10)
    mc = np.random.default_rng(5)
    n = 10**7
    samples = (mc.chisquare(10, n) / 10.0) / (mc.chisquare(10, n) / 10.0)
    cdf_at_q = float(np.mean(samples <= q))
    quantile_ok = abs(cdf_at_q - 0.975) < 2e-3
    report(4, metrics_ok and quantile_ok,
           f"metric max |err| {worst:.2e}; MC CDF at F_0.975(10,10)={q:.4f} "
           f"is {cdf_at_q:.5f}")


def test_criterion_5_logistic_recovery():
    s = np.linspace(0, 100, 80)
    truth = (92.0, 8.0, 45.0, 15.0)
    y = truth[1] + (truth[0] - truth[1]) / (1.0 + np.exp(-(s - truth[2]) / truth[3]))
    fit = fit_logistic(s, y)
    recovery_ok = fit.rss < 1e-10

    y_lin = 0.7 * s + 12.0
    fit_lin = fit_logistic(s, y_lin)
    slope, intercept = np.polyfit(s, y_lin, 1)
    linear_rmse = float(np.sqrt(np.mean((slope * s + intercept - y_lin) ** 2)))
    nesting_ok = rmse(fit_lin.mapped, y_lin) <= linear_rmse + 1e-9
    report(5, recovery_ok and nesting_ok,
           f"recovery RSS {fit.rss:.2e}; near-linear mapped RMSE "
           f"{rmse(fit_lin.mapped, y_lin):.2e} vs linear {linear_rmse:.2e}")


def test_criterion_6_subjective_pipeline():
    rng = np.random.default_rng(6)
    n_stim, n_subj = 400, 30
    truth = rng.uniform(0, 100, n_stim)
    gains = rng.uniform(0.6, 1.4, n_subj)
    offsets = rng.uniform(-15, 15, n_subj)
    ratings = truth[:, None] * gains[None, :] + offsets[None, :] \
        + rng.normal(0, 1.0, (n_stim, n_subj))
    table = compute_mos(SubjectiveMatrix(ratings))
    corr = plcc(table.mos, truth)

    z = zscore(ratings)
    col_mean = float(np.abs(z.mean(axis=0)).max())
    col_std = float(np.abs(z.std(axis=0, ddof=1) - 1.0).max())
    report(6, corr > 0.999 and col_mean < 1e-10 and col_std < 1e-10,
           f"MOS vs planted PLCC {corr:.5f}; Z columns mean<= {col_mean:.1e}, "
           f"std err<= {col_std:.1e}")


def test_criterion_7_loocv_and_splits():
    records = make_synthetic_records()
    folds, summary = loocv(records, variant="alpha-times-tqs")
    fold_contents = set(folds)
    structure_ok = len(folds) == 20 and fold_contents == {r.content for r in records}
    folds_perfect = all(abs(rep.plcc - 1.0) < 1e-9 for rep in folds.values())

    t0 = time.monotonic()
    res1, _ = random_split_eval(records, n_splits=1000, seed=99,
                                variant="alpha-times-tqs")
    elapsed = time.monotonic() - t0
    res2, _ = random_split_eval(records, n_splits=1000, seed=99,
                                variant="alpha-times-tqs")
    reproducible = res1 == res2
    splits_perfect = all(abs(p - 1.0) < 1e-9 for p, _s, _r in res1)
    report(7, structure_ok and folds_perfect and reproducible and splits_perfect
           and elapsed < 60.0,
           f"20 disjoint folds, 1000 splits bit-reproducible in {elapsed:.1f} s, "
           f"all PLCC = 1")


def test_criterion_8_published_dataset():
    pytest.skip("WPC5.0 MOS data and bitstreams are not distributed with this "
                "repository; criteria 1-7 constitute acceptance. When the data "
                "is available, run `streampcq extract` + `streampcq score` + "
                "`streampcq eval` and compare PLCC/SRCC/RMSE to the published "
                "0.9284/0.9324/5.1035 within +/-0.02.")
