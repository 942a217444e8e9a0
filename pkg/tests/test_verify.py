import json

import numpy as np
import pandas as pd
import pytest

from mediatone import oracles, report
from mediatone.study import TABLE_SPECS, run_table
from mediatone.verify import SUITES, TOLERANCES, run_suite, write_report


def test_oracle_hand_cases():
    assert oracles.oracle_jaccard("a b c d e f".split(), "a b c d e g".split(), 5) == pytest.approx(1 / 3)
    with pytest.raises(oracles.EmptyDoc):
        oracles.oracle_shingles(["a", "b"], 5)
    assert oracles.oracle_ols_2x2([0, 1, 2], [1, 3, 5]) == pytest.approx((1.0, 2.0))
    with pytest.raises(oracles.Singular):
        oracles.oracle_ols_2x2([1, 1, 1], [1, 2, 3])
    assert np.isnan(oracles.oracle_masked_sum({5: 1.0}, 0, 4))
    assert oracles.oracle_masked_mean([{0: 1.0}, {0: 3.0}, {1: 9.0}], 0) == (2.0, 2)
    assert oracles.oracle_quantile([1, 2, 3, 4], 0.5) == 2.5
    assert oracles.oracle_rank_buckets([1, 1, 0], ["b", "a", "c"], 3) == [3, 2, 1]


def test_oracle_dummy_design_rank_check():
    y = np.arange(4.0)
    X = np.array([1.0, 1.0, 2.0, 2.0])
    with pytest.raises(oracles.Singular):
        oracles.oracle_ols_dummies(y, X, ["a", "a", "b", "b"], ["q", "r", "q", "r"])


@pytest.mark.parametrize("name", sorted(SUITES))
def test_suites_pass_on_ten_seeds(name):
    reports = run_suite(name, seeds=10)
    assert len(reports) == 10
    assert all(r.passed for r in reports), [r for r in reports if not r.passed]
    assert all(r.tolerance == TOLERANCES[name] for r in reports)


def test_report_csv(tmp_path):
    reports = [oracles.OracleReport("x", 5, 0.5, 0.1), oracles.OracleReport("y", 3, 0.0, 0.0)]
    write_report(reports, tmp_path / "r.csv")
    df = pd.read_csv(tmp_path / "r.csv")
    assert df.passed.tolist() == [0, 1]
    with pytest.raises(KeyError):
        run_suite("nope", 1)


@pytest.mark.parametrize("p,expected", [(0.001, "***"), (0.03, "**"), (0.07, "*"), (0.2, ""), (float("nan"), "")])
def test_stars(p, expected):
    assert report.stars(p) == expected


def test_table_files(tmp_path):
    from mediatone.study import prepare_controls
    from mediatone.synth import event_panel

    df = event_panel(1, n_firms=30, n_quarters=8)
    df["rcat"], df["nwrcat"], df["nprcat"] = df.media, df.media * df.nw_share, df.media * (1 - df.nw_share)
    res = run_table("T5", prepare_controls(df))
    csv_path, txt_path, json_path = report.write_table(res, tmp_path)
    long = pd.read_csv(csv_path)
    assert len(long) == sum(len(r) for _, r in TABLE_SPECS["T5"])
    text = txt_path.read_text()
    assert "NWRCAT(-1,1)" in text and "Wald equal" in text and "Within R2" in text
    payload = json.loads(json_path.read_text())
    assert payload["columns"][0]["wald"]["stat"] == pytest.approx(res.wald[0][0])
