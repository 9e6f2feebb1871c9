import csv
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bbpsim.analytics.models import (
    AnalyticParams,
    ParamError,
    fork_probability,
    fork_probability_tps,
    latency_model,
    tps,
    tps_from_sizes,
    transfer_ms,
)
from bbpsim.analytics.reduce import MetricsReport, block_p90s, reduce_trace
from bbpsim.analytics.report import REPORT_COLUMNS, summary_table, write_report
from bbpsim.analytics.stats import nearest_rank
from bbpsim.netsim.config import scenario_from_dict
from bbpsim.netsim.engine import run
from bbpsim.netsim.trace import BlockRow, CommitRow, RawTrace, check_csv
from bbpsim.protocols.messages import BLOCK_TRAFFIC

DEFAULTS = dict(s_h=508, s_hash=72, s_t=250, s_txs=2500, t_g=14_000, t_e=1.8, t_w=1.2,
                t_r=0.004, t_h=4.0, t_c=50.0, t_1=400.0, t_2=100.0, b_w=55e6, n_u=0, h=3.0,
                gamma=0.0, alpha=0.0, beta=0.0)


def params(**kw) -> AnalyticParams:
    return AnalyticParams(**{**DEFAULTS, **kw})


# -- throughput and fork rate ------------------------------------------------------------


def test_tps_examples():
    assert tps(200, 14) == pytest.approx(14.29, abs=0.01)
    assert tps(0, 14) == 0
    assert tps(400, 14) == pytest.approx(2 * tps(200, 14))


def test_tps_from_sizes():
    assert tps_from_sizes(200 * 250, 250, 14) == pytest.approx(tps(200, 14))


def test_tps_rejects_bad_interval():
    with pytest.raises(ParamError):
        tps(10, 0)


def test_fork_probability_anchor():
    assert fork_probability(851, 14_000) == pytest.approx(0.0590, abs=0.0005)


def test_fork_probability_identities():
    assert fork_probability(0, 14_000) == 0
    assert fork_probability(14_000 * math.log(2), 14_000) == pytest.approx(0.5)


@given(st.floats(0.001, 50), st.integers(0, 5000), st.floats(1000, 60_000))
def test_fork_probability_forms_agree(k, n_t, t_g):
    # latency linear in block size: t_l = k * n_t
    assert fork_probability(k * n_t, t_g) == pytest.approx(
        fork_probability_tps(k, tps(n_t, t_g / 1000.0)), rel=1e-9, abs=1e-12)


# -- latency models -------------------------------------------------------------------------


def test_transfer_ms():
    assert transfer_ms(100_000, 55e6) == pytest.approx(800_000 / 55e6 * 1000)


def test_bbp_reduction_frozen():
    # 3 * (500 * 0.004 + 4 + 8000 * 508 / 55e6 + 50) = 168.221673
    assert latency_model("bbp", params(n_t=500)) == pytest.approx(168.221673, abs=1e-6)


def test_lbp_frozen():
    # t_v = 4 + 500 * 3.0; body = 508 + 500 * 250; 3 * (t_v + 8000 * (body + 144) / 55e6 + 150)
    assert latency_model("lbp", params(n_t=500)) == pytest.approx(5016.829964, abs=1e-6)


def test_lbp_exceeds_bbp_by_3x_at_500():
    p = params(n_t=500)
    assert latency_model("lbp", p) >= 3 * latency_model("bbp", p)


def test_bhp_alpha_zero_reduction():
    p = params(n_t=200)
    s_b = 508 + 200 * 250
    expect = 3.0 * (4.0 + transfer_ms(s_b, 55e6) + 50.0)
    assert latency_model("bhp", p) == pytest.approx(expect)


def test_bhp_hash_term():
    p0, p1 = params(n_t=200), params(n_t=200, alpha=0.25)
    extra = 0.25 * 3.0 * (200 * 3.0 + transfer_ms(3 * 72, 55e6) + 4 * 50 + 400 + 100)
    assert latency_model("bhp", p1) - latency_model("bhp", p0) == pytest.approx(extra)


def test_cbp_beta_term():
    p0, p1 = params(n_t=200), params(n_t=200, beta=0.5)
    extra = 0.5 * 3.0 * (2 * 50 + transfer_ms(72 + 2500, 55e6))
    assert latency_model("cbp", p1) - latency_model("cbp", p0) == pytest.approx(extra)


def test_cbp_uses_compact_size():
    p = params(n_t=200)
    s_c = 508 + 200 * 72
    expect = 3.0 * (4 + 200 * 3.0 + 3 * 50 + transfer_ms(2 * 72 + s_c, 55e6))
    assert latency_model("cbp", p) == pytest.approx(expect)


def test_bbp_full_path_term():
    p = params(n_t=100, gamma=1.0)
    s_b = 508 + 100 * 250
    expect = 3.0 * (100 * 1.8 + 100 * 1.2 + 4 + transfer_ms(s_b, 55e6) + 50)
    assert latency_model("bbp", p) == pytest.approx(expect)


def test_bbp_reduction_ignores_execution_and_body_size():
    rnd = random.Random(4)
    for _ in range(100):
        base = {k: rnd.uniform(0.1, 100) for k in ("t_r", "t_h", "t_c", "h", "n_t")}
        base.update(s_h=rnd.uniform(100, 1000), b_w=rnd.uniform(1e6, 1e8), gamma=0.0, n_u=0.0)
        vals = {latency_model("bbp", AnalyticParams(
            **base, t_e=rnd.uniform(0, 50), t_w=rnd.uniform(0, 50),
            s_b=rnd.uniform(0, 1e7))) for _ in range(3)}
        assert len(vals) == 1


positive = st.floats(0.0, 1000.0)


@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 3000), st.integers(0, 3000),
       positive, positive, st.floats(0.0, 10.0))
def test_bbp_monotone_in_gamma_and_n_u(g1, g2, a, b, t_e, t_w, t_r):
    n_t = 3000
    lo_u, hi_u = sorted((a, b))
    lo_g, hi_g = sorted((g1, g2))
    p = dict(DEFAULTS, n_t=n_t, t_e=t_e, t_w=t_w, t_r=min(t_r, t_e))
    assert latency_model("bbp", AnalyticParams(**{**p, "gamma": lo_g, "n_u": lo_u})) <= \
        latency_model("bbp", AnalyticParams(**{**p, "gamma": lo_g, "n_u": hi_u})) + 1e-9
    assert latency_model("bbp", AnalyticParams(**{**p, "gamma": lo_g, "n_u": lo_u})) <= \
        latency_model("bbp", AnalyticParams(**{**p, "gamma": hi_g, "n_u": lo_u})) + 1e-9


def test_missing_symbol_is_named():
    with pytest.raises(ParamError) as e:
        latency_model("bhp", AnalyticParams(n_t=10, h=1, alpha=0.5))
    assert e.value.name in {"t_e", "t_w", "t_h", "t_c", "b_w", "s_b", "s_hash"}
    with pytest.raises(ParamError) as e:
        latency_model("bhp", params(n_t=10, alpha=0.5, t_1=None))
    assert e.value.name == "t_1"


@pytest.mark.parametrize("field, value", [("gamma", 1.5), ("beta", -0.1), ("t_e", -1.0),
                                          ("b_w", 0.0), ("h", float("nan"))])
def test_param_validation(field, value):
    with pytest.raises(ParamError) as e:
        params(**{field: value})
    assert e.value.name == field


def test_n_u_cannot_exceed_n_t():
    with pytest.raises(ParamError):
        params(n_t=10, n_u=11)


def test_unknown_protocol():
    with pytest.raises(ParamError):
        latency_model("xyz", params(n_t=1))


def test_derived_sizes():
    p = AnalyticParams(s_h=500, s_t=250, s_hash=72, n_t=4)
    assert p.need("s_b", "s_c") == [500 + 4 * 250, 500 + 4 * 72]
    assert AnalyticParams(s_b=7, s_h=500, s_t=250, n_t=4).need("s_b") == [7]


# -- percentile -----------------------------------------------------------------------------


def brute_percentile(values, q):
    ordered = sorted(values)
    for v in ordered:
        if sum(x <= v for x in ordered) * 100 >= q * len(ordered):
            return v
    return ordered[-1]


@given(st.lists(st.one_of(st.floats(0, 1e5), st.just(math.inf)), min_size=1, max_size=100),
       st.sampled_from([50, 90, 99, 100]))
def test_nearest_rank_matches_brute_force(values, q):
    assert nearest_rank(values, q) == brute_percentile(values, q)


def test_nearest_rank_errors():
    with pytest.raises(ValueError):
        nearest_rank([], 90)
    with pytest.raises(ValueError):
        nearest_rank([1.0], 0)


# -- trace reduction ----------------------------------------------------------------------------


def synthetic(n=10, delay=100.0, protocol="bbp", paths=None) -> RawTrace:
    tr = RawTrace(n, protocol, 1, 0)
    b = BlockRow("aa", 1, "00", 0, 1000.0, 0, 0, canonical=True)
    tr.blocks.append(b)
    for node in range(n):
        path = (paths or {}).get(node, "fast")
        tr.commits.append(CommitRow("aa", node, 1000.0 + delay, path, 1, 0, 10.0, 1.0))
    return tr


def test_uniform_commit_delay_gives_p90():
    assert block_p90s(synthetic())["aa"] == pytest.approx(100.0)
    assert reduce_trace(synthetic()).p90_ms == pytest.approx(100.0)


def test_no_full_blocks_means_gamma_zero():
    assert reduce_trace(synthetic()).gamma == 0.0
    m = reduce_trace(synthetic(paths={3: "full"}))
    assert m.gamma == pytest.approx(0.1)


def test_unreached_block_excluded_from_p90():
    tr = synthetic()
    tr.commits = tr.commits[:5]         # only half the nodes commit
    assert block_p90s(tr) == {}
    assert math.isnan(reduce_trace(tr).p90_ms)


def test_empty_trace_is_an_error():
    with pytest.raises(ValueError):
        reduce_trace(RawTrace(4, "bbp", 1, 0))


def test_stale_block_rate():
    tr = synthetic()
    tr.blocks.append(BlockRow("bb", 1, "00", 1, 1001.0, 0, 0, canonical=False))
    assert reduce_trace(tr).stale_block_rate == pytest.approx(0.5)


@pytest.fixture(scope="module")
def cbp_run(tmp_path_factory):
    s = scenario_from_dict({"protocol": "cbp", "n_nodes": 40, "n_t": 40, "run_blocks": 5,
                            "topology": {"attach_m": 4}, "workload": {"late_fraction": 0.3}})
    trace = run(s)
    out = tmp_path_factory.mktemp("cbp")
    trace.write(out)
    return trace, out


def test_traffic_is_sum_of_block_messages(cbp_run):
    trace, out = cbp_run
    with open(out / "messages.csv") as fh:
        total = sum(int(r["bytes"]) for r in csv.DictReader(fh) if r["type"] in BLOCK_TRAFFIC)
    m = reduce_trace(trace)
    assert m.bytes_per_block * len(trace.blocks) == pytest.approx(total)


def test_beta_counts_reconstructions_with_missing(cbp_run):
    trace, _ = cbp_run
    m = reduce_trace(trace)
    canon = {b.block_hash for b in trace.canonical_blocks()}
    recs = [r for r in trace.reconstructions if r[0] in canon]
    assert m.beta == pytest.approx(sum(r[2] > 0 for r in recs) / len(recs))
    assert m.beta > 0.5
    assert m.tx_match_rate > m.block_match_rate


def test_every_cell_carries_its_seed(cbp_run):
    trace, _ = cbp_run
    assert reduce_trace(trace).seed == trace.seed == 1


def test_report_csv_schema(cbp_run, tmp_path):
    trace, _ = cbp_run
    m = reduce_trace(trace)
    write_report([m, m], tmp_path / "report.csv")
    assert check_csv(tmp_path / "report.csv") == 2
    assert REPORT_COLUMNS[:11] == ("protocol", "n_t", "seed", "p90_ms", "p90_model_ms",
                                   "bytes_per_block", "sync_fail_frac", "beta", "gamma",
                                   "stale_tx", "stale_block_rate")


def test_summary_table_has_one_line_per_cell(cbp_run):
    m = reduce_trace(cbp_run[0])
    lines = summary_table([m, m]).splitlines()
    assert len(lines) == 4 and lines[2].split()[0] == "cbp"


def test_model_tracks_simulation_for_default_bbp():
    s = scenario_from_dict({"run_blocks": 10})
    m = reduce_trace(run(s))
    assert not math.isnan(m.gamma) and m.hops > 1
    assert m.p90_model_ms == pytest.approx(m.p90_ms, rel=0.30)


def test_metrics_report_is_a_plain_record():
    m = MetricsReport("lbp", 1, 2, 1.0, 2.0, 3.0, float("nan"), float("nan"), float("nan"),
                      0, 0.0)
    assert m.status == "ok" and m.blocks == 0
