import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drex import traceio
from drex.errors import CatalogFormat, SpecInvalid, TraceFormat
from drex.model import MB, TB, DataItem

CAT = "name,capacity_tb,write_bw_mbs,read_bw_mbs,afr\na,12,200,250,0.01\nb,8,150,180,0.02\n"


def test_catalog_parse_units():
    nodes = traceio.parse_catalog(CAT)
    assert [n.id for n in nodes] == [0, 1]
    assert nodes[0].capacity == 12 * TB and nodes[0].write_bw == 200 * MB and nodes[1].afr == 0.02


def test_catalog_crlf_and_blank_lines():
    assert len(traceio.parse_catalog(CAT.replace("\n", "\r\n") + "\r\n")) == 2


@pytest.mark.parametrize(
    "text,line",
    [
        ("wrong,header\n", 1),
        (CAT + "c,1,1,1\n", 4),
        (CAT + "c,1,1,1,1.5\n", 4),
        (CAT + "c,x,1,1,0.1\n", 4),
        (CAT + "c,0,1,1,0.1\n", 4),
        (CAT + "c,nan,1,1,0.1\n", 4),
    ],
)
def test_catalog_errors_name_the_line(text, line):
    with pytest.raises(CatalogFormat) as err:
        traceio.parse_catalog(text)
    assert err.value.line == line


def test_sample_catalogs_load():
    for name in traceio.SAMPLE_CATALOGS:
        nodes = traceio.load_catalog(traceio.sample_catalog_path(name))
        assert len(nodes) == 10


def test_catalog_roundtrip(tmp_path):
    nodes = traceio.parse_catalog(CAT)
    traceio.write_catalog(nodes, tmp_path / "c.csv")
    assert traceio.load_catalog(tmp_path / "c.csv") == nodes


def test_missing_file():
    with pytest.raises(CatalogFormat):
        traceio.load_catalog("/nonexistent/c.csv")
    with pytest.raises(TraceFormat):
        traceio.load_trace("/nonexistent/t.csv")


def test_trace_blank_fields_and_sorting():
    text = "item_id,size_bytes,submit_epoch_s,retention_days,reliability_target\n2,10,5.0,,\n1,20,1.0,30,0.99\n"
    items = traceio.parse_trace(text, default_retention=100)
    assert [d.id for d in items] == [1, 2]
    assert items[1].retention == 100 and items[1].reliability_target is None


def test_trace_duplicate_id():
    text = "item_id,size_bytes,submit_epoch_s,retention_days,reliability_target\n1,10,0,,\n1,10,0,,\n"
    with pytest.raises(TraceFormat) as err:
        traceio.parse_trace(text)
    assert err.value.line == 3


@given(st.integers(0, 50), st.integers(0, 10_000), st.sampled_from(["uniform", "poisson"]))
def test_gen_trace_roundtrip(count, seed, arrival):
    items = traceio.gen_trace(count, arrival=arrival, seed=seed, reliability_target=0.99)
    buf = io.StringIO()
    traceio.write_trace(items, buf)
    assert traceio.parse_trace(buf.getvalue()) == traceio.sort_trace(items)
    assert traceio.gen_trace(count, arrival=arrival, seed=seed, reliability_target=0.99) == items


def test_gen_trace_moments():
    items = traceio.gen_trace(20_000, mean_size=100 * MB, std_size=40 * MB, seed=1)
    sizes = np.array([d.size for d in items], dtype=float)
    assert sizes.mean() == pytest.approx(100 * MB, rel=0.02)
    assert sizes.std() == pytest.approx(40 * MB, rel=0.05)


def test_gen_trace_empirical_and_errors():
    items = traceio.gen_trace(50, "empirical", empirical_sizes=[5, 7], seed=0)
    assert {d.size for d in items} <= {5, 7}
    with pytest.raises(SpecInvalid):
        traceio.gen_trace(5, "empirical")
    with pytest.raises(SpecInvalid):
        traceio.gen_trace(-1)
    with pytest.raises(SpecInvalid):
        traceio.gen_trace(5, "weibull")


def test_meva_like_statistics():
    items = traceio.meva_like_trace()
    sizes = np.array([d.size for d in items], dtype=float)
    st_ = traceio.MEVA_STATS
    assert len(items) == st_["count"]
    assert sizes.mean() == pytest.approx(st_["mean"], rel=1e-3)
    assert sizes.min() == pytest.approx(st_["min"], rel=1e-6)
    assert sizes.max() == pytest.approx(st_["max"], rel=1e-6)


def test_bundled_trace_matches_generator():
    bundled = traceio.load_trace(traceio.sample_trace_path())
    assert [d.size for d in bundled] == [d.size for d in traceio.sort_trace(traceio.meva_like_trace())]


def test_rt_sampler_range():
    rng = np.random.default_rng(0)
    vals = {traceio.sample_reliability_target(rng) for _ in range(2000)}
    assert min(vals) >= 0.9 and max(vals) < 1
    assert 0.9999999 in vals
    assert any(0.9 <= v <= 0.99 for v in vals)
    # one draw per band: about a seventh lands in each of the seven bands
    low = sum(v < 0.99 for v in (traceio.sample_reliability_target(rng) for _ in range(7000)))
    assert 800 < low < 1200


def test_trim_and_repeat():
    items = [DataItem(i, 10, float(i)) for i in range(5)]
    assert len(traceio.trim_to(items, 35)) == 3
    grown = traceio.repeat_to(items, 120)
    assert traceio.trace_total(grown) == 120
    assert len({d.id for d in grown}) == len(grown)
    assert [d.submit_time for d in grown] == sorted(d.submit_time for d in grown)


def test_scale_catalog():
    nodes = traceio.scale_catalog(traceio.parse_catalog(CAT), 0.5)
    assert nodes[0].capacity == 6 * TB and nodes[0].free == 6 * TB
    with pytest.raises(ValueError):
        traceio.scale_catalog(nodes, 0)


def test_summary_csv_header():
    buf = io.StringIO()
    traceio.write_summary_csv([{"scheduler": "x", "proportion": "0.5"}], buf)
    head, row = buf.getvalue().splitlines()
    assert head.split(",") == traceio.SUMMARY_HEADER
    assert row.startswith("x,")
