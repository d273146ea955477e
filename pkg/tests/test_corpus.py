import pytest

from smmpipe.corpus import (LabeledDataset, LabelSpace, Platform, TextSample, class_distribution,
                            filter_by_platform, load_dataset, synthetic_dataset, write_dataset)
from smmpipe.errors import DuplicateId, LabelOutOfSpace, MalformedRow, UnlabeledSample

T3 = LabelSpace.for_task("task3")
T5 = LabelSpace.for_task("task5")


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_label_spaces():
    assert T3.labels == (0, 1, 2, 3)
    assert LabelSpace.for_task("task6").labels == (0, 1)
    with pytest.raises(ValueError):
        LabelSpace("task5", (0, 1, 2))
    with pytest.raises(ValueError):
        LabelSpace.for_task("task4")


def test_load_basic(tmp_path):
    p = write(tmp_path, 'id,text,label,platform\n'
                        'a,"went hiking, felt great",1,reddit\n'
                        'b,"line one\nline two",0,twitter\n'
                        'c,no label here,,\n')
    ds = load_dataset(p, "csv", T3)
    assert ds.ids == ["a", "b", "c"]
    assert ds["a"].text == "went hiking, felt great"
    assert ds["b"].text == "line one\nline two"
    assert ds["a"].platform is Platform.REDDIT
    assert ds["c"].gold_label is None
    assert ds["c"].platform is Platform.UNKNOWN


def test_load_tsv_without_optional_columns(tmp_path):
    p = write(tmp_path, "id\ttext\nx\thello\ny\tworld\n", "d.tsv")
    ds = load_dataset(p, label_space=T5)
    assert [s.platform for s in ds] == [Platform.UNKNOWN] * 2
    assert all(s.gold_label is None for s in ds)


def test_header_only_is_empty(tmp_path):
    ds = load_dataset(write(tmp_path, "id,text,label\n"), "csv", T5)
    assert len(ds) == 0
    assert class_distribution(ds).total == 0
    assert class_distribution(ds).counts == {0: 0, 1: 0}


@pytest.mark.parametrize("body, err, row", [
    ("id,text,label\na,x,4\n", LabelOutOfSpace, 1),
    ("id,text,label\na,x,0\na,y,1\n", DuplicateId, 2),
    ("id,text,label\na,x,0\nb,y\n", MalformedRow, 2),
    ("id,text,label\na,x,zero\n", MalformedRow, 1),
    ("id,text,label\na,   ,0\n", MalformedRow, 1),
])
def test_load_errors_name_row(tmp_path, body, err, row):
    with pytest.raises(err) as info:
        load_dataset(write(tmp_path, body), "csv", T3)
    assert info.value.row == row
    assert f"row {row}" in str(info.value)


def test_missing_required_column(tmp_path):
    with pytest.raises(MalformedRow):
        load_dataset(write(tmp_path, "ident,text\n1,x\n"), "csv", T3)


def test_trailing_crlf_stripped_only(tmp_path):
    p = tmp_path / "crlf.csv"
    p.write_bytes(b'id,text\r\na,"  spaced text \r\n"\r\n')
    ds = load_dataset(p, "csv", T5)
    assert ds["a"].text == "  spaced text "


def test_sample_invariants():
    with pytest.raises(ValueError):
        TextSample("", "text")
    with pytest.raises(ValueError):
        TextSample("a", "   ")


def test_class_distribution_requires_labels(tmp_path):
    ds = load_dataset(write(tmp_path, "id,text,label\na,x,1\nb,y,\n"), "csv", T5)
    with pytest.raises(UnlabeledSample):
        class_distribution(ds)


def test_load_is_deterministic(tmp_path):
    ds = synthetic_dataset("task3", {0: 5, 1: 5, 2: 5, 3: 5}, seed=1, platforms=("reddit",))
    p = write_dataset(ds, tmp_path / "x.csv")
    assert load_dataset(p, label_space=T3) == load_dataset(p, label_space=T3)
    assert load_dataset(p, label_space=T3).samples == ds.samples


def test_filter_by_platform_order():
    samples = [TextSample(f"s{i}", f"t{i}", p, 0)
               for i, p in enumerate(["reddit", "twitter", "reddit", "reddit", "twitter"])]
    ds = LabeledDataset(T5, samples)
    reddit = filter_by_platform(ds, "reddit")
    assert reddit.ids == ["s0", "s2", "s3"]
    assert reddit.label_space == ds.label_space
    assert len(filter_by_platform(ds, Platform.UNKNOWN)) == 0


def test_platform_filters_partition_dataset():
    ds = synthetic_dataset("task6", {0: 40, 1: 21}, seed=9, platforms=("reddit", "twitter"))
    tw = set(filter_by_platform(ds, "twitter").ids)
    rd = set(filter_by_platform(ds, "reddit").ids)
    assert tw.isdisjoint(rd)
    assert tw | rd == set(ds.ids)

    whole = class_distribution(ds).counts
    parts = [class_distribution(filter_by_platform(ds, p)).counts for p in Platform]
    assert {l: sum(c[l] for c in parts) for l in whole} == whole


def test_synthetic_counts_exact():
    ds = synthetic_dataset("task3", {0: 377, 1: 54, 2: 131, 3: 38})
    d = class_distribution(ds)
    assert d.counts == {0: 377, 1: 54, 2: 131, 3: 38}
    assert d.total == 600 == sum(d.counts.values())
