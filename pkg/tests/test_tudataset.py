import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metaview.graphcore import (
    Graph,
    IngestionError,
    MalformedDatasetError,
    canonicalize_features,
    load_tudataset,
    read_tudataset,
    write_tudataset,
)


def write(tmp_path, name, files):
    for suffix, text in files.items():
        (tmp_path / f"{name}_{suffix}.txt").write_text(text)
    return tmp_path


MINIMAL = {"A": "1, 2\n2, 1\n", "graph_indicator": "1\n1\n", "graph_labels": "0\n"}


def test_minimal_dataset(tmp_path):
    graphs = load_tudataset(write(tmp_path, "DS", MINIMAL), "DS")
    assert len(graphs) == 1
    g = graphs[0]
    assert g.n_nodes == 2 and g.n_edges == 1 and g.origin_id == "DS#1"
    assert g.x.shape == (2, 16)


def test_crlf_is_accepted(tmp_path):
    files = {k: v.replace("\n", "\r\n") for k, v in MINIMAL.items()}
    assert load_tudataset(write(tmp_path, "DS", files), "DS")[0].n_edges == 1


@pytest.mark.parametrize("missing", ["A", "graph_indicator", "graph_labels"])
def test_missing_mandatory_file(tmp_path, missing):
    files = {k: v for k, v in MINIMAL.items() if k != missing}
    with pytest.raises(IngestionError, match=f"DS_{missing}.txt"):
        load_tudataset(write(tmp_path, "DS", files), "DS")


def test_edge_to_unknown_node_reports_line(tmp_path):
    files = dict(MINIMAL, A="1, 2\n2, 1\n2, 3\n")
    with pytest.raises(MalformedDatasetError, match=r"DS_A.txt:3"):
        load_tudataset(write(tmp_path, "DS", files), "DS")


def test_edge_across_graphs_is_malformed(tmp_path):
    files = {"A": "1, 2\n2, 3\n", "graph_indicator": "1\n1\n2\n2\n", "graph_labels": "0\n1\n"}
    with pytest.raises(MalformedDatasetError, match="different graphs"):
        load_tudataset(write(tmp_path, "DS", files), "DS")


def test_garbage_line_is_malformed(tmp_path):
    files = dict(MINIMAL, A="1, 2\n2; 1\n")
    with pytest.raises(MalformedDatasetError, match=r"DS_A.txt:2"):
        load_tudataset(write(tmp_path, "DS", files), "DS")


def test_multitask_labels_with_missing_values(tmp_path):
    files = {"A": "1, 2\n2, 1\n3, 4\n4, 3\n", "graph_indicator": "1\n1\n2\n2\n",
             "graph_labels": "0, nan\n1, 1\n"}
    data = read_tudataset(write(tmp_path, "MT", files), "MT")
    assert data.n_tasks == 2
    assert np.isnan(data.labels[0, 1]) and data.labels[1].tolist() == [1.0, 1.0]


def test_mutag_like_fixture(fixtures_dir):
    d = fixtures_dir / "MUTAGLIKE"
    graphs = load_tudataset(d, "MUTAGLIKE")
    # line-count oracle over the fixture files
    n_graph_lines = len((d / "MUTAGLIKE_graph_labels.txt").read_text().split())
    indicator = [int(v) for v in (d / "MUTAGLIKE_graph_indicator.txt").read_text().split()]
    node_labels = [int(v) for v in (d / "MUTAGLIKE_node_labels.txt").read_text().split()]
    assert len(graphs) == n_graph_lines == 188
    assert [g.n_nodes for g in graphs] == [indicator.count(i) for i in range(1, 189)]
    width = max(node_labels) - min(node_labels) + 1
    for g in graphs:
        assert g.x.shape[1] == width
        assert np.all(g.x.sum(1) == 1.0) and set(np.unique(g.x)) <= {0.0, 1.0}
        assert np.array_equal(np.argmax(g.x, 1), g.node_labels)
    assert {g.y for g in graphs} == {-1, 1}


@st.composite
def graph_lists(draw):
    out = []
    for _ in range(draw(st.integers(1, 4))):
        n = draw(st.integers(1, 8))
        edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=12))
        edges = [(a, b) for a, b in edges if a != b]
        x = np.array(draw(st.lists(st.lists(st.floats(-100, 100), min_size=3, max_size=3),
                                   min_size=n, max_size=n)))
        out.append(Graph.from_edges(n, edges, x, y=draw(st.integers(0, 3))))
    return out


@given(graph_lists())
def test_round_trip(tmp_path_factory, graphs):
    d = tmp_path_factory.mktemp("rt")
    write_tudataset(d, "RT", graphs)
    back = load_tudataset(d, "RT")
    assert len(back) == len(graphs)
    for a, b in zip(graphs, back):
        assert np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
        assert np.array_equal(canonicalize_features(a.x, None), b.x)
        assert a.y == b.y


def test_round_trip_with_node_labels(tmp_path):
    g = Graph.from_edges(3, [(0, 1), (1, 2)], np.eye(3), y=1, node_labels=np.array([0, 2, 1]))
    write_tudataset(tmp_path, "NL", [g], write_attributes=False)
    back = load_tudataset(tmp_path, "NL")[0]
    assert back.node_labels.tolist() == [0, 2, 1]
    assert np.array_equal(back.x, np.eye(3)[[0, 2, 1]])
