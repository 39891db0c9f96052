"""Regenerate the TUDataset-layout fixtures under tests/fixtures/.

Plain Python only, so the fixtures stay independent of the package they test.
Run: python3 tests/fixtures/make_fixtures.py
"""
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent


def random_connected(rng, n, extra):
    edges = set()
    for v in range(1, n):
        u = rng.randrange(v)
        edges.add((u, v))
    for _ in range(extra):
        a, b = rng.sample(range(n), 2)
        edges.add((min(a, b), max(a, b)))
    return n, sorted(edges)


def star(n_leaves):
    return n_leaves + 1, [(0, i) for i in range(1, n_leaves + 1)]


def two_edges():
    return 4, [(0, 1), (2, 3)]


def big_ladder(n):
    # connected, max degree 3: a ladder on n nodes (n even)
    half = n // 2
    edges = [(i, i + 1) for i in range(half - 1)]
    edges += [(half + i, half + i + 1) for i in range(half - 1)]
    edges += [(i, half + i) for i in range(half)]
    return n, edges


def write_dataset(root, name, graphs, labels, node_labels=None, attributes=None):
    """graphs: list of (n, edges); labels: list of label rows (strings)."""
    d = root / name
    d.mkdir(parents=True, exist_ok=True)
    a_lines, ind, nl_lines, at_lines = [], [], [], []
    offset = 0
    for gid, (n, edges) in enumerate(graphs, start=1):
        for u, v in edges:
            a_lines.append(f"{u + offset + 1}, {v + offset + 1}")
            a_lines.append(f"{v + offset + 1}, {u + offset + 1}")
        ind.extend([str(gid)] * n)
        if node_labels is not None:
            nl_lines.extend(str(x) for x in node_labels[gid - 1])
        if attributes is not None:
            at_lines.extend(", ".join(repr(float(x)) for x in row) for row in attributes[gid - 1])
        offset += n
    (d / f"{name}_A.txt").write_text("\n".join(a_lines) + "\n")
    (d / f"{name}_graph_indicator.txt").write_text("\n".join(ind) + "\n")
    (d / f"{name}_graph_labels.txt").write_text("\n".join(labels) + "\n")
    if node_labels is not None:
        (d / f"{name}_node_labels.txt").write_text("\n".join(nl_lines) + "\n")
    if attributes is not None:
        (d / f"{name}_node_attributes.txt").write_text("\n".join(at_lines) + "\n")


def mutag_like(rng):
    graphs, labels, nls = [], [], []
    for i in range(188):
        n = rng.randint(10, 28)
        graphs.append(random_connected(rng, n, rng.randint(0, 3)))
        labels.append("1" if i % 3 else "-1")
        nls.append([rng.randrange(7) for _ in range(n)])
    write_dataset(HERE, "MUTAGLIKE", graphs, labels, node_labels=nls)


def corpus(rng):
    root = HERE / "corpus"

    # MOLA: 2 classes x 80, node labels, plus a degree-51 star and a disconnected graph
    graphs, labels, nls = [], [], []
    for i in range(160):
        n = rng.randint(6, 16)
        graphs.append(random_connected(rng, n, 2))
        labels.append(str(i % 2))
    graphs.append(star(51))
    labels.append("0")
    graphs.append(two_edges())
    labels.append("1")
    nls = [[rng.randrange(4) for _ in range(n)] for n, _ in graphs]
    write_dataset(root, "MOLA", graphs, labels, node_labels=nls)

    # MOLB: 2 classes x 75, 5-dim attributes, one 600-node graph needing subsampling
    graphs, labels = [], []
    for i in range(150):
        n = rng.randint(6, 16)
        graphs.append(random_connected(rng, n, 1))
        labels.append(str(i % 2))
    graphs.append(big_ladder(600))
    labels.append("1")
    attrs = [[[rng.random() for _ in range(5)] for _ in range(n)] for n, _ in graphs]
    write_dataset(root, "MOLB", graphs, labels, attributes=attrs)

    # MOLMT: 3 label columns over 400 graphs; column 2 has only 30 positives
    graphs, labels = [], []
    for i in range(400):
        n = rng.randint(6, 12)
        graphs.append(random_connected(rng, n, 1))
        c0 = str(i % 2)
        c1 = "nan" if i % 10 == 9 else str((i // 2) % 2)
        c2 = "1" if i < 30 else "0"
        labels.append(f"{c0}, {c1}, {c2}")
    nls = [[rng.randrange(3) for _ in range(n)] for n, _ in graphs]
    write_dataset(root, "MOLMT", graphs, labels, node_labels=nls)

    # MOLMC: 4 classes x 75
    graphs, labels = [], []
    for i in range(300):
        n = rng.randint(6, 12)
        graphs.append(random_connected(rng, n, 1))
        labels.append(str(i % 4))
    nls = [[rng.randrange(5) for _ in range(n)] for n, _ in graphs]
    write_dataset(root, "MOLMC", graphs, labels, node_labels=nls)

    # BIOA: 2 classes x 75, 3-dim attributes
    graphs, labels = [], []
    for i in range(150):
        n = rng.randint(10, 24)
        graphs.append(random_connected(rng, n, 4))
        labels.append(str(i % 2 + 1))
    attrs = [[[rng.random() for _ in range(3)] for _ in range(n)] for n, _ in graphs]
    write_dataset(root, "BIOA", graphs, labels, attributes=attrs)

    # SOCA: 3 classes of 75/72/70, featureless
    graphs, labels = [], []
    for c, count in enumerate((75, 72, 70)):
        for _ in range(count):
            n = rng.randint(8, 20)
            graphs.append(random_connected(rng, n, 3))
            labels.append(str(c))
    write_dataset(root, "SOCA", graphs, labels)


if __name__ == "__main__":
    rng = random.Random(20240611)
    mutag_like(rng)
    corpus(rng)
