"""Subset builder: class table, exact totals, determinism, validation."""

import os

import numpy as np
import pytest

from duca.dn4il import (
    DOMAINS,
    BalancePolicy,
    ClassTable,
    build_dn4il,
    materialize,
    validate_manifest,
)
from duca.errors import DataError, ManifestError
from duca.streams import read_manifest, write_manifest


def test_class_table_self_check():
    table = ClassTable()
    assert table.self_check() == []
    assert len(table.class_names) == 100
    assert len(DOMAINS) == 6
    assert table.supercategories["fruits"] == [
        "strawberry", "banana", "pear", "apple", "watermelon"
    ]


def test_class_table_detects_defects():
    table = ClassTable({"one": ["a", "b", "c", "d", "e"], "two": ["a", "x", "y", "z", "w"]})
    problems = table.self_check()
    assert any("20 supercategories" in p for p in problems)
    assert any("duplicate" in p for p in problems)


def _make_tree(root, per_pair=4, skip=()):
    table = ClassTable()
    for domain in DOMAINS:
        for cls in table.class_names:
            d = os.path.join(root, domain, cls)
            os.makedirs(d, exist_ok=True)
            n = per_pair if (domain, cls) not in skip else 1
            for i in range(n):
                with open(os.path.join(d, f"img_{i:03d}.jpg"), "wb") as f:
                    f.write(b"\xff\xd8fake")
    return table


@pytest.fixture()
def tree(tmp_path):
    root = tmp_path / "raw"
    table = _make_tree(str(root))
    return str(root), table


def test_build_hits_exact_totals_and_is_deterministic(tree, tmp_path):
    root, table = tree
    policy = BalancePolicy(train_total=1200, test_total=600, image_size=16)
    out1 = tmp_path / "m1.tsv"
    out2 = tmp_path / "m2.tsv"
    rows, report = build_dn4il(root, table, policy, seed=5, out_path=out1)
    build_dn4il(root, table, policy, seed=5, out_path=out2)
    assert out1.read_bytes() == out2.read_bytes()
    assert report.totals == {"train": 1200, "test": 600}
    assert not report.shortfalls
    train_rows = [r for r in rows if r[3] == "train"]
    test_rows = [r for r in rows if r[3] == "test"]
    assert len(train_rows) == 1200 and len(test_rows) == 600
    # 100 classes x 6 domains all covered
    assert len({r[1] for r in rows}) == 100
    assert len({r[2] for r in rows}) == 6


def test_build_different_seed_differs(tree, tmp_path):
    root, table = tree
    policy = BalancePolicy(train_total=1200, test_total=600, image_size=16)
    a = tmp_path / "a.tsv"
    b = tmp_path / "b.tsv"
    build_dn4il(root, table, policy, seed=0, out_path=a)
    build_dn4il(root, table, policy, seed=1, out_path=b)
    assert a.read_bytes() != b.read_bytes()


def test_shortfall_is_backfilled_and_reported(tmp_path):
    root = tmp_path / "raw"
    skip = {("sketch", "pizza"), ("quickdraw", "cup")}
    table = _make_tree(str(root), skip=skip)
    policy = BalancePolicy(train_total=1200, test_total=600, image_size=16)
    rows, report = build_dn4il(str(root), table, policy, seed=0)
    # totals still exact: other pairs cover the missing rows
    assert report.totals == {"train": 1200, "test": 600}
    assert any("sketch/pizza" in s for s in report.shortfalls)


def test_missing_domain_is_ingestion_error(tmp_path):
    root = tmp_path / "raw"
    table = _make_tree(str(root))
    import shutil

    shutil.rmtree(os.path.join(str(root), "sketch"))
    with pytest.raises(DataError, match="sketch"):
        build_dn4il(str(root), table, BalancePolicy(1200, 600, 16), seed=0)


def test_official_split_lists_respected(tree, tmp_path):
    root, table = tree
    # every img_000 is declared test by the official lists
    for domain in DOMAINS:
        pairs = [f"{domain}/{cls}/img_{i:03d}.jpg" for cls in table.class_names
                 for i in range(4)]
        with open(os.path.join(root, f"{domain}_train.txt"), "w") as f:
            f.writelines(p + " 0\n" for p in pairs if not p.endswith("img_000.jpg"))
        with open(os.path.join(root, f"{domain}_test.txt"), "w") as f:
            f.writelines(p + " 0\n" for p in pairs if p.endswith("img_000.jpg"))
    policy = BalancePolicy(train_total=1200, test_total=600, image_size=16)
    rows, report = build_dn4il(root, table, policy, seed=0)
    for rel, _, _, split in rows:
        if rel.endswith("img_000.jpg"):
            assert split == "test"
        else:
            assert split == "train"


def test_validate_passes_on_built_manifest(tree, tmp_path):
    root, table = tree
    out = tmp_path / "m.tsv"
    build_dn4il(root, table, BalancePolicy(1200, 600, 16), seed=2, out_path=out)
    report = validate_manifest(out, table, root=root)
    assert report.passed, report.summary()
    assert report.domain_counts[("real", "train")] == 200
    assert "PASS" in report.summary()


def test_validate_flags_unknown_class(tmp_path):
    table = ClassTable()
    rows = [("real/not_a_class/x.jpg", 0, 0, "train")]
    path = tmp_path / "bad.tsv"
    write_manifest(path, rows, ["not_a_class"] + table.class_names[1:], DOMAINS, 16)
    report = validate_manifest(path, table)
    assert not report.passed
    assert any("not_a_class" in p for p in report.problems)


def test_validate_flags_duplicate_path_across_splits(tree, tmp_path):
    root, table = tree
    rel = f"real/{table.class_names[0]}/img_000.jpg"
    rows = [(rel, 0, 0, "train"), (rel, 0, 0, "test")]
    path = tmp_path / "dup.tsv"
    write_manifest(path, rows, table.class_names, DOMAINS, 16)
    report = validate_manifest(path, table)
    assert not report.passed
    assert any("duplicate path" in p for p in report.problems)


def test_validate_unparseable_manifest(tmp_path):
    p = tmp_path / "junk.tsv"
    p.write_text("not a manifest\n")
    with pytest.raises(ManifestError):
        validate_manifest(p)


def test_materialize_resizes_referenced_images(tmp_path):
    from PIL import Image

    root = tmp_path / "raw"
    rng = np.random.default_rng(0)
    rel = "real/dog/img.png"
    src = root / rel
    src.parent.mkdir(parents=True)
    Image.fromarray(rng.integers(0, 255, (20, 30, 3), dtype=np.uint8)).save(src)
    table = ClassTable()
    rows = [(rel, table.class_to_id["dog"], 0, "train")]
    mpath = tmp_path / "m.tsv"
    write_manifest(mpath, rows, table.class_names, DOMAINS, 16)
    n = materialize(mpath, str(root), str(tmp_path / "packed"))
    assert n == 1
    with Image.open(tmp_path / "packed" / rel) as im:
        assert im.size == (16, 16)
    # the packed tree plus manifest loads as a domain dataset
    manifest = read_manifest(mpath, root=str(tmp_path / "packed"))
    x = manifest.domains[0].train.take([0])
    assert x.shape == (1, 3, 16, 16)
