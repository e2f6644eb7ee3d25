import numpy as np
import pytest

from pplbp.bench import (
    Dataset,
    DatasetError,
    DescriptorCache,
    ExperimentReport,
    Sample,
    SplitProtocol,
    describe_paths,
    load_dataset,
    make_splits,
    read_confusion_csv,
    run_experiment,
    sweep_steps,
    write_report,
    write_sweep,
)
from pplbp.descriptor import DescriptorConfig
from pplbp.imageio import ImageReadError, decode_pgm, save_pgm
from pplbp.lbp import LbpConfig
from pplbp.synthetic import write_grating_dataset

TINY = np.full((3, 3), 7.0)
FAST = DescriptorConfig(steps=3, lbp_set=(LbpConfig(8, 1), LbpConfig(16, 2)))


def make_flat(root, n_classes, per_class):
    for c in range(n_classes):
        d = root / f"class{c:02d}"
        d.mkdir(parents=True)
        for i in range(per_class):
            save_pgm(d / f"{i:03d}.pgm", TINY)
    return root


def make_kth(root, n_classes=11, groups=4, per_group=108):
    for c in range(n_classes):
        for g in range(groups):
            d = root / f"mat{c:02d}" / f"sample_{'abcd'[g]}"
            d.mkdir(parents=True)
            for i in range(per_group):
                save_pgm(d / f"{i:03d}.pgm", TINY)
    return root


@pytest.fixture(scope="module")
def uiuc_like(tmp_path_factory):
    return load_dataset(make_flat(tmp_path_factory.mktemp("uiuc"), 25, 40))


@pytest.fixture(scope="module")
def kth_like(tmp_path_factory):
    return load_dataset(make_kth(tmp_path_factory.mktemp("kth")), layout="kth")


@pytest.fixture(scope="module")
def gratings(tmp_path_factory):
    root = write_grating_dataset(tmp_path_factory.mktemp("gratings"), n_per_class=8, size=32)
    return load_dataset(root)


def test_uiuc_shape(uiuc_like):
    assert len(uiuc_like) == 1000 and uiuc_like.n_classes == 25
    assert uiuc_like.groups is None
    paths = [s.path for s in uiuc_like.samples]
    assert paths == sorted(paths)


def test_kth_shape(kth_like):
    assert len(kth_like) == 4752 and kth_like.n_classes == 11
    assert sorted(set(kth_like.groups.tolist())) == [1, 2, 3, 4]


def test_load_errors(tmp_path):
    make_flat(tmp_path / "one", 1, 3)
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "one")
    root = make_flat(tmp_path / "two", 2, 2)
    (root / "empty").mkdir()
    with pytest.raises(DatasetError, match="empty"):
        load_dataset(root)
    root = make_flat(tmp_path / "bad", 2, 2)
    (root / "class00" / "zz.pgm").write_bytes(b"garbage")
    with pytest.raises(ImageReadError, match="zz.pgm"):
        load_dataset(root)
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "missing")
    with pytest.raises(DatasetError):
        load_dataset(root, layout="weird")


def test_random_half(uiuc_like):
    splits = make_splits(uiuc_like, SplitProtocol("random-half", repetitions=10, seed=3))
    assert len(splits) == 10
    labels = uiuc_like.labels
    for train, test in splits:
        assert train.size == 500 and test.size == 500
        assert not set(train) & set(test)
        assert np.all(np.bincount(labels[train]) == 20)
        assert np.all(np.bincount(labels[test]) == 20)
    assert not np.array_equal(splits[0][0], splits[1][0])


def test_random_half_odd_class_puts_extra_in_test(tmp_path):
    ds = load_dataset(make_flat(tmp_path, 2, 5))
    train, test = make_splits(ds, SplitProtocol(repetitions=1))[0]
    assert np.all(np.bincount(ds.labels[train]) == 2)
    assert np.all(np.bincount(ds.labels[test]) == 3)


def test_splits_deterministic(uiuc_like):
    p = SplitProtocol(seed=42)
    a, b = make_splits(uiuc_like, p), make_splits(uiuc_like, p)
    assert all(np.array_equal(x[0], y[0]) and np.array_equal(x[1], y[1]) for x, y in zip(a, b))
    c = make_splits(uiuc_like, SplitProtocol(seed=43))
    assert not np.array_equal(a[0][0], c[0][0])


@pytest.mark.parametrize("k", [5, 10, 15, 20])
def test_k_per_class(uiuc_like, k):
    for train, test in make_splits(uiuc_like, SplitProtocol("k-per-class", repetitions=2, k=k)):
        assert np.all(np.bincount(uiuc_like.labels[train]) == k)
        assert train.size + test.size == 1000


def test_k_too_large(uiuc_like):
    with pytest.raises(DatasetError):
        make_splits(uiuc_like, SplitProtocol("k-per-class", k=40))


def test_group_holdout(kth_like):
    train, test = make_splits(kth_like, SplitProtocol("group-holdout", train_groups=(1,)))[0]
    assert train.size == 1188 and test.size == 3564
    assert np.all(kth_like.groups[train] == 1)
    all_four = make_splits(kth_like, SplitProtocol("group-holdout"))
    assert len(all_four) == 4
    assert all(tr.size == 1188 for tr, _ in all_four)


def test_group_holdout_needs_groups(uiuc_like):
    with pytest.raises(DatasetError):
        make_splits(uiuc_like, SplitProtocol("group-holdout"))


def test_protocol_validation():
    with pytest.raises(ValueError):
        SplitProtocol("bootstrap")
    with pytest.raises(ValueError):
        SplitProtocol(repetitions=0)
    with pytest.raises(ValueError):
        SplitProtocol("k-per-class")


def test_cache_soundness(gratings, tmp_path):
    paths = [s.path for s in gratings.samples[:4]]
    cold = describe_paths(paths, FAST)
    cache = DescriptorCache(tmp_path / "cache")
    first = describe_paths(paths, FAST, cache=cache)
    warm = describe_paths(paths, FAST, cache=cache)
    assert np.array_equal(cold, first) and np.array_equal(cold, warm)
    assert len(list((tmp_path / "cache").rglob("*.npy"))) == 4


def test_parallel_matches_serial(gratings):
    paths = [s.path for s in gratings.samples[:6]]
    assert np.array_equal(describe_paths(paths, FAST, jobs=1), describe_paths(paths, FAST, jobs=3))


def test_run_experiment_report(gratings, tmp_path):
    proto = SplitProtocol(repetitions=3, seed=1)
    r = run_experiment(gratings, proto, FAST)
    assert len(r.accuracies) == 3
    assert r.confusion.sum() == sum(r.n_test) == 3 * 12
    assert np.all(r.confusion.sum(axis=1) == 3 * 4)
    assert r.mean_accuracy == pytest.approx(np.trace(r.confusion) / r.confusion.sum())
    again = run_experiment(gratings, proto, FAST)
    assert again.accuracies == r.accuracies and np.array_equal(again.confusion, r.confusion)
    cached = run_experiment(gratings, proto, FAST, cache=DescriptorCache(tmp_path / "c"))
    assert cached.accuracies == r.accuracies


def test_single_repetition_std_zero(gratings):
    r = run_experiment(gratings, SplitProtocol(repetitions=1), FAST)
    assert r.std_accuracy == 0.0


def test_sweep(gratings):
    proto = SplitProtocol(repetitions=2)
    rows = sweep_steps(gratings, proto, FAST, [2, 3])
    assert [n for n, _, _ in rows] == [2, 3]
    direct = run_experiment(gratings, proto, FAST.with_steps(2))
    assert rows[0][1] == direct.mean_accuracy
    single = sweep_steps(gratings, proto, FAST, [3])
    assert single[0][1] == run_experiment(gratings, proto, FAST).mean_accuracy


def test_write_report(tmp_path):
    conf = np.diag([10, 10])
    r = ExperimentReport([1.0], conf, ["a", "b"], [20], {"x": 1})
    paths = write_report(r, tmp_path / "out")
    names, back = read_confusion_csv(paths["confusion"])
    assert names == ["a", "b"] and np.array_equal(back, conf)
    assert np.trace(back) / back.sum() == r.mean_accuracy
    heat = decode_pgm(paths["heatmap"].read_bytes())
    assert heat.shape == (2, 2) and heat[0, 0] == 255.0 and heat[0, 1] == 0.0
    assert paths["accuracy"].read_text().splitlines()[0] == "repetition,n_test,accuracy"
    assert paths["config"].exists()


def test_report_roundtrip_accuracy(gratings, tmp_path):
    r = run_experiment(gratings, SplitProtocol(repetitions=2), FAST)
    paths = write_report(r, tmp_path)
    _, conf = read_confusion_csv(paths["confusion"])
    assert np.trace(conf) / conf.sum() == pytest.approx(r.mean_accuracy, abs=1e-15)


def test_write_report_surfaces_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    r = ExperimentReport([1.0], np.eye(2, dtype=int), ["a", "b"], [2])
    with pytest.raises(OSError, match="file"):
        write_report(r, blocker / "sub")


def test_write_sweep(tmp_path):
    p = write_sweep([(10, 0.5, 0.1), (50, 0.75, 0.0)], tmp_path / "s.csv")
    assert p.read_text().splitlines() == ["steps,mean_accuracy,std_accuracy", "10,0.5,0.1", "50,0.75,0.0"]


def test_dataset_needs_two_classes():
    with pytest.raises(DatasetError):
        Dataset("x", [Sample(__import__("pathlib").Path("a"), 0)], ["only"])
