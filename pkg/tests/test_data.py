"""Dataset synthesis, CSV loading, splitting and preprocessing."""

import numpy as np
import pytest

from nonadv.data import (FeatureSchema, LabeledDataset, SyntheticSpec,
                         flip_labels, generate_synthetic, load_csv, preprocess,
                         split_indices, split_three_way, subrng, subseed)
from nonadv.errors import ConfigurationError, ContractError, ParseError


def test_subseed_is_deterministic_and_tag_sensitive():
    assert subseed(0, 1) == subseed(0, 1)
    assert subseed(0, 1) != subseed(0, 2)
    assert subseed(1, 1) != subseed(0, 1)
    a = subrng(5, 3).integers(0, 1000, 8)
    b = subrng(5, 3).integers(0, 1000, 8)
    assert np.array_equal(a, b)


def test_schema_validation_rejects_duplicates_and_bad_kinds():
    with pytest.raises(ConfigurationError):
        FeatureSchema(names=("a", "a"), kinds=("continuous", "continuous"),
                      actionable=(True, True), discriminative=(False, False))
    with pytest.raises(ConfigurationError):
        FeatureSchema(names=("a",), kinds=("blob",), actionable=(True,),
                      discriminative=(False,))


def test_schema_continuous_helper():
    schema = FeatureSchema.continuous(
        ("a", "b", "c", "d"), discriminative=(False, True, False, True))
    assert schema.k == 4
    assert schema.disc_indices().tolist() == [1, 3]
    assert schema.actionable_mask().all()


def test_generate_synthetic_contract():
    spec = SyntheticSpec(n=300, k=7, disc_indices=(0, 2), alpha=1.5,
                         sigma=0.0, seed=11)
    ds, beta = generate_synthetic(spec)
    assert ds.X.shape == (300, 7)
    assert ds.y.shape == (300,)
    assert set(np.unique(ds.y)) <= {0, 1}
    mags = np.abs(beta[[0, 2]])
    assert np.all(mags >= 1.5) and np.all(mags <= 3.0)
    off = np.delete(beta, [0, 2])
    assert np.all(off == 0.0)
    # noiseless latent is exactly the linear score
    assert np.allclose(ds.latent, ds.X @ beta, atol=0.0)
    assert np.array_equal(ds.y, (ds.latent > 0).astype(int))
    assert ds.schema.disc_indices().tolist() == [0, 2]


def test_generate_synthetic_seed_reproducibility():
    spec = SyntheticSpec(n=50, k=4, disc_indices=(0,), seed=3)
    a, beta_a = generate_synthetic(spec)
    b, beta_b = generate_synthetic(spec)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(beta_a, beta_b)
    c, _ = generate_synthetic(SyntheticSpec(n=50, k=4, disc_indices=(0,), seed=4))
    assert not np.array_equal(a.X, c.X)


def test_generate_synthetic_noise_changes_labels_only_through_latent():
    spec = SyntheticSpec(n=400, k=5, disc_indices=(0,), sigma=2.0, seed=7)
    ds, beta = generate_synthetic(spec)
    assert np.array_equal(ds.y, (ds.latent > 0).astype(int))
    assert not np.allclose(ds.latent, ds.X @ beta)


def test_split_indices_partition_and_sizes():
    parts = split_indices(100, (0.2, 0.6, 0.2), seed=0)
    assert [len(p) for p in parts] == [20, 60, 20]
    merged = np.sort(np.concatenate(parts))
    assert np.array_equal(merged, np.arange(100))
    again = split_indices(100, (0.2, 0.6, 0.2), seed=0)
    for p, q in zip(parts, again):
        assert np.array_equal(p, q)


def test_split_indices_rejects_empty_part():
    with pytest.raises(ConfigurationError):
        split_indices(4, (0.01, 0.98, 0.01), seed=0)


def test_split_three_way_matches_split_indices():
    ds, _ = generate_synthetic(SyntheticSpec(n=60, k=3, disc_indices=(0,), seed=1))
    a, b, c = split_three_way(ds, (0.2, 0.6, 0.2), seed=9)
    assert (a.n, b.n, c.n) == (12, 36, 12)


def test_flip_labels_exact_count():
    ds, _ = generate_synthetic(SyntheticSpec(n=80, k=3, disc_indices=(0,), seed=2))
    noisy = flip_labels(ds, 0.25, seed=5)
    assert int(np.sum(noisy.y != ds.y)) == 20
    clean = flip_labels(ds, 0.0, seed=5)
    assert np.array_equal(clean.y, ds.y)


def test_load_csv_with_categories_and_label_mapping(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text(
        "age,job,outcome\n"
        "30,clerk,good\n"
        "41,manager,bad\n"
        "25,clerk,good\n")
    schema = FeatureSchema(
        names=("age", "job"), kinds=("continuous", "categorical"),
        actionable=(True, True), discriminative=(True, False),
        categories={"job": ("clerk", "manager")})
    ds = load_csv(str(path), schema, "outcome")
    assert ds.X.shape == (3, 2)
    # label 1 is the lexicographically larger raw value ("good")
    assert ds.y.tolist() == [1, 0, 1]
    # ordinal encoding follows the declared category order
    assert ds.X[:, 1].tolist() == [0.0, 1.0, 0.0]


def test_load_csv_reports_row_and_column_on_bad_cell(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("age,outcome\nten,yes\n")
    schema = FeatureSchema.continuous(("age",))
    with pytest.raises(ParseError) as err:
        load_csv(str(path), schema, "outcome")
    assert "age" in str(err.value)


def test_preprocess_standardizes_and_one_hot_expands():
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.normal(5.0, 2.0, 40), rng.integers(0, 3, 40)])
    y = rng.integers(0, 2, 40)
    schema = FeatureSchema(
        names=("income", "region"), kinds=("continuous", "categorical"),
        actionable=(True, False), discriminative=(True, False),
        categories={"region": ("north", "south", "east")})
    ds = LabeledDataset(X.astype(float), y.astype(int), schema)
    fit_rows = np.arange(30)
    out, transform = preprocess(ds, fit_rows)
    assert out.schema.names[0] == "income"
    assert "region=north" in out.schema.names
    assert out.k == 1 + 3
    assert abs(out.X[:30, 0].mean()) < 1e-9
    assert abs(out.X[:30, 0].std() - 1.0) < 1e-9
    onehot = out.X[:, 1:]
    assert np.array_equal(onehot.sum(axis=1), np.ones(40))
    # indicator columns inherit the parent's actionability
    assert out.schema.actionable[1:] == (False, False, False)


def test_preprocess_rejects_constant_continuous_feature():
    X = np.column_stack([np.ones(10), np.arange(10.0)])
    schema = FeatureSchema.continuous(("flat", "ok"))
    ds = LabeledDataset(X, np.zeros(10, dtype=int), schema)
    with pytest.raises(ConfigurationError) as err:
        preprocess(ds, np.arange(10))
    assert "flat" in str(err.value)


def test_standardize_transform_round_trip():
    rng = np.random.default_rng(1)
    X = rng.normal(3.0, 4.0, (25, 3))
    schema = FeatureSchema.continuous(("u", "v", "w"))
    ds = LabeledDataset(X, np.zeros(25, dtype=int), schema)
    out, transform = preprocess(ds, np.arange(25))
    back = transform.invert(out.X)
    assert np.allclose(back, X, atol=1e-12)


def test_dataset_validation():
    schema = FeatureSchema.continuous(("u", "v"))
    with pytest.raises(ContractError):
        LabeledDataset(np.array([[1.0, np.nan]]), np.array([0]), schema)
    with pytest.raises(ContractError):
        LabeledDataset(np.ones((2, 2)), np.array([0, 2]), schema)
