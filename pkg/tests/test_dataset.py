import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marketdef.dataset import (
    FeatureSpec,
    ProductFeatureMatrix,
    collapse_columns,
    constant_columns,
    csv_text,
    drop_columns,
    load_csv,
    pca2,
    sample_size,
    standardize,
    write_csv,
)
from marketdef.errors import (
    DegenerateColumnError,
    DimensionError,
    DomainError,
    ParseError,
    SchemaError,
)
from marketdef.simulate import simulate_wholesalers, wholesaler_raw

from oracles import pca_eig_oracle


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def _matrix(values, names=None):
    values = np.asarray(values, dtype=float)
    names = names or [f"f{j}" for j in range(values.shape[1])]
    return ProductFeatureMatrix([f"p{i}" for i in range(len(values))], [FeatureSpec(n) for n in names], values)


def test_minimal_parse(tmp_path):
    p = _write(tmp_path, "product_id,x\na,1\nb,3\n")
    m = load_csv(p, [FeatureSpec("x")], "product_id")
    assert m.values.tolist() == [[1.0], [3.0]]
    assert m.product_ids == ("a", "b")
    assert not m.standardized


def test_missing_column_named(tmp_path):
    p = _write(tmp_path, "product_id,x\na,1\nb,3\n")
    with pytest.raises(SchemaError, match="premium"):
        load_csv(p, [FeatureSpec("premium")], "product_id")


def test_missing_id_column(tmp_path):
    p = _write(tmp_path, "sku,x\na,1\nb,3\n")
    with pytest.raises(SchemaError, match="product_id"):
        load_csv(p, [FeatureSpec("x")], "product_id")


def test_parse_error_names_row_and_column(tmp_path):
    p = _write(tmp_path, "product_id,x,y\na,1,2\nb,3,oops\n")
    with pytest.raises(ParseError) as ei:
        load_csv(p, ["x", "y"], "product_id")
    assert "row 2" in str(ei.value) and "'y'" in str(ei.value)


def test_binary_outside_01(tmp_path):
    p = _write(tmp_path, "product_id,has_gps\na,1\nb,2\n")
    with pytest.raises(DomainError, match="row 2"):
        load_csv(p, [FeatureSpec("has_gps", "binary")], "product_id")


def test_insurance_style_pre_averaging(tmp_path):
    rng = np.random.default_rng(7)
    years = range(2011, 2016)
    cols = [f"{kind}_{y}" for kind in ("liability", "collision", "comprehensive") for y in years]
    vals = rng.uniform(100, 900, (52, 15)).round(2)
    lines = ["state," + ",".join(cols)]
    lines += [f"S{i:02d}," + ",".join(f"{v:.2f}" for v in row) for i, row in enumerate(vals)]
    p = _write(tmp_path, "\n".join(lines) + "\n")
    m = load_csv(p, cols, "state")
    groups = {k: [f"{k}_{y}" for y in years] for k in ("liability", "collision", "comprehensive")}
    avg = collapse_columns(m, groups)
    assert (avg.n, avg.d) == (52, 3)
    np.testing.assert_allclose(avg.values[:, 1], vals[:, 5:10].mean(axis=1), rtol=0, atol=1e-12)


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    m = _matrix(rng.normal(size=(6, 3)) * 10.0 ** rng.integers(-5, 5, (6, 3)))
    p = tmp_path / "out.csv"
    write_csv(m, p)
    back = load_csv(p, m.specs, "product_id")
    assert np.array_equal(back.values, m.values)
    assert csv_text(back) == p.read_text()


def test_standardize_two_points():
    m = standardize(_matrix([[1], [3]]))
    np.testing.assert_allclose(m.values[:, 0], [-np.sqrt(0.5), np.sqrt(0.5)], atol=1e-15)
    assert m.standardized


def test_standardize_leaves_none_columns():
    m = ProductFeatureMatrix(["a", "b", "c"], [FeatureSpec("x"), FeatureSpec("y", transform="none")],
                             [[1, 5], [2, 6], [4, 9]])
    s = standardize(m)
    assert s.values[:, 1].tolist() == [5, 6, 9]


def test_constant_column_is_an_error():
    with pytest.raises(DegenerateColumnError) as ei:
        standardize(_matrix([[1, 2], [1, 3], [1, 4]], ["flat", "ok"]))
    assert ei.value.column == "flat"


def test_drop_constant():
    m = _matrix([[1, 2], [1, 3], [1, 4]], ["flat", "ok"])
    assert constant_columns(m) == ["flat"]
    assert drop_columns(m, ["flat"]).names == ["ok"]


def test_wholesaler_columns_standardized():
    m = simulate_wholesalers(1)
    assert (m.n, m.d) == (30, 9)
    assert np.abs(m.values.mean(axis=0)).max() < 1e-9
    assert np.abs(m.values.std(axis=0, ddof=1) - 1).max() < 1e-9


def test_wholesaler_reproducible_and_seed_dependent():
    assert np.array_equal(wholesaler_raw(5), wholesaler_raw(5))
    assert not np.array_equal(wholesaler_raw(5), wholesaler_raw(6))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 20), st.integers(1, 5))
def test_standardize_idempotent(seed, n, d):
    rng = np.random.default_rng(seed)
    once = standardize(_matrix(rng.normal(3, 5, (n, d))))
    twice = standardize(once)
    assert np.abs(twice.values - once.values).max() <= 1e-12


def test_pca_line():
    t = np.linspace(-2, 3, 7)
    proj = pca2(np.column_stack([t, 2 * t + 1]))
    assert proj.variance_explained[0] == pytest.approx(1.0, abs=1e-9)
    assert proj.variance_explained[1] == 0.0


def test_pca_square_isotropic():
    proj = pca2(np.array([[0, 0], [1, 0], [0, 1], [1, 1]], float) - 0.5)
    np.testing.assert_allclose(proj.variance_explained, [0.5, 0.5], atol=1e-12)


def test_pca_needs_two_columns():
    with pytest.raises(DimensionError):
        pca2(np.ones((5, 1)))


def test_pca_matches_eig_oracle_up_to_sign():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(10, 4))
    proj = pca2(x)
    scores, frac = pca_eig_oracle(x)
    for j in range(2):
        s = np.sign(scores[:, j] @ proj.scores[:, j])
        np.testing.assert_allclose(proj.scores[:, j], s * scores[:, j], atol=1e-8)
    np.testing.assert_allclose(proj.variance_explained, frac, atol=1e-12)
    c = proj.components
    np.testing.assert_allclose(c.T @ c, np.eye(2), atol=1e-8)


def test_pca_sign_convention():
    rng = np.random.default_rng(2)
    c = pca2(rng.normal(size=(12, 3))).components
    for j in range(2):
        assert c[np.argmax(np.abs(c[:, j])), j] >= 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_pca_row_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(9, 3))
    perm = rng.permutation(9)
    a, b = pca2(x), pca2(x[perm])
    for j in range(2):
        s = np.sign(a.scores[perm, j] @ b.scores[:, j]) or 1.0
        np.testing.assert_allclose(b.scores[:, j], s * a.scores[perm, j], atol=1e-8)
    assert sum(a.variance_explained) <= 1 + 1e-9
    assert a.variance_explained[0] >= a.variance_explained[1]


@pytest.mark.parametrize("sigma,width,n", [(1, 4, 1), (2, 1, 64), (1.5, 0.5, 144)])
def test_sample_size(sigma, width, n):
    assert sample_size(sigma, width) == n


def test_sample_size_rejects_zero():
    with pytest.raises(DomainError):
        sample_size(0, 1)
