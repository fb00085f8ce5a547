import numpy as np
import pytest

from betadrop.errors import ConfigError, DataError
from betadrop.kernels import KERNEL_KINDS, KernelConfig, kernel_map, output_dim


def test_squared_is_elementwise_square():
    out = kernel_map(np.array([2.0, -3.0]), KernelConfig(kind="squared"))
    assert np.array_equal(out, [4.0, 9.0])


def test_linear_is_identity():
    x = np.array([0.1, -0.5, 7.0])
    assert np.array_equal(kernel_map(x, KernelConfig(kind="linear")), x)


def test_sigmoid_is_tanh_of_scaled_input():
    x = np.array([0.3, -1.2, 4.0])
    out = kernel_map(x, KernelConfig(kind="sigmoid", scale=0.5))
    assert np.allclose(out, np.tanh(0.5 * x), rtol=0, atol=0)


def test_concat_original_appends_raw_vector():
    x = np.array([2.0, -3.0])
    out = kernel_map(x, KernelConfig(kind="squared", concat_original=True))
    assert np.array_equal(out, [4.0, 9.0, 2.0, -3.0])


@pytest.mark.parametrize(
    "cfg,input_dim,expected",
    [
        (KernelConfig(kind="squared"), 768, 768),
        (KernelConfig(kind="squared", concat_original=True), 768, 1536),
        (KernelConfig(kind="rbf_rff", rff_dim=1024), 768, 1024),
        (KernelConfig(kind="linear"), 12, 12),
        (KernelConfig(kind="laplacian_rff", rff_dim=64, concat_original=True), 10, 74),
    ],
)
def test_output_dim(cfg, input_dim, expected):
    assert output_dim(cfg, input_dim) == expected


@pytest.mark.parametrize("kind", KERNEL_KINDS)
@pytest.mark.parametrize("concat", [False, True])
def test_output_dim_matches_map_length(kind, concat):
    cfg = KernelConfig(kind=kind, rff_dim=32, gamma=0.7, concat_original=concat)
    for d in (1, 3, 17):
        x = np.random.default_rng(d).standard_normal(d)
        assert len(kernel_map(x, cfg)) == output_dim(cfg, d)


@pytest.mark.parametrize("kind", KERNEL_KINDS)
def test_map_is_deterministic(kind):
    cfg = KernelConfig(kind=kind, rff_dim=64, gamma=0.3)
    x = np.random.default_rng(5).standard_normal(6)
    a = kernel_map(x, cfg)
    b = kernel_map(x.copy(), cfg)
    assert np.array_equal(a, b)


def test_squared_map_is_even():
    cfg = KernelConfig(kind="squared")
    x = np.random.default_rng(2).standard_normal(9)
    assert np.array_equal(kernel_map(x, cfg), kernel_map(-x, cfg))


def _pair_errors(kind: str, gamma: float, rff_dim: int, n_pairs: int = 100) -> float:
    """Mean |phi(x).phi(y) - k(x,y)| over random pairs in [-1,1]^8."""
    cfg = KernelConfig(kind=kind, gamma=gamma, rff_dim=rff_dim, rff_seed=7)
    rng = np.random.default_rng(123)
    errs = []
    for _ in range(n_pairs):
        x = rng.uniform(-1, 1, 8)
        y = rng.uniform(-1, 1, 8)
        approx = float(kernel_map(x, cfg) @ kernel_map(y, cfg))
        if kind == "rbf_rff":
            exact = float(np.exp(-gamma * np.sum((x - y) ** 2)))
        else:
            exact = float(np.exp(-gamma * np.sum(np.abs(x - y))))
        errs.append(abs(approx - exact))
    return float(np.mean(errs))


def test_rbf_rff_matches_exact_gaussian_kernel():
    # oracle: the closed-form Gaussian kernel on each pair
    assert _pair_errors("rbf_rff", gamma=0.5, rff_dim=2048) < 0.05


def test_laplacian_rff_matches_exact_laplacian_kernel():
    assert _pair_errors("laplacian_rff", gamma=0.5, rff_dim=4096) < 0.08


@pytest.mark.parametrize("kind", ["rbf_rff", "laplacian_rff"])
def test_rff_error_decreases_with_dimension(kind):
    assert _pair_errors(kind, 0.5, 1024) < _pair_errors(kind, 0.5, 64)


def test_non_finite_input_rejected_with_index():
    x = np.array([1.0, np.nan, 2.0])
    with pytest.raises(DataError, match="index 1"):
        kernel_map(x, KernelConfig(kind="linear"))
    x = np.array([np.inf, 2.0])
    with pytest.raises(DataError, match="index 0"):
        kernel_map(x, KernelConfig(kind="squared"))


def test_zero_dimension_rejected():
    with pytest.raises(DataError):
        kernel_map(np.array([]), KernelConfig(kind="linear"))
    with pytest.raises(ConfigError):
        output_dim(KernelConfig(kind="linear"), 0)


def test_bad_config_rejected():
    with pytest.raises(ConfigError):
        kernel_map(np.ones(3), KernelConfig(kind="warp"))
    with pytest.raises(ConfigError):
        output_dim(KernelConfig(kind="rbf_rff", gamma=-1.0), 4)
    with pytest.raises(ConfigError):
        output_dim(KernelConfig(kind="rbf_rff", rff_dim=0), 4)
