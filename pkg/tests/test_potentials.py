"""Potentials, quadrature, box diagnostics, and the Poincare oracle."""
import math

import numpy as np
import pytest

from se2langevin.errors import BoxTooSmallError, ConfigurationError, TableFormatError
from se2langevin.potentials import (
    DoubleWell,
    Grid2D,
    Quadratic,
    Tabulated,
    check_box,
    from_config,
    gibbs_weights,
    growth_constant,
    normalization,
    poincare_constant,
)

STANDARD = Quadratic(1.0, 1.0)
BOX = Grid2D.centered(7.5, 7.5, 64, 64)


def test_quadratic_pointwise():
    pot = Quadratic(2.0, 3.0)
    assert pot.value(1.0, 1.0) == pytest.approx(2.5)
    g1, g2 = pot.gradient(2.0, -1.0)
    assert (g1, g2) == pytest.approx((4.0, -3.0))
    assert pot.laplacian(0.0, 0.0) == pytest.approx(5.0)


def test_quadratic_needs_positive_curvatures():
    with pytest.raises(ConfigurationError):
        Quadratic(0.0, 1.0)


def test_double_well_gradient_consistent():
    pot = DoubleWell(2.0)
    h = 1e-6
    for x, y in [(0.3, 0.4), (1.2, -0.5), (0.0, 1.0)]:
        g1, g2 = pot.gradient(x, y)
        fd1 = (pot.value(x + h, y) - pot.value(x - h, y)) / (2 * h)
        fd2 = (pot.value(x, y + h) - pot.value(x, y - h)) / (2 * h)
        assert g1 == pytest.approx(fd1, abs=1e-5)
        assert g2 == pytest.approx(fd2, abs=1e-5)
        lap_fd = (
            pot.value(x + h, y) + pot.value(x - h, y)
            + pot.value(x, y + h) + pot.value(x, y - h)
            - 4 * pot.value(x, y)
        ) / h**2
        assert pot.laplacian(x, y) == pytest.approx(lap_fd, rel=1e-3)


def test_double_well_minima_on_unit_circle():
    pot = DoubleWell(1.0)
    assert pot.value(1.0, 0.0) == pytest.approx(0.0)
    assert pot.value(0.0, 0.0) == pytest.approx(0.25)


def test_gaussian_normalization():
    # standard Gaussian partition function is 2*pi
    z = normalization(STANDARD, BOX)
    assert z == pytest.approx(2.0 * math.pi, rel=1e-4)


def test_normalization_halves_under_constant_shift():
    class Shifted(Quadratic):
        def value(self, x1, x2):
            return super().value(x1, x2) + math.log(2.0)

    z = normalization(STANDARD, BOX)
    z_shift = normalization(Shifted(1.0, 1.0), BOX)
    assert z_shift == pytest.approx(z / 2.0, rel=1e-12)


def test_growth_constant_shift_invariant():
    class Shifted(Quadratic):
        def value(self, x1, x2):
            return super().value(x1, x2) + 17.0

    assert growth_constant(Shifted(1.0, 1.0), BOX) == pytest.approx(
        growth_constant(STANDARD, BOX), rel=1e-12
    )


def test_growth_constant_gaussian_peaks_at_origin():
    # |lap| / (1 + |grad|) for |xi|^2/2 equals 2 at the origin
    assert growth_constant(STANDARD, BOX) == pytest.approx(2.0, abs=1e-9)


def test_check_box_accepts_wide_rejects_narrow():
    check_box(STANDARD, Grid2D.centered(7.5, 7.5, 16, 16))
    with pytest.raises(BoxTooSmallError):
        check_box(STANDARD, Grid2D.centered(2.0, 2.0, 16, 16))


def test_poincare_standard_gaussian_near_one():
    est = poincare_constant(STANDARD, Grid2D.centered(7.5, 7.5, 48, 48))
    assert est.refined_value == pytest.approx(1.0, rel=0.02)
    assert est.refinement_delta < 0.05


def test_poincare_scales_with_curvature():
    # Phi = a|xi|^2/2 has spectral gap a
    for a in (0.5, 2.0):
        grid = Grid2D.centered(7.5 / math.sqrt(a), 7.5 / math.sqrt(a), 48, 48)
        est = poincare_constant(Quadratic(a, a), grid, refine=False)
        assert est.value == pytest.approx(a, rel=0.03)


def test_poincare_monotone_in_curvature():
    grid = Grid2D.centered(7.5, 7.5, 32, 32)
    gaps = [
        poincare_constant(Quadratic(a, 1.0), grid, refine=False).value
        for a in (0.5, 1.0, 2.0)
    ]
    assert gaps[0] < gaps[1] <= gaps[2] + 1e-9


def test_poincare_shift_invariant():
    class Shifted(Quadratic):
        def value(self, x1, x2):
            return super().value(x1, x2) + 3.0

    grid = Grid2D.centered(7.5, 7.5, 32, 32)
    a = poincare_constant(STANDARD, grid, refine=False).value
    b = poincare_constant(Shifted(1.0, 1.0), grid, refine=False).value
    assert a == pytest.approx(b, rel=1e-10)


def test_tabulated_round_trip(tmp_path):
    xs = np.linspace(-2, 2, 17)
    ys = np.linspace(-3, 3, 25)
    lines = ["xi1,xi2,phi"]
    for x in xs:
        for y in ys:
            lines.append(f"{float(x)!r},{float(y)!r},{float((x * x + 2 * y * y) / 2)!r}")
    path = tmp_path / "table.csv"
    path.write_text("\n".join(lines) + "\n")
    pot = Tabulated.from_csv(str(path))
    assert pot.value(0.5, 0.25) == pytest.approx((0.25 + 2 * 0.0625) / 2, abs=5e-2)
    g1, g2 = pot.gradient(0.5, 0.25)
    assert g1 == pytest.approx(0.5, abs=5e-2)
    assert g2 == pytest.approx(0.5, abs=5e-2)


def test_tabulated_malformed_lines_reported(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("xi1,xi2,phi\n0,0,1\n0,1,oops\n1,0\n1,1,4\n")
    with pytest.raises(TableFormatError) as err:
        Tabulated.from_csv(str(path))
    # lines 3 and 4 are the malformed ones (1-based, header included)
    assert "3" in str(err.value) and "4" in str(err.value)


def test_tabulated_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y,z\n0,0,1\n")
    with pytest.raises(TableFormatError) as err:
        Tabulated.from_csv(str(path))
    assert "line 1" in str(err.value)


def test_tabulated_incomplete_grid(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("xi1,xi2,phi\n0,0,1\n0,1,2\n1,0,3\n")
    with pytest.raises(TableFormatError):
        Tabulated.from_csv(str(path))


def test_tabulated_query_outside_box():
    pot = Tabulated.constant(0.0, 2.0, 2.0)
    with pytest.raises(ConfigurationError):
        pot.value(5.0, 0.0)


def test_tabulated_constant_is_flat():
    pot = Tabulated.constant(1.5, 4.0, 4.0)
    assert pot.value(0.3, -2.1) == pytest.approx(1.5)
    g1, g2 = pot.gradient(0.3, -2.1)
    assert (g1, g2) == pytest.approx((0.0, 0.0), abs=1e-12)


def test_gibbs_weights_shape_and_positivity():
    grid = Grid2D.centered(5.0, 5.0, 12, 10)
    w = gibbs_weights(STANDARD, grid)
    assert w.shape == (12, 10)
    assert np.all(w > 0)


def test_from_config_dispatch_and_errors():
    assert isinstance(from_config({"kind": "quadratic", "a1": 2.0}), Quadratic)
    assert isinstance(from_config({"kind": "double_well"}), DoubleWell)
    with pytest.raises(ConfigurationError):
        from_config({"kind": "mystery"})
    with pytest.raises(ConfigurationError):
        from_config({"kind": "tabulated"})


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        Grid2D.centered(5.0, 5.0, 4, 16)
    with pytest.raises(ConfigurationError):
        Grid2D(1.0, -1.0, -1.0, 1.0, 16, 16)
