import numpy as np
import pytest

from pat2p.grid import build_grid
from pat2p.phantoms import (
    PHANTOMS,
    SHEPP_LOGAN_TABLE,
    _ellipse,
    PhantomSpec,
    derive_optics,
    make_disk,
    make_heartlung,
    make_phantom,
    make_shepplogan,
)
from pat2p.vip import BoxBounds


def node_grid():
    # h = 0.05: nodes land on 0.25, 0.9, 0.4, -0.25 exactly.
    return build_grid(-1, 1, -1, 1, 41)


def at(grid, field, x, y):
    i = int(round((x - grid.x_min) / grid.h))
    j = int(round((y - grid.y_min) / grid.h))
    return field[i, j]


def test_disk_values():
    g = node_grid()
    s, m = make_disk(g)
    assert at(g, s, 0.25, 0.25) == 1.0 and at(g, m, 0.25, 0.25) == 0.1
    assert at(g, s, 0.9, 0.9) == 0.1 and at(g, m, 0.9, 0.9) == 0.01


def test_disk_tie_break_on_circle():
    g = build_grid(-1, 1, -1, 1, 9)  # h = 0.25: node (0.5, 0.25) is exactly on the circle
    s, _ = make_disk(g)
    assert at(g, s, 0.5, 0.25) == 1.0
    assert at(g, s, 0.75, 0.25) == 0.1


def test_heartlung_values():
    g = node_grid()
    s, m = make_heartlung(g)
    assert at(g, s, 0.4, 0.1) == 1.0 and at(g, m, 0.4, 0.1) == pytest.approx(0.1)
    assert at(g, s, -0.4, 0.1) == 1.0
    assert at(g, s, 0.0, -0.25) == 0.5 and at(g, m, 0.0, -0.25) == pytest.approx(0.05)
    assert at(g, s, 0.9, -0.9) == 0.1 and at(g, m, 0.9, -0.9) == 0.01


def test_shepplogan_properties():
    g = build_grid(-1, 1, -1, 1, 101)
    s, m = make_shepplogan(g)
    assert np.array_equal(m, 0.1 * s)
    assert at(g, s, 0.98, 0.98) == 0.3
    assert s.max() == pytest.approx(1.0)
    assert s.min() >= 0.3 - 1e-12
    # Mirror symmetry holds wherever no off-centre ellipse (or its mirror image) reaches.
    X, Y = g.mesh()
    off = np.zeros(g.shape, bool)
    for _, a, b, x0, y0, phi in SHEPP_LOGAN_TABLE:
        if x0 != 0.0:
            off |= _ellipse(X, Y, x0, y0, a, b, phi) | _ellipse(X, Y, -x0, y0, a, b, -phi)
    keep = ~off & ~off[::-1, :]
    assert keep.sum() > 0.8 * keep.size
    assert np.array_equal(s[keep], s[::-1, :][keep])


def test_mu_is_tenth_of_sigma_on_inclusions():
    g = node_grid()
    s, m = make_heartlung(g)
    inc = s != 0.1
    assert np.allclose(m[inc], 0.1 * s[inc], rtol=1e-15)


@pytest.mark.parametrize("name", sorted(PHANTOMS))
def test_phantoms_fit_default_box_and_are_deterministic(name):
    g = build_grid(-1, 1, -1, 1, 64)
    s, m = make_phantom(name, g)
    s2, m2 = make_phantom(name, g)
    assert np.array_equal(s, s2) and np.array_equal(m, m2)
    spec = PhantomSpec(name, *{"shepplogan": (0.3, 0.03)}.get(name, (0.1, 0.01)), g)
    box = BoxBounds.around(spec.sigma_b, spec.mu_b)
    assert box.contains(s, m)
    assert np.array_equal(spec.build()[0], s)


def test_unknown_phantom_lists_options():
    with pytest.raises(ValueError, match="disk, heartlung, shepplogan"):
        make_phantom("nosuch", node_grid())


def test_derive_optics():
    D, G = derive_optics(np.ones((3, 3)))
    assert np.all(D == 0.1) and np.all(G == 1.0)
    assert np.allclose(derive_optics(np.full((3, 3), 0.3))[0], 0.03, rtol=1e-15)
    bad = np.ones((3, 3))
    bad[1, 1] = 0.0
    with pytest.raises(ValueError):
        derive_optics(bad)
