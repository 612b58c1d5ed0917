import numpy as np
import pytest

from wulffsym.anisotropy import ellipsoid_norm, euclidean_norm, regularized_p_norm


@pytest.fixture(scope="session")
def norms_2d():
    return {
        "euclidean": euclidean_norm(2),
        "ellipsoid": ellipsoid_norm(np.diag([4.0, 1.0])),
        "regularized_p": regularized_p_norm(2, 3.0),
    }


@pytest.fixture(scope="session")
def norms_3d():
    return {
        "euclidean": euclidean_norm(3),
        "ellipsoid": ellipsoid_norm(np.diag([4.0, 1.0, 2.25])),
        "regularized_p": regularized_p_norm(3, 3.0),
    }


def ellipse_perimeter(a: float, b: float) -> float:
    """Perimeter of an axis-aligned ellipse by the AGM form of E(m)."""
    if a < b:
        a, b = b, a
    big_k, e_sum = _agm_elliptic(np.sqrt(1.0 - (b / a) ** 2))
    return 4.0 * a * big_k * (1.0 - e_sum)


def _agm_elliptic(k: float):
    an, bn, cn = 1.0, np.sqrt(1.0 - k * k), k
    total = 0.5 * cn * cn
    power = 1.0
    for _ in range(60):
        an, bn, cn = 0.5 * (an + bn), np.sqrt(an * bn), 0.5 * (an - bn)
        power *= 2.0
        total += 0.5 * power * cn * cn
        if cn < 1e-17:
            break
    big_k = np.pi / (2.0 * an)
    return big_k, total
