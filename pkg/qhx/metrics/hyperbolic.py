from __future__ import annotations

import math

from qhx.core.errors import DomainError
from qhx.geometry.domains import as_xy


def hyperbolic_disk_distance(z1, z2) -> float:
    """log((|1 - conj(z1) z2| + |z1 - z2|) / (|1 - conj(z1) z2| - |z1 - z2|)) on the unit disk."""
    (x1, y1), (x2, y2) = as_xy(z1)[0], as_xy(z2)[0]
    a, b = complex(x1, y1), complex(x2, y2)
    if abs(a) >= 1.0 or abs(b) >= 1.0:
        raise DomainError("hyperbolic distance needs points inside the unit disk")
    chord = abs(a - b)
    if chord == 0.0:
        return 0.0
    # 2 artanh(q) equals the log ratio and stays accurate for small q
    return 2.0 * math.atanh(chord / abs(1.0 - a.conjugate() * b))
