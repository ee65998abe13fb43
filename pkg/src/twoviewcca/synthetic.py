"""Synthetic two-view data with a power-law cross spectrum.

Spec strings look like ``power-law:n=2000,da=40,db=40,rank=20,decay=1,noise=1,seed=0``.
Unlisted keys take the defaults in `POWER_LAW_DEFAULTS`. Generation, in
draw order from ``numpy.random.default_rng(seed)``:

    Z  ~ N(0, 1)  n x rank          shared latent factors
    Wa ~ N(0, 1)  rank x da
    Wb ~ N(0, 1)  rank x db
    Ea ~ N(0, 1)  n x da
    Eb ~ N(0, 1)  n x db
    s_j = j ** (-decay / 2),  j = 1..rank
    A = (Z * s) Wa + noise * Ea + shift
    B = (Z * s) Wb + noise * Eb + shift

so the population cross-covariance ``Wa^T diag(s^2) Wb`` has power-law
decaying strength. `shift` adds a constant mean to every feature.
"""

import numpy as np

POWER_LAW_DEFAULTS = {"n": 2000, "da": 40, "db": 40, "rank": 20, "decay": 1.0,
                      "noise": 1.0, "shift": 0.0, "seed": 0}
_INT_KEYS = {"n", "da", "db", "rank", "seed"}

BUNDLED_SPEC = "power-law:n=2000,da=40,db=40,rank=20,decay=1,noise=1,seed=0"


def parse_spec(spec):
    kind, _, body = spec.partition(":")
    if kind != "power-law":
        raise ValueError(f"unknown synthetic generator {kind!r}; expected 'power-law'")
    params = dict(POWER_LAW_DEFAULTS)
    for item in filter(None, body.split(",")):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in params:
            raise ValueError(f"bad synthetic spec item {item!r}")
        params[key] = int(value) if key in _INT_KEYS else float(value)
    if min(params["n"], params["da"], params["db"], params["rank"]) < 1:
        raise ValueError("n, da, db and rank must be positive")
    return params


def power_law(n=2000, da=40, db=40, rank=20, decay=1.0, noise=1.0, shift=0.0, seed=0):
    """Dense ``(A, B)`` drawn as described in the module docstring."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, rank))
    Wa = rng.standard_normal((rank, da))
    Wb = rng.standard_normal((rank, db))
    Ea = rng.standard_normal((n, da))
    Eb = rng.standard_normal((n, db))
    s = np.arange(1, rank + 1, dtype=np.float64) ** (-decay / 2)
    Zs = Z * s
    return Zs @ Wa + noise * Ea + shift, Zs @ Wb + noise * Eb + shift


def generate(spec):
    return power_law(**parse_spec(spec))
