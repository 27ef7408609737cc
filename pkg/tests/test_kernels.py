import numpy as np
import pytest

from pqkilian import kernels
from pqkilian.quantum.core import random_projector, random_state
from pqkilian.rewinding import GameModel, RankOneStrategy

try:
    kernels.backend("compiled")
    HAVE_C = True
except ImportError:
    HAVE_C = False

needs_c = pytest.mark.skipif(not HAVE_C, reason="compiled extension not built")


def reference_alternate(PA, PB, v, uniforms):
    bits = []
    for i, u in enumerate(uniforms):
        P = PA if i % 2 == 0 else PB
        pv = P @ v
        p1 = np.vdot(pv, pv).real
        b = int(u < p1)
        v = pv if b else v - pv
        v = v / np.linalg.norm(v)
        bits.append(b)
    return np.array(bits), v


@pytest.mark.parametrize("impl", ["python", pytest.param("compiled", marks=needs_c)])
def test_dense_alternate_matches_reference(impl):
    g = np.random.default_rng(0)
    for _ in range(10):
        D = int(g.integers(2, 20))
        PA, PB = random_projector(D, D // 2, g), random_projector(D, D // 2 + 1, g)
        v = PB @ random_state(D, g)
        v /= np.linalg.norm(v)
        u = g.random(60)
        bits, out = kernels.dense_alternate(PA, PB, v, u, impl=kernels.backend(impl))
        rb, rv = reference_alternate(PA, PB, v, u)
        assert (bits == rb).all()
        assert np.allclose(out, rv, atol=1e-10)


@needs_c
def test_backends_agree_on_workspace_loop():
    model = GameModel(RankOneStrategy(8, 0.4))
    G, u = model.workspace
    d = model.dim
    X = np.outer(u, model.strategy.initial_state()).ravel()
    g = np.random.default_rng(1)
    for stop in (False, True):
        unif = g.random(200)
        b1, x1 = kernels.workspace_alternate(G, u, X.copy(), d, 50, stop, unif,
                                             impl=kernels.backend("python"))
        b2, x2 = kernels.workspace_alternate(G, u, X.copy(), d, 50, stop, unif,
                                             impl=kernels.backend("compiled"))
        assert (b1 == b2).all()
        assert np.allclose(x1, x2, atol=1e-10)


def test_backend_names():
    assert kernels.BACKEND in ("python", "compiled")
    with pytest.raises(ValueError):
        kernels.backend("fortran")
