import pytest

from fhegraph.autofhe import auto_he
from fhegraph.builders import build_constellation, build_sphira
from fhegraph.graph import CATEGORY_COLOURS
from fhegraph.nodes import (CC, CCE, MSE, Decrypt, Dense, Encrypt, Output, ReluApprox, Rotate,
                            SigmoidApprox)


def census(g, cls):
    return len(g.find(lambda n: isinstance(n, cls)))


@pytest.mark.parametrize("classes", [2, 10])
def test_sphira_census(classes):
    g = build_sphira(num_classes=classes, input_shape=(8, 8))
    assert census(g, Dense) == classes and census(g, ReluApprox) == classes
    assert census(g, CC) == 1 and census(g, Encrypt) == 1
    assert census(g, Rotate) == g.node("cc").T_x == 36
    assert census(g, Decrypt) == classes
    assert sorted(g.sinks()) == ["loss", "y_hat"]
    assert g.entries() == ["x", "y"]
    assert all(rec.node.keypair is None for rec in g.nodes.values() if isinstance(rec.node, Encrypt))


def test_sphira_default_size():
    g = build_sphira()
    assert g.node("cc").T_x == 676
    assert g.node("dense_0").inputs == 676
    assert build_sphira(stride=2).node("cc").T_x == 169


def test_sphira_autofhe_is_finite():
    g = build_sphira(num_classes=4, input_shape=(6, 6))
    groups = auto_he(g, g.meta["inputs"])
    assert len(groups.costs) >= 1 and max(groups.costs) == 2


def test_constellation_shape():
    g = build_constellation(window=10, features=3, kernel_steps=4)
    assert census(g, Output) == 1 and census(g, MSE) == 1 and census(g, SigmoidApprox) == 1
    assert census(g, CCE) == 0
    assert g.node("y_hat").category == "output" and CATEGORY_COLOURS["output"] == "orange"
    assert g.node("cc").T_x == 7  # 1D over time: 10 - 4 + 1 windows
    assert sorted(g.sinks()) == ["loss", "y_hat"]


def test_builders_are_seeded():
    a, b = build_constellation(seed=3), build_constellation(seed=3)
    assert (a.node("cc").k == b.node("cc").k).all()
    assert not (a.node("cc").k == build_constellation(seed=4).node("cc").k).all()
