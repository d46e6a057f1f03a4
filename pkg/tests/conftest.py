"""Shared fixtures: a seeded hub with users, a team, a set, and templates."""

import io
from dataclasses import dataclass

import numpy as np
import pytest
from PIL import Image

from slidehub.hub import Hub


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].replace("test_", "", 1)
    print(f"\n[ACCEPTANCE] {name}: {'PASS' if report.passed else 'FAIL'}")


def png_bytes(arr) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def random_image(rng, w, h):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


@dataclass
class Seeded:
    hub: Hub
    alice: object  # create/read/update/delete/verify/manage
    alice_token: str
    bob: object  # create/read/update/verify
    bob_token: str
    carol: object  # read only
    carol_token: str
    team_id: int
    set_id: int
    product_id: int
    box_template: object
    polygon_template: object
    global_template: object
    image: object  # 1000x800 uploaded image


@pytest.fixture
def seeded(tmp_path):
    hub = Hub(tmp_path / "hub.db", tmp_path / "storage")
    access, catalog, images = hub.access, hub.catalog, hub.images

    alice, alice_token = access.create_user("alice")
    bob, bob_token = access.create_user("bob")
    carol, carol_token = access.create_user("carol")
    team_id = access.create_team("lab")
    access.set_membership(alice.id, team_id, {"create", "read", "update", "delete", "verify", "manage"})
    access.set_membership(bob.id, team_id, {"create", "read", "update", "verify"})
    access.set_membership(carol.id, team_id, {"read"})

    image_set = images.create_image_set(alice, "slides", team_id)
    product = catalog.create_product("cytology")
    box = catalog.create_template("cell", "box", color="#00ff00", shortcut="c",
                                  default_width=50, default_height=50)
    polygon = catalog.create_template("tissue", "polygon", color="#0000ff", shortcut="t")
    glob = catalog.create_template("diagnosis", "global", color="#ffaa00")
    for template in (box, polygon, glob):
        catalog.add_template_to_product(product.id, template.id)
    catalog.attach_product_to_set(alice, image_set.id, product.id)

    rng = np.random.default_rng(42)
    image = images.upload_image(alice, image_set.id, "scan_A.png", png_bytes(random_image(rng, 1000, 800)))

    seeded = Seeded(
        hub=hub,
        alice=alice, alice_token=alice_token,
        bob=bob, bob_token=bob_token,
        carol=carol, carol_token=carol_token,
        team_id=team_id, set_id=image_set.id, product_id=product.id,
        box_template=box, polygon_template=polygon, global_template=glob,
        image=image,
    )
    yield seeded
    hub.close()


def box_at(x, y, size=20):
    return {"x1": x, "y1": y, "x2": x + size, "y2": y + size}


@pytest.fixture
def unused_port():
    import socket

    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]
