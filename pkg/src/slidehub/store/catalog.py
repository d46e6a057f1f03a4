"""Products and annotation templates.

A template defines label name, geometry kind, color, keyboard shortcut,
sort order and an optional default size (what makes single-click
annotations possible).  Products bundle templates and attach to image
sets to enforce one labeling schema across sets.
"""

from __future__ import annotations

import re

from slidehub import errors
from slidehub.core.records import AnnotationTemplate, Product
from slidehub.core.vectors import VECTOR_KINDS
from slidehub.store.db import Database

_COLOR_RE = re.compile(r"^#[0-9a-fA-F]{6}$")


def _row_template(row) -> AnnotationTemplate:
    return AnnotationTemplate(
        id=row["id"],
        name=row["name"],
        vector_kind=row["vector_kind"],
        color=row["color"],
        shortcut=row["shortcut"],
        sort_order=row["sort_order"],
        default_width=row["default_width"],
        default_height=row["default_height"],
        example_image_ref=row["example_image_ref"],
    )


class Catalog:
    def __init__(self, db: Database, access):
        self.db = db
        self.access = access

    # --- templates ---

    def create_template(self, name: str, vector_kind: str, color: str = "#ff0000",
                        shortcut: str | None = None, sort_order: int = 0,
                        default_width: int | None = None, default_height: int | None = None,
                        example_image_ref: str | None = None) -> AnnotationTemplate:
        if vector_kind not in VECTOR_KINDS:
            raise errors.BadFilter(f"unknown vector kind {vector_kind!r}")
        if not _COLOR_RE.match(color):
            raise errors.BadFilter(f"color must be #rrggbb, got {color!r}")
        if shortcut is not None and len(shortcut) != 1:
            raise errors.BadFilter("shortcut must be a single key")
        with self.db.tx() as conn:
            template_id = conn.execute(
                "INSERT INTO templates (name, vector_kind, color, shortcut, sort_order,"
                " default_width, default_height, example_image_ref)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (name, vector_kind, color, shortcut, sort_order,
                 default_width, default_height, example_image_ref),
            ).lastrowid
        return self.get_template(template_id)

    def get_template(self, template_id: int) -> AnnotationTemplate:
        row = self.db.one("SELECT * FROM templates WHERE id = ?", (template_id,))
        if row is None:
            raise errors.NotFound(f"template {template_id}")
        return _row_template(row)

    def template_by_name(self, name: str):
        row = self.db.one("SELECT * FROM templates WHERE name = ? ORDER BY id LIMIT 1", (name,))
        return _row_template(row) if row else None

    # --- products ---

    def create_product(self, name: str, description: str = "") -> Product:
        with self.db.tx() as conn:
            product_id = conn.execute(
                "INSERT INTO products (name, description) VALUES (?, ?)", (name, description)
            ).lastrowid
        return self.get_product(product_id)

    def get_product(self, product_id: int) -> Product:
        row = self.db.one("SELECT * FROM products WHERE id = ?", (product_id,))
        if row is None:
            raise errors.NotFound(f"product {product_id}")
        template_ids = [r["template_id"] for r in self.db.query(
            "SELECT template_id FROM product_templates WHERE product_id = ? ORDER BY position",
            (product_id,),
        )]
        return Product(id=row["id"], name=row["name"], description=row["description"],
                       template_ids=template_ids)

    def add_template_to_product(self, product_id: int, template_id: int) -> Product:
        """Append a template; duplicates and shortcut clashes are rejected."""
        product = self.get_product(product_id)
        template = self.get_template(template_id)
        if template_id in product.template_ids:
            return product  # never duplicated within a product
        if template.shortcut is not None:
            for other_id in product.template_ids:
                other = self.get_template(other_id)
                if other.shortcut == template.shortcut:
                    raise errors.BadFilter(
                        f"shortcut {template.shortcut!r} already bound in product {product_id}"
                    )
        with self.db.tx() as conn:
            conn.execute(
                "INSERT INTO product_templates (product_id, template_id, position) VALUES (?, ?, ?)",
                (product_id, template_id, len(product.template_ids)),
            )
        return self.get_product(product_id)

    def attach_product_to_set(self, user, image_set_id: int, product_id: int) -> None:
        self.access.require_set(user, "manage", image_set_id)
        self.get_product(product_id)
        with self.db.tx() as conn:
            conn.execute(
                "INSERT OR IGNORE INTO set_products (image_set_id, product_id) VALUES (?, ?)",
                (image_set_id, product_id),
            )

    def templates_for_set(self, image_set_id: int) -> list:
        """Templates usable on a set, through its attached products."""
        rows = self.db.query(
            """
            SELECT DISTINCT t.* FROM templates t
            JOIN product_templates pt ON pt.template_id = t.id
            JOIN set_products sp ON sp.product_id = pt.product_id
            WHERE sp.image_set_id = ?
            ORDER BY t.sort_order, t.id
            """,
            (image_set_id,),
        )
        return [_row_template(r) for r in rows]

    def template_usable_on_set(self, template_id: int, image_set_id: int) -> bool:
        row = self.db.one(
            """
            SELECT 1 FROM product_templates pt
            JOIN set_products sp ON sp.product_id = pt.product_id
            WHERE pt.template_id = ? AND sp.image_set_id = ?
            """,
            (template_id, image_set_id),
        )
        return row is not None
