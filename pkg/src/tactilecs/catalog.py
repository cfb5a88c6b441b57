"""Desk-scale object catalog for the benchmark protocols.

Sixteen household-object analogues for classification (balls, boxes, cans,
two bottle orientations, and a few hand-designed vertex models) plus the
five-object acquisition set chosen for contrasting contact types: a small
ball (few taxels), a large box (many taxels), a drill shape (multiple
contacts), a cup rim (ring contact), and a clamp (non-convex contact).

All geometry is deterministic; rebuilding the catalog yields identical
sphere unions.
"""

from __future__ import annotations

import math

import numpy as np

from .contact import (
    SphereUnionObject,
    primitive_object,
    rest_on_plane,
    union_from_vertices,
)


def golf_ball(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("sphere", (21.35,), spacing, "golf_ball")


def racquetball(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("sphere", (28.5,), spacing, "racquetball")


def volleyball(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("sphere", (105.0,), spacing, "volleyball")


def basketball(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("sphere", (120.0,), spacing, "basketball")


def cracker_box(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("box", (160.0, 210.0, 60.0), spacing, "cracker_box")


def cereal_box(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("box", (190.0, 250.0, 50.0), spacing, "cereal_box")


def jello_box(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("box", (85.0, 110.0, 30.0), spacing, "jello_box")


def granola_box(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("box", (130.0, 180.0, 45.0), spacing, "granola_box")


def gravy_can(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("cylinder", (37.0, 110.0), spacing, "gravy_can")


def tuna_can(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("cylinder", (42.0, 33.0), spacing, "tuna_can")


def salmon_can(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("cylinder", (51.0, 60.0), spacing, "salmon_can")


def mustard_upright(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("ellipsoid", (35.0, 25.0, 95.0), spacing, "mustard_up")


def mustard_side(spacing: float = 2.0) -> SphereUnionObject:
    return primitive_object("ellipsoid", (95.0, 35.0, 25.0), spacing, "mustard_side")


def banana() -> SphereUnionObject:
    """Curved tube: vertices along a 120-degree arc, centered laterally."""
    curve_radius = 60.0
    theta = np.linspace(-math.pi / 3.0, math.pi / 3.0, 30)
    x = curve_radius * np.sin(theta)
    y = curve_radius * (np.cos(theta) - math.cos(math.pi / 3.0)) - 15.0
    verts = np.column_stack([x, y, np.zeros_like(x)])
    return rest_on_plane(union_from_vertices(verts, "banana"))


def cup() -> SphereUnionObject:
    """Open cup seen from above: only the rim ring is touchable."""
    rim_radius = 45.0
    rim_height = 82.0
    angles = np.linspace(0.0, 2.0 * math.pi, 70, endpoint=False)
    verts = np.column_stack([
        rim_radius * np.cos(angles),
        rim_radius * np.sin(angles),
        np.full_like(angles, rim_height),
    ])
    return union_from_vertices(verts, "cup")


def clamp() -> SphereUnionObject:
    """Non-convex L of two tube arms."""
    arm1 = np.column_stack([
        np.linspace(-45.0, 35.0, 16),
        np.full(16, -25.0),
        np.zeros(16),
    ])
    arm2 = np.column_stack([
        np.full(10, 35.0),
        np.linspace(-20.0, 30.0, 10),
        np.zeros(10),
    ])
    return rest_on_plane(union_from_vertices(np.concatenate([arm1, arm2]), "clamp"))


def drill() -> SphereUnionObject:
    """Drill on its side: elliptical body blob plus a handle strip."""
    body = []
    for gx in np.linspace(-40.0, 40.0, 11):
        half = 18.0 * math.sqrt(max(1.0 - (gx / 45.0) ** 2, 0.0))
        ny = max(2, int(half // 6) + 1)
        for gy in np.linspace(-half, half, ny):
            body.append((gx, gy + 18.0, 0.0))
    handle = [(12.0, -y, 0.0) for y in np.linspace(2.0, 42.0, 7)]
    verts = np.asarray(body + handle)
    return rest_on_plane(union_from_vertices(verts, "drill"))


def classification_catalog(spacing: float = 2.0) -> list[SphereUnionObject]:
    """The 16-object classification set (fixed order)."""
    return [
        banana(),
        cup(),
        drill(),
        clamp(),
        mustard_side(spacing),
        mustard_upright(spacing),
        cracker_box(spacing),
        cereal_box(spacing),
        jello_box(spacing),
        granola_box(spacing),
        racquetball(spacing),
        volleyball(spacing),
        basketball(spacing),
        gravy_can(spacing),
        tuna_can(spacing),
        salmon_can(spacing),
    ]


def acquisition_catalog(spacing: float = 2.0) -> list[SphereUnionObject]:
    """Five trajectory objects with contrasting contact types."""
    return [golf_ball(spacing), granola_box(spacing), drill(), cup(), clamp()]
