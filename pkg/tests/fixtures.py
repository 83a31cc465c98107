"""Shared fixture surfaces for the test suite."""

from fractions import Fraction

from quadsurf.exactnum import vec
from quadsurf.surfcore import Surface


def square_torus() -> Surface:
    sq = [vec(1, 0), vec(0, 1), vec(-1, 0), vec(0, -1)]
    gluing = {
        (0, 0): ((0, 2), 1),
        (0, 2): ((0, 0), 1),
        (0, 1): ((0, 3), 1),
        (0, 3): ((0, 1), 1),
    }
    return Surface(1, [sq], gluing)


def rect_torus(width, height) -> Surface:
    r = [vec(width, 0), vec(0, height), vec(-width, 0), vec(0, -height)]
    gluing = {
        (0, 0): ((0, 2), 1),
        (0, 2): ((0, 0), 1),
        (0, 1): ((0, 3), 1),
        (0, 3): ((0, 1), 1),
    }
    return Surface(1, [r], gluing)


def two_square_cylinder_torus() -> Surface:
    """Torus from two unit squares forming a horizontal cylinder."""
    sq = [vec(1, 0), vec(0, 1), vec(-1, 0), vec(0, -1)]
    gluing = {
        (0, 0): ((1, 2), 1),
        (1, 2): ((0, 0), 1),
        (1, 0): ((0, 2), 1),
        (0, 2): ((1, 0), 1),
        (0, 1): ((0, 3), 1),
        (0, 3): ((0, 1), 1),
        (1, 1): ((1, 3), 1),
        (1, 3): ((1, 1), 1),
    }
    return Surface(1, [sq, list(sq)], gluing)


def broken_self_glued() -> Surface:
    """Invalid: one side glued to itself (validation test case)."""
    sq = [vec(1, 0), vec(0, 1), vec(-1, 0), vec(0, -1)]
    gluing = {
        (0, 0): ((0, 2), 1),
        (0, 2): ((0, 0), 1),
        (0, 1): ((0, 1), -1),
        (0, 3): ((0, 3), -1),
    }
    return Surface(1, [sq], gluing)


def disconnected_pair() -> Surface:
    """Two tori, no gluing between them: invalid (not connected)."""
    sq = [vec(1, 0), vec(0, 1), vec(-1, 0), vec(0, -1)]
    gluing = {}
    for p in (0, 1):
        gluing[(p, 0)] = ((p, 2), 1)
        gluing[(p, 2)] = ((p, 0), 1)
        gluing[(p, 1)] = ((p, 3), 1)
        gluing[(p, 3)] = ((p, 1), 1)
    return Surface(1, [sq, list(sq)], gluing)


def pillowcase() -> Surface:
    """Genus 0, four angle-pi points: the torus folded by z -> -z.

    Rectangle 1 x 1/2; bottom and top each fold onto themselves (sign -1),
    left glues to right by translation.
    """
    h = Fraction(1, 2)
    poly = [
        vec(h, 0),
        vec(h, 0),
        vec(0, h),
        vec(-h, 0),
        vec(-h, 0),
        vec(0, -h),
    ]
    gluing = {
        (0, 0): ((0, 1), -1),
        (0, 1): ((0, 0), -1),
        (0, 3): ((0, 4), -1),
        (0, 4): ((0, 3), -1),
        (0, 2): ((0, 5), 1),
        (0, 5): ((0, 2), 1),
    }
    return Surface(1, [poly], gluing, allow_poles=True)


def l_origami() -> Surface:
    """Genus-2 translation surface (one double zero) from a 3-square L."""
    poly = [
        vec(1, 0),
        vec(1, 0),
        vec(0, 1),
        vec(-1, 0),
        vec(0, 1),
        vec(-1, 0),
        vec(0, -1),
        vec(0, -1),
    ]
    pairs = [((0, 0), (0, 5)), ((0, 1), (0, 3)), ((0, 2), (0, 6)), ((0, 4), (0, 7))]
    gluing = {}
    for a, b in pairs:
        gluing[a] = (b, 1)
        gluing[b] = (a, 1)
    return Surface(1, [poly], gluing)
