"""Axis-aligned integer pixel boxes, origin top-left.

A box (x, y, w, h) is the pixel set {x..x+w-1} x {y..y+h-1}; w and h count
pixels, so interval arithmetic on [x, x+w) matches inclusive pixel sets.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class BoundingBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"degenerate box {self.x, self.y, self.w, self.h}")

    @property
    def x2(self):
        """One past the rightmost pixel column."""
        return self.x + self.w

    @property
    def y2(self):
        return self.y + self.h

    def area(self):
        return self.w * self.h

    def contains(self, other):
        return (self.x <= other.x and self.y <= other.y and
                other.x2 <= self.x2 and other.y2 <= self.y2)

    def intersection_area(self, other):
        iw = min(self.x2, other.x2) - max(self.x, other.x)
        ih = min(self.y2, other.y2) - max(self.y, other.y)
        return max(0, iw) * max(0, ih)

    def clipped(self, width, height):
        """Box clipped to an image; raises if nothing remains."""
        x1, y1 = max(self.x, 0), max(self.y, 0)
        x2, y2 = min(self.x2, width), min(self.y2, height)
        if x2 <= x1 or y2 <= y1:
            raise ValueError(f"box {self} lies outside {width}x{height}")
        return BoundingBox(x1, y1, x2 - x1, y2 - y1)

    def to_dict(self):
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["x"]), int(d["y"]), int(d["w"]), int(d["h"]))


def union_extent(boxes):
    """Smallest box covering every box in the list; None when empty."""
    boxes = [b for b in boxes if b is not None]
    if not boxes:
        return None
    x1 = min(b.x for b in boxes)
    y1 = min(b.y for b in boxes)
    x2 = max(b.x2 for b in boxes)
    y2 = max(b.y2 for b in boxes)
    return BoundingBox(x1, y1, x2 - x1, y2 - y1)
