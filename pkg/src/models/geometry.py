"""
Two-Rooms geometry model
Arena with a single dividing wall pierced by a door.
"""

from dataclasses import dataclass
from typing import List, Tuple

from models.base_model import DataclassModel

Rect = Tuple[float, float, float, float]


@dataclass(frozen=True)
class TwoRoomsGeometry(DataclassModel):
    """Wall geometry of the Two-Rooms arena.

    The dividing wall is the vertical band
    ``[wall_x - wall_half_thickness, wall_x + wall_half_thickness]``, interrupted
    by the door ``[door_center_y - door_half_height, door_center_y + door_half_height]``.
    """

    arena_size: float = 64.0
    wall_x: float = 32.0
    wall_half_thickness: float = 1.5
    door_center_y: float = 32.0
    door_half_height: float = 4.0

    @property
    def wall_left(self) -> float:
        return self.wall_x - self.wall_half_thickness

    @property
    def wall_right(self) -> float:
        return self.wall_x + self.wall_half_thickness

    @property
    def door_low(self) -> float:
        return self.door_center_y - self.door_half_height

    @property
    def door_high(self) -> float:
        return self.door_center_y + self.door_half_height

    def wall_rects(self) -> List[Rect]:
        """
        Wall segments as axis-aligned rectangles.

        Returns:
            List of (x0, y0, x1, y1); segments squeezed out by the door are omitted
        """
        rects = []
        if self.door_low > 0.0:
            rects.append((self.wall_left, 0.0, self.wall_right, self.door_low))
        if self.door_high < self.arena_size:
            rects.append((self.wall_left, self.door_high, self.wall_right, self.arena_size))
        return rects

    def room_of(self, x: float) -> int:
        """Room index of an x coordinate: 0 left of the wall centre, 1 right."""
        return 0 if x < self.wall_x else 1

    def validate(self) -> bool:
        if self.arena_size <= 0 or self.wall_half_thickness <= 0:
            return False
        if not (0.0 < self.wall_left and self.wall_right < self.arena_size):
            return False
        if self.door_half_height <= 0:
            return False
        return 0.0 < self.door_center_y < self.arena_size
