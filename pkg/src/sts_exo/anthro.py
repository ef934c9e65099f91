"""Per-user planar body models from total mass and height.

Segment masses, lengths, COM offsets and inertias are derived from a ratio
table (standard adult-male distributions shipped as a data file; the head is
lumped into the torso segment and bilateral limbs are lumped, since the chain
is strictly sagittal). User-supplied tables with the same schema are accepted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources

from .errors import RangeError, SchemaError

# Canonical chain order: joint i drives segment i.
# Joints: [ankle, knee, hip, torso, shoulder, elbow, wrist]
SEGMENT_NAMES = ("shank", "thigh", "pelvis", "torso", "upper_arm", "forearm", "hand")

SUPPORTED_MASS_RANGE = (40.0, 100.0)  # kg

# Default joint limits, expressed in the chain coordinates used by `dynamics`
# (relative joint angles; the ankle coordinate is the shank's absolute angle
# from the +x axis, so "vertical +/- 30 deg" becomes [60, 120] deg).
_D = math.pi / 180.0
DEFAULT_JOINT_LIMITS = (
    (60.0 * _D, 120.0 * _D),    # ankle: shank within 30 deg of vertical
    (-10.0 * _D, 95.0 * _D),    # knee
    (-135.0 * _D, 45.0 * _D),   # hip
    (-30.0 * _D, 60.0 * _D),    # torso crouch
    (-170.0 * _D, 90.0 * _D),   # shoulder
    (-90.0 * _D, 160.0 * _D),   # elbow
    (-90.0 * _D, 90.0 * _D),    # wrist
)


@dataclass(frozen=True)
class AnthroInput:
    total_mass: float  # kg
    height: float      # m
    spring_count: int = 2
    label: str = "user"

    def __post_init__(self):
        if not (self.total_mass > 0 and self.height > 0):
            raise RangeError(f"total_mass and height must be positive, got "
                             f"{self.total_mass} kg / {self.height} m")
        lo, hi = SUPPORTED_MASS_RANGE
        if not (lo <= self.total_mass <= hi):
            raise RangeError(f"total_mass {self.total_mass} kg outside supported "
                             f"range [{lo}, {hi}] kg")
        if self.spring_count not in (2, 3):
            raise RangeError(f"spring_count must be 2 or 3, got {self.spring_count}")


@dataclass(frozen=True)
class SegmentParams:
    length: float      # m
    mass: float        # kg
    com_offset: float  # m, from the proximal joint along the segment
    inertia: float     # kg m^2 about the segment COM

    def __post_init__(self):
        if self.mass < 0 or self.inertia < 0:
            raise RangeError("segment mass and inertia must be non-negative")
        if not (0.0 <= self.com_offset <= self.length):
            raise RangeError(f"com_offset {self.com_offset} outside [0, {self.length}]")


@dataclass(frozen=True)
class BodyModel:
    """Planar open chain; the first joint is ground-fixed at the origin.

    `build_body_model` always produces the 7-segment human chain; shorter
    chains (test fixtures, exoskeleton links) construct this type directly.
    """

    segments: tuple[SegmentParams, ...]
    joint_limits: tuple[tuple[float, float], ...] = field(default=())
    total_mass: float = 0.0

    def __post_init__(self):
        if not self.segments:
            raise RangeError("BodyModel needs at least one segment")
        msum = sum(s.mass for s in self.segments)
        if self.total_mass == 0.0:
            object.__setattr__(self, "total_mass", msum)
        elif abs(msum - self.total_mass) > 1e-9:
            raise RangeError(f"segment masses sum to {msum}, expected {self.total_mass}")
        if not self.joint_limits:
            object.__setattr__(self, "joint_limits",
                               tuple((-math.pi, math.pi) for _ in self.segments))
        if len(self.joint_limits) != len(self.segments):
            raise RangeError("need one joint limit pair per segment")
        for lo, hi in self.joint_limits:
            if not lo < hi:
                raise RangeError(f"empty joint limit interval [{lo}, {hi}]")

    @property
    def n(self) -> int:
        return len(self.segments)


@dataclass(frozen=True)
class SegmentRatioTable:
    """Rows keyed by segment name: (mass_frac, length_frac, com_frac, gyr_frac)."""

    rows: dict[str, tuple[float, float, float, float]]

    def __post_init__(self):
        missing = [s for s in SEGMENT_NAMES if s not in self.rows]
        if missing:
            raise SchemaError(f"ratio table missing segments: {missing}")
        for name, row in self.rows.items():
            if len(row) != 4 or any(not math.isfinite(v) for v in row):
                raise SchemaError(f"bad ratio row for {name!r}: {row}")
            mass_frac, length_frac, com_frac, gyr_frac = row
            if mass_frac < 0 or length_frac <= 0 or gyr_frac < 0:
                raise SchemaError(f"negative/zero fraction in row {name!r}: {row}")
            if not (0.0 <= com_frac <= 1.0):
                raise SchemaError(f"com_frac outside [0, 1] for {name!r}")

    @property
    def mass_frac_sum(self) -> float:
        return sum(self.rows[s][0] for s in SEGMENT_NAMES)


def load_ratio_table(path) -> SegmentRatioTable:
    """Load a ratio table from CSV with header segment,mass_frac,length_frac,com_frac,gyr_frac."""
    rows = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        expected = {"segment", "mass_frac", "length_frac", "com_frac", "gyr_frac"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise SchemaError(f"ratio CSV must have columns {sorted(expected)}, "
                              f"got {reader.fieldnames}")
        for rec in reader:
            try:
                rows[rec["segment"].strip()] = (
                    float(rec["mass_frac"]), float(rec["length_frac"]),
                    float(rec["com_frac"]), float(rec["gyr_frac"]),
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"unparseable ratio row {rec!r}") from exc
    return SegmentRatioTable(rows)


def default_ratio_table() -> SegmentRatioTable:
    with resources.as_file(resources.files("sts_exo.data") / "segment_ratios.csv") as p:
        return load_ratio_table(p)


def build_body_model(inp: AnthroInput, table: SegmentRatioTable | None = None) -> BodyModel:
    """Scale the ratio table to one user.

    Masses are normalized by the table's mass-fraction sum so they always sum
    to total_mass exactly; lengths scale linearly with height and inertias as
    mass * (gyr_frac * length)^2.
    """
    if table is None:
        table = default_ratio_table()
    frac_sum = table.mass_frac_sum
    if frac_sum <= 0:
        raise SchemaError("mass fractions sum to zero")
    segments = []
    for name in SEGMENT_NAMES:
        mass_frac, length_frac, com_frac, gyr_frac = table.rows[name]
        length = length_frac * inp.height
        mass = inp.total_mass * (mass_frac / frac_sum)
        segments.append(SegmentParams(
            length=length,
            mass=mass,
            com_offset=com_frac * length,
            inertia=mass * (gyr_frac * length) ** 2,
        ))
    return BodyModel(segments=tuple(segments), joint_limits=DEFAULT_JOINT_LIMITS,
                     total_mass=sum(s.mass for s in segments))
