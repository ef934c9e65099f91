"""Run configuration: one key/value text file (INI sections) or JSON.

Every field has a shipped default, so an empty config is a valid smoke run.
Angles are configured in degrees (suffix _deg) and converted here.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .anthro import AnthroInput
from .errors import SchemaError
from .mechanism import (DEFAULT_A1, DEFAULT_A2, ActuatorPlacement, DesignVector,
                        EngagementAngles, GasSpring, load_spring_catalog)
from .sts_sim import ExoModel, SimOptions

D2R = math.pi / 180.0


def _data_path(name: str):
    return resources.files("sts_exo.data") / name


@dataclass(frozen=True)
class UserGrid:
    masses: tuple[float, ...]
    heights: tuple[float, ...]
    spring_count: int = 2

    def inputs(self) -> list[AnthroInput]:
        return [AnthroInput(m, h, self.spring_count, f"{m:g}kg_{h:.2f}m")
                for m in self.masses for h in self.heights]


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    seed: int
    out_dir: str
    user: AnthroInput | None
    grid: UserGrid | None
    exo: ExoModel
    angles: EngagementAngles
    spring: GasSpring
    catalog: tuple[GasSpring, ...]
    design: DesignVector
    placement: ActuatorPlacement
    sim: SimOptions
    optimizer: dict
    controller: dict
    area_a1: tuple
    area_a2: tuple

    def sha256(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True).encode()).hexdigest()


def _grid_axis(spec) -> tuple[float, ...]:
    """[start, stop, step] inclusive, or an explicit list of values."""
    if len(spec) == 3 and spec[2] not in (0, None) and spec[1] >= spec[0] and \
            (spec[1] - spec[0]) / spec[2] > 1.0:
        start, stop, step = spec
        n = int(round((stop - start) / step))
        return tuple(start + k * step for k in range(n + 1))
    return tuple(float(v) for v in spec)


def load_reference_design(path=None) -> dict:
    """Shipped (or user-supplied) reference fixture: design + placement + spring."""
    if path is None:
        with resources.as_file(_data_path("reference_design.json")) as p:
            payload = json.loads(Path(p).read_text())
    else:
        payload = json.loads(Path(path).read_text())
    return payload


def design_from_dict(d: dict) -> DesignVector:
    return DesignVector(
        u=tuple(d["u"]), v=tuple(d["v"]), w=tuple(d["w"]),
        n=tuple(d["n"]), o=tuple(d["o"]), p=tuple(d["p"]),
        r1=float(d["r1"]), r2=float(d["r2"]), eta=float(d.get("eta", 1.0)))


def placement_from_dict(d: dict) -> ActuatorPlacement:
    return ActuatorPlacement(
        a=tuple(d["a"]), b=tuple(d["b"]),
        spring_count=int(d.get("spring_count", 2)),
        free_length=d.get("free_length"))


def _parse_ini(path) -> dict:
    parser = configparser.ConfigParser()
    parser.read(path)
    out: dict = {}
    for section in parser.sections():
        sec: dict = {}
        for key, value in parser.items(section):
            try:
                sec[key] = json.loads(value)
            except json.JSONDecodeError:
                sec[key] = value
        out[section] = sec
    for key, value in parser.defaults().items():
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _angles_from(raw: dict) -> EngagementAngles:
    a = raw.get("angles", {})
    def get(name, default):
        return float(a.get(name, default)) * D2R
    kwargs = dict(
        gamma=get("gamma_deg", 24.0), beta=get("beta_deg", -12.0),
        delta=get("delta_deg", -45.0), q_s=get("q_s_deg", -90.0),
        q_o=get("q_o_deg", 0.0), q_f=get("q_f_deg", 90.0))
    if "hysteresis_deg" in a:
        kwargs["hysteresis"] = float(a["hysteresis_deg"]) * D2R
    return EngagementAngles(**kwargs)


def load_config(path=None, seed=None, out_dir=None, design_path=None) -> RunConfig:
    """Assemble the run configuration from a JSON/INI file plus CLI overrides."""
    raw: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise SchemaError(f"config file not found: {path}")
        if p.suffix.lower() == ".json":
            raw = json.loads(p.read_text())
        else:
            raw = _parse_ini(p)

    ref = load_reference_design(design_path or raw.get("design_path"))
    design = design_from_dict(raw["design"] if "design" in raw else ref["design"])
    placement = placement_from_dict(
        raw["placement"] if "placement" in raw else ref["placement"])

    exo_kwargs = {k: tuple(v) if isinstance(v, list) else v
                  for k, v in raw.get("exo", {}).items()}
    exo = ExoModel(**exo_kwargs)
    angles = _angles_from(raw)

    catalog_path = raw.get("spring_catalog")
    force_mode = raw.get("force_mode", "ideal")
    if catalog_path is None:
        with resources.as_file(_data_path("springs.csv")) as p:
            catalog = tuple(load_spring_catalog(p, force_mode))
    else:
        catalog = tuple(load_spring_catalog(catalog_path, force_mode))
    spring_name = raw.get("spring", ref.get("spring"))
    spring = next((s for s in catalog if s.name == spring_name), catalog[0])

    user = None
    grid = None
    if "user_grid" in raw:
        g = raw["user_grid"]
        grid = UserGrid(masses=_grid_axis(g["mass"]), heights=_grid_axis(g["height"]),
                        spring_count=int(g.get("springs", 2)))
    elif "user" in raw:
        u = raw["user"]
        user = AnthroInput(float(u["mass"]), float(u["height"]),
                           int(u.get("springs", 2)), u.get("label", "user"))
    else:
        user = AnthroInput(70.0, 1.75, 2, "default_user")

    sim_raw = raw.get("sim", {})
    sim_kwargs = {}
    if "dq_deg" in sim_raw:
        sim_kwargs["dq"] = float(sim_raw["dq_deg"]) * D2R
    for key in ("duration", "gravity", "dt", "timeout", "drive_torque"):
        if key in sim_raw:
            sim_kwargs[key] = float(sim_raw[key])
    sim = SimOptions(**sim_kwargs)

    return RunConfig(
        raw=raw,
        seed=int(seed if seed is not None else raw.get("seed", 0)),
        out_dir=str(out_dir if out_dir is not None else raw.get("out_dir", "out")),
        user=user, grid=grid, exo=exo, angles=angles, spring=spring,
        catalog=catalog, design=design, placement=placement, sim=sim,
        optimizer=raw.get("optimizer", {}),
        controller=raw.get("controller", {}),
        area_a1=tuple(map(tuple, raw.get("area_a1", DEFAULT_A1))),
        area_a2=tuple(map(tuple, raw.get("area_a2", DEFAULT_A2))),
    )
