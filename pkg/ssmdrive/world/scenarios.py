"""
Scenario templates for the synthetic driving world.

A three-lane road follows a circular arc of constant curvature starting at the
world origin heading along +x. Agents move in road coordinates (arc length s,
left offset d) with a 0.1 s kinematic step and are sampled at 2 Hz. The ego
keeps the centre lane and follows the nearest in-lane leader with the
intelligent driver model, so generated futures are collision-free.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..tokens.types import CameraRig, PerceptionRange, default_rig
from .poses import EgoPose, to_local

AGENT_CLASSES = ("car", "pedestrian")
MAP_CLASSES = ("divider", "crossing", "boundary")
CAR_SIZE = (1.9, 4.5, 1.6)
PEDESTRIAN_SIZE = (0.6, 0.6, 1.8)
EGO_SIZE = CAR_SIZE

LANE_WIDTH = 3.5
SIDEWALK_OFFSET = 7.0
SIM_DT = 0.1
SAMPLE_DT = 0.5
SUBSTEPS = int(round(SAMPLE_DT / SIM_DT))
POINTS_PER_ELEMENT = 20
ELEMENT_LENGTH = 30.0
TURN_CURVATURE = 1.0 / 40.0
HORIZON = 6

# intelligent driver model
IDM_ACCEL = 1.5
IDM_BRAKE = 3.0
IDM_GAP = 3.0
IDM_HEADWAY = 1.2
MAX_BRAKE = 8.0


@dataclass
class AgentTrack:
    cls: str
    size: tuple[float, float, float]
    states: np.ndarray  # (T, 3) world x, y, yaw


@dataclass
class MapElement:
    cls: str
    points: np.ndarray  # (POINTS_PER_ELEMENT, 2) world


@dataclass
class Episode:
    episode_id: str
    template: str
    seed: int
    num_frames: int
    ego_states: np.ndarray  # (T, 3) world x, y, yaw; T = num_frames + HORIZON
    canbus: np.ndarray  # (T, 3) speed, yaw rate, acceleration
    commands: list[str]
    agents: list[AgentTrack]
    map_elements: list[MapElement]
    rig: CameraRig
    ego_size: tuple[float, float, float] = EGO_SIZE
    # applied after world -> ego; identity unless the episode was augmented
    frame_transform: np.ndarray = field(default_factory=lambda: np.eye(3))

    @property
    def num_samples(self) -> int:
        return len(self.ego_states)

    def ego_pose(self, t: int) -> EgoPose:
        """World pose of the ego body at sample t."""
        x, y, yaw = self.ego_states[t]
        return EgoPose(float(x), float(y), float(yaw))

    def local_matrix(self, t: int) -> np.ndarray:
        """3x3 map from world points to the (possibly augmented) ego frame of sample t."""
        return self.frame_transform @ self.ego_pose(t).inverse().matrix()

    def frame_pose(self, t: int) -> EgoPose:
        """Pose of the ego frame of sample t; composes like the unaugmented poses."""
        a = self.frame_transform
        return EgoPose.from_matrix(a @ self.ego_pose(t).matrix() @ np.linalg.inv(a))

    def to_local(self, t: int, points: np.ndarray) -> np.ndarray:
        m = self.local_matrix(t)
        points = np.asarray(points, dtype=np.float64)
        return points @ m[:2, :2].T + m[:2, 2]

    def local_yaw(self, t: int, yaw: np.ndarray | float) -> np.ndarray:
        m = self.local_matrix(t)[:2, :2]
        yaw = np.asarray(yaw, dtype=np.float64)
        vx, vy = np.cos(yaw), np.sin(yaw)
        return np.arctan2(m[1, 0] * vx + m[1, 1] * vy, m[0, 0] * vx + m[0, 1] * vy)

    def local_vectors(self, t: int, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.local_matrix(t)[:2, :2].T


@dataclass(frozen=True)
class Road:
    curvature: float = 0.0

    def centre(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        k = self.curvature
        if k == 0.0:
            return np.stack([s, np.zeros_like(s)], axis=-1)
        return np.stack([np.sin(k * s) / k, (1.0 - np.cos(k * s)) / k], axis=-1)

    def heading(self, s: np.ndarray) -> np.ndarray:
        return self.curvature * np.asarray(s, dtype=np.float64)

    def point(self, s: np.ndarray, d: np.ndarray) -> np.ndarray:
        h = self.heading(s)
        normal = np.stack([-np.sin(h), np.cos(h)], axis=-1)
        return self.centre(s) + np.asarray(d, dtype=np.float64)[..., None] * normal


@dataclass
class Actor:
    """An agent in road coordinates with a scripted behaviour."""

    cls: str
    s: float
    d: float
    v: float
    behaviour: str = "cruise"
    direction: float = 1.0
    decel: float = 0.0
    start: float = 0.0
    duration: float = 3.0
    d_target: float = 0.0
    d_start: float = 0.0
    history: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def size(self) -> tuple[float, float, float]:
        return CAR_SIZE if self.cls == "car" else PEDESTRIAN_SIZE

    def step(self, time: float) -> float:
        """Advance one SIM_DT; returns lateral rate."""
        if self.behaviour == "brake" and time >= self.start:
            self.v = max(0.0, self.v - self.decel * SIM_DT)
        d_rate = 0.0
        if self.behaviour == "cut_in" and self.start <= time < self.start + self.duration:
            # smooth cosine lane change
            phase = (time + SIM_DT - self.start) / self.duration
            d_new = self.d_start + (self.d_target - self.d_start) * 0.5 * (1.0 - math.cos(math.pi * min(phase, 1.0)))
            d_rate = (d_new - self.d) / SIM_DT
            self.d = d_new
        self.s += self.direction * self.v * SIM_DT
        return d_rate


@dataclass
class ScenarioSetup:
    curvature: float
    ego_speed: float
    command: str
    actors: list[Actor]
    crossing_s: float | None = None


ScenarioFn = Callable[[np.random.Generator], ScenarioSetup]
TEMPLATES: dict[str, ScenarioFn] = {}


def register(name: str) -> Callable[[ScenarioFn], ScenarioFn]:
    def wrap(fn: ScenarioFn) -> ScenarioFn:
        TEMPLATES[name] = fn
        return fn

    return wrap


def _side_traffic(rng: np.random.Generator, ego_speed: float, count: int) -> list[Actor]:
    # cars sharing a lane share a speed
    lane_speed = {lane: ego_speed + float(rng.uniform(-1.0, 1.0)) for lane in (-LANE_WIDTH, LANE_WIDTH)}
    actors = []
    for _ in range(count):
        lane = float(rng.choice([-LANE_WIDTH, LANE_WIDTH]))
        actors.append(Actor("car", float(rng.uniform(-22.0, 22.0)), lane, lane_speed[lane]))
    return _spread(actors)


def _spread(actors: list[Actor], min_gap: float = 8.0) -> list[Actor]:
    """Drop same-lane cars closer than ``min_gap`` along the road."""
    kept: list[Actor] = []
    for a in actors:
        if all(abs(a.d - b.d) > 1.0 or abs(a.s - b.s) > min_gap for b in kept):
            kept.append(a)
    return kept


def _pedestrians(rng: np.random.Generator, count: int) -> list[Actor]:
    return [
        Actor(
            "pedestrian",
            float(rng.uniform(-20.0, 20.0)),
            float(rng.choice([-SIDEWALK_OFFSET, SIDEWALK_OFFSET])),
            float(rng.uniform(0.8, 1.5)),
            behaviour="walk",
            direction=float(rng.choice([-1.0, 1.0])),
        )
        for _ in range(count)
    ]


@register("straight-follow")
def straight_follow(rng: np.random.Generator) -> ScenarioSetup:
    speed = float(rng.uniform(6.0, 10.0))
    lead = Actor("car", float(rng.uniform(15.0, 22.0)), 0.0, speed)
    return ScenarioSetup(0.0, speed, "straight", [lead, *_side_traffic(rng, speed, 2), *_pedestrians(rng, 1)])


@register("lead-brake")
def lead_brake(rng: np.random.Generator) -> ScenarioSetup:
    speed = float(rng.uniform(6.0, 10.0))
    lead = Actor(
        "car",
        float(rng.uniform(18.0, 24.0)),
        0.0,
        speed,
        behaviour="brake",
        decel=float(rng.uniform(1.5, 3.0)),
        start=float(rng.uniform(0.5, 2.0)),
    )
    return ScenarioSetup(0.0, speed, "straight", [lead, *_side_traffic(rng, speed, 2)])


@register("cut-in")
def cut_in(rng: np.random.Generator) -> ScenarioSetup:
    speed = float(rng.uniform(6.0, 9.0))
    lane = float(rng.choice([-LANE_WIDTH, LANE_WIDTH]))
    cutter = Actor(
        "car",
        float(rng.uniform(12.0, 18.0)),
        lane,
        speed + float(rng.uniform(0.5, 1.5)),
        behaviour="cut_in",
        start=float(rng.uniform(0.5, 1.5)),
        duration=float(rng.uniform(2.0, 3.0)),
        d_target=0.0,
        d_start=lane,
    )
    others = [a for a in _side_traffic(rng, speed, 2) if a.d != lane or a.s < cutter.s - 10.0]
    return ScenarioSetup(0.0, speed, "straight", [cutter, *others, *_pedestrians(rng, 1)])


@register("side-lane-hazard")
def side_lane_hazard(rng: np.random.Generator) -> ScenarioSetup:
    speed = float(rng.uniform(5.0, 8.0))
    side = float(rng.choice([-1.0, 1.0]))
    parked = Actor("car", float(rng.uniform(12.0, 24.0)), side * LANE_WIDTH, 0.0, behaviour="static")
    ped = Actor("pedestrian", parked.s + float(rng.uniform(-3.0, 3.0)), side * 5.9, 0.0, behaviour="static")
    return ScenarioSetup(0.0, speed, "straight", [parked, ped, *_pedestrians(rng, 1)], crossing_s=float(rng.uniform(20.0, 28.0)))


def _turn(rng: np.random.Generator, sign: float) -> ScenarioSetup:
    speed = float(rng.uniform(5.0, 8.0))
    actors = [Actor("car", float(rng.uniform(14.0, 20.0)), 0.0, speed), *_side_traffic(rng, speed, 1)]
    return ScenarioSetup(sign * TURN_CURVATURE, speed, "left" if sign > 0 else "right", actors)


@register("turn-left")
def turn_left(rng: np.random.Generator) -> ScenarioSetup:
    return _turn(rng, 1.0)


@register("turn-right")
def turn_right(rng: np.random.Generator) -> ScenarioSetup:
    return _turn(rng, -1.0)


def _idm_accel(v: float, gap: float, lead_v: float, desired: float) -> float:
    star = IDM_GAP + v * IDM_HEADWAY + v * (v - lead_v) / (2.0 * math.sqrt(IDM_ACCEL * IDM_BRAKE))
    free = 1.0 - (v / max(desired, 0.1)) ** 4
    interaction = (max(star, 0.0) / max(gap, 0.1)) ** 2 if math.isfinite(gap) else 0.0
    return max(-MAX_BRAKE, IDM_ACCEL * (free - interaction))


def _leader(actors: list[Actor], ego_s: float) -> Actor | None:
    ahead = [a for a in actors if a.cls == "car" and abs(a.d) < 0.5 * LANE_WIDTH + 0.6 and a.s > ego_s]
    return min(ahead, key=lambda a: a.s) if ahead else None


def _map_elements(road: Road, s_from: float, s_to: float, crossing_s: float | None) -> list[MapElement]:
    elements = []
    starts = np.arange(s_from, s_to, ELEMENT_LENGTH)
    for d, cls in ((-1.5 * LANE_WIDTH, "boundary"), (-0.5 * LANE_WIDTH, "divider"), (0.5 * LANE_WIDTH, "divider"), (1.5 * LANE_WIDTH, "boundary")):
        for s0 in starts:
            s = np.linspace(s0, s0 + ELEMENT_LENGTH, POINTS_PER_ELEMENT)
            elements.append(MapElement(cls, road.point(s, np.full_like(s, d))))
    if crossing_s is not None:
        d = np.linspace(-1.5 * LANE_WIDTH, 1.5 * LANE_WIDTH, POINTS_PER_ELEMENT)
        elements.append(MapElement("crossing", road.point(np.full_like(d, crossing_s), d)))
    return elements


def generate(template: str, seed: int, num_frames: int = 6, rig: CameraRig | None = None, episode_id: str | None = None) -> Episode:
    """Deterministically simulate one episode of ``num_frames`` observed frames plus the future horizon."""
    if template not in TEMPLATES:
        raise ConfigError(f"unknown scenario template {template!r}; known: {sorted(TEMPLATES)}")
    rng = np.random.default_rng([seed, sorted(TEMPLATES).index(template)])
    setup = TEMPLATES[template](rng)
    road = Road(setup.curvature)
    samples = num_frames + HORIZON
    ego_s, ego_v = 0.0, setup.ego_speed
    ego_rows, canbus = [], []
    accel = 0.0
    d_rates = {id(a): 0.0 for a in setup.actors}
    for step in range(samples * SUBSTEPS):
        time = step * SIM_DT
        if step % SUBSTEPS == 0:
            ego_rows.append((ego_s, ego_v))
            canbus.append((ego_v, setup.curvature * ego_v, accel))
            for a in setup.actors:
                a.history.append((a.s, a.d, d_rates[id(a)]))
        lead = _leader(setup.actors, ego_s)
        if lead is None:
            accel = _idm_accel(ego_v, math.inf, ego_v, setup.ego_speed)
        else:
            gap = lead.s - ego_s - 0.5 * (lead.size[1] + EGO_SIZE[1])
            accel = _idm_accel(ego_v, gap, lead.v, setup.ego_speed)
        ego_v = max(0.0, ego_v + accel * SIM_DT)
        ego_s += ego_v * SIM_DT
        for a in setup.actors:
            d_rates[id(a)] = a.step(time)

    s_e = np.array([r[0] for r in ego_rows])
    ego_xy = road.point(s_e, np.zeros_like(s_e))
    ego_states = np.concatenate([ego_xy, road.heading(s_e)[:, None]], axis=1)
    frame0 = EgoPose(*ego_states[0])
    bev = PerceptionRange()

    agents = []
    for a in setup.actors:
        hist = np.array(a.history)
        xy = road.point(hist[:, 0], hist[:, 1])
        yaw = road.heading(hist[:, 0]) + np.arctan2(hist[:, 2], max(a.v, 0.5)) + (math.pi if a.direction < 0 else 0.0)
        if not bev.contains(to_local(frame0, xy[:1]))[0]:
            continue
        agents.append(AgentTrack(a.cls, a.size, np.concatenate([xy, yaw[:, None]], axis=1)))

    elements = _map_elements(road, -30.0, s_e[-1] + 40.0, setup.crossing_s)
    commands = [setup.command] * samples
    episode = Episode(
        episode_id=episode_id or f"{template}-{seed:06d}",
        template=template,
        seed=seed,
        num_frames=num_frames,
        ego_states=ego_states,
        canbus=np.array(canbus),
        commands=commands,
        agents=agents,
        map_elements=elements,
        rig=rig or default_rig(),
    )
    logging.debug(f"Generated {episode.episode_id}: {len(agents)} agents, {len(elements)} map elements")
    return episode
