"""Continuous 2D navigation arena with simulated vision and sonar.

A disc-shaped robot moves in a walled rectangle containing axis-aligned
rectangular obstacles and a point target.  Sensing yields the observation
vector (x, y, p, f, b): horizontal target coordinate in the camera view,
target distance mapped affinely onto [-1, 1] (near => -1), a visibility
predicate, and normalized forward/backward sonar ranges.  The reward is a
sum of an obstacle-proximity penalty and a target-visibility bonus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .._validation import check_scalar
from .base import EnvDescriptor

#: Action set: four turns then four translations, signed left-positive /
#: forward-positive.  ("turn", radians) or ("move", meters).
_TURN, _MOVE = "turn", "move"
ACTIONS = (
    (_TURN, math.radians(22.5)),
    (_TURN, math.radians(45.0)),
    (_TURN, -math.radians(22.5)),
    (_TURN, -math.radians(45.0)),
    (_MOVE, 0.05),
    (_MOVE, 0.15),
    (_MOVE, -0.05),
    (_MOVE, -0.15),
)

ACTION_NAMES = ("turn-left-22.5", "turn-left-45", "turn-right-22.5",
                "turn-right-45", "forward-5cm", "forward-15cm",
                "backward-5cm", "backward-15cm")


def arena_actions():
    """The 8 (kind, signed magnitude) action descriptors."""
    return list(ACTIONS)


class ScenarioError(ValueError):
    """Raised for malformed arena scenario files."""


@dataclass(frozen=True)
class ArenaParams:
    """Arena geometry, sensor model, and noise configuration."""

    width: float = 3.0
    depth: float = 4.0
    robot_radius: float = 0.14
    obstacles: tuple = ()
    robot_start: tuple | None = None   # (x, y, heading) or None for random
    target_start: tuple | None = None  # (x, y) or None for random
    fov_deg: float = 60.0
    sonar_range: float = 3.0
    vis_range: float = 5.0
    c_max: float = 6400.0
    kappa: float = 400.0
    reach_threshold: float = 0.25
    target_margin: float = 0.4     # target clearance from walls/obstacles
    actuation_sigma: float = 0.02  # fraction of the commanded magnitude
    sensor_sigma: float = 0.02     # additive, on the normalized sonar values

    def __post_init__(self):
        check_scalar(self.width, "width", 0.0, low_open=True)
        check_scalar(self.depth, "depth", 0.0, low_open=True)
        check_scalar(self.robot_radius, "robot_radius", 0.0,
                     min(self.width, self.depth) / 2, low_open=True,
                     high_open=True)
        check_scalar(self.fov_deg, "fov_deg", 0.0, 360.0, low_open=True)
        check_scalar(self.sonar_range, "sonar_range", 0.0, low_open=True)
        check_scalar(self.vis_range, "vis_range", 0.0, low_open=True)
        check_scalar(self.reach_threshold, "reach_threshold", 0.0, low_open=True)
        check_scalar(self.target_margin, "target_margin", 0.0,
                     min(self.width, self.depth) / 2, high_open=True)
        check_scalar(self.actuation_sigma, "actuation_sigma", 0.0)
        check_scalar(self.sensor_sigma, "sensor_sigma", 0.0)
        for box in self.obstacles:
            x0, y0, x1, y1 = box
            if not (x0 < x1 and y0 < y1):
                raise ScenarioError(f"degenerate obstacle rectangle {box}")

    @classmethod
    def from_file(cls, path):
        """Parse a key = value scenario file (# starts a comment; the
        obstacle key may repeat; poses may be 'random')."""
        with open(path) as fh:
            return cls.from_text(fh.read(), label=str(path))

    @classmethod
    def from_text(cls, text, label="<scenario>"):
        """Parse scenario text in the same key = value format as
        :meth:`from_file`; ``label`` names the source in error messages."""
        kwargs = {}
        obstacles = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ScenarioError(
                    f"{label}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            try:
                cls._parse_entry(key, value, kwargs, obstacles)
            except ScenarioError:
                raise
            except ValueError as exc:
                raise ScenarioError(f"{label}:{lineno}: {exc}") from exc
        if obstacles:
            kwargs["obstacles"] = tuple(obstacles)
        return cls(**kwargs)

    @staticmethod
    def _parse_entry(key, value, kwargs, obstacles):
        floats = ("width", "depth", "robot_radius", "fov_deg", "sonar_range",
                  "vis_range", "c_max", "kappa", "reach_threshold",
                  "target_margin", "actuation_sigma", "sensor_sigma")
        if key in floats:
            kwargs[key] = float(value)
        elif key == "obstacle":
            parts = [float(v) for v in value.split()]
            if len(parts) != 4:
                raise ValueError("obstacle needs 4 numbers: x0 y0 x1 y1")
            obstacles.append(tuple(parts))
        elif key == "robot_start":
            if value != "random":
                parts = [float(v) for v in value.split()]
                if len(parts) != 3:
                    raise ValueError("robot_start needs: x y heading")
                kwargs["robot_start"] = tuple(parts)
        elif key == "target_start":
            if value != "random":
                parts = [float(v) for v in value.split()]
                if len(parts) != 2:
                    raise ValueError("target_start needs: x y")
                kwargs["target_start"] = tuple(parts)
        else:
            raise ScenarioError(f"unknown scenario key {key!r}")


@dataclass
class ArenaState:
    """Ground-truth simulator state."""

    x: float
    y: float
    heading: float
    target_x: float
    target_y: float


@dataclass(frozen=True)
class ArenaObservation:
    """Sensed values; p = 0 forces x = y = 0."""

    x: float
    y: float
    p: float
    f: float
    b: float

    def vector(self):
        return np.array([self.x, self.y, self.p, self.f, self.b])


def arena_reward(obs, c_p):
    """Obstacle penalty plus visibility-gated target bonus."""
    obstacle = -20.0 / max(0.01, min(obs.f, obs.b))
    target = obs.p * (500.0 - 50.0 * abs(obs.x) - 250.0 * obs.y + c_p)
    return obstacle + target


# -- geometry helpers -----------------------------------------------------

def _wrap_angle(a):
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def _ray_box_entry(px, py, dx, dy, box):
    """Entry distance of the ray (p, d) into an AABB, or None if it misses
    or starts past it.  d need not be normalized but must be nonzero."""
    x0, y0, x1, y1 = box
    tmin, tmax = -math.inf, math.inf
    for p, d, lo, hi in ((px, dx, x0, x1), (py, dy, y0, y1)):
        if d == 0.0:
            if not lo <= p <= hi:
                return None
        else:
            t1, t2 = (lo - p) / d, (hi - p) / d
            if t1 > t2:
                t1, t2 = t2, t1
            tmin, tmax = max(tmin, t1), min(tmax, t2)
    if tmax < max(tmin, 0.0):
        return None
    return max(tmin, 0.0)


def _segment_hits_box(px, py, qx, qy, box):
    dx, dy = qx - px, qy - py
    if dx == 0.0 and dy == 0.0:
        x0, y0, x1, y1 = box
        return x0 <= px <= x1 and y0 <= py <= y1
    t = _ray_box_entry(px, py, dx, dy, box)
    return t is not None and t <= 1.0


class ArenaEnv:
    def __init__(self, params=None):
        self.params = params if params is not None else ArenaParams()
        # Observation components are bounded: x, y in [-1, 1]; p in {0, 1};
        # f, b in [0, 1], so a single-observation distance never exceeds
        # sqrt(2^2 + 2^2 + 1 + 1 + 1).
        self.descriptor = EnvDescriptor(action_count=8, obs_dim=5,
                                        obs_scale_bound=math.sqrt(11.0))
        self.state = None
        self._trace_poses = False

    # -- placement --------------------------------------------------------

    def _pose_free(self, x, y):
        p = self.params
        r = p.robot_radius
        if not (r <= x <= p.width - r and r <= y <= p.depth - r):
            return False
        for x0, y0, x1, y1 in p.obstacles:
            if x0 - r <= x <= x1 + r and y0 - r <= y <= y1 + r:
                return False
        return True

    def _target_free(self, x, y, robot_x, robot_y):
        p = self.params
        # The margin keeps targets out of the sonar penalty zone along walls
        # and obstacles, so the final approach is not punished.
        margin = p.target_margin
        if not (margin <= x <= p.width - margin
                and margin <= y <= p.depth - margin):
            return False
        for x0, y0, x1, y1 in p.obstacles:
            if x0 - margin <= x <= x1 + margin and y0 - margin <= y <= y1 + margin:
                return False
        return math.hypot(x - robot_x, y - robot_y) > p.reach_threshold + margin

    def _draw_pose(self, rng):
        p = self.params
        for _ in range(10_000):
            x = rng.uniform(0.0, p.width)
            y = rng.uniform(0.0, p.depth)
            if self._pose_free(x, y):
                return x, y, rng.uniform(-math.pi, math.pi)
        raise RuntimeError("could not place robot; arena too crowded")

    def _draw_target(self, rng, robot_x, robot_y):
        p = self.params
        for _ in range(10_000):
            x = rng.uniform(0.0, p.width)
            y = rng.uniform(0.0, p.depth)
            if self._target_free(x, y, robot_x, robot_y):
                return x, y
        raise RuntimeError("could not place target; arena too crowded")

    def reset(self, place_rng, sense_rng):
        """Place robot and target (scenario-fixed or random) and sense."""
        p = self.params
        if p.robot_start is not None:
            x, y, heading = p.robot_start
            if not self._pose_free(x, y):
                raise ScenarioError("robot_start collides with walls/obstacles")
        else:
            x, y, heading = self._draw_pose(place_rng)
        if p.target_start is not None:
            tx, ty = p.target_start
        else:
            tx, ty = self._draw_target(place_rng, x, y)
        self.state = ArenaState(x, y, _wrap_angle(heading), tx, ty)
        obs, c_p = self.sense(sense_rng)
        return obs.vector(), arena_reward(obs, c_p)

    def new_trial(self, rng):
        """Relocate the target (collision-free); the robot stays put."""
        s = self.state
        s.target_x, s.target_y = self._draw_target(rng, s.x, s.y)

    # -- dynamics ---------------------------------------------------------

    def _free_travel(self, x, y, dx, dy, dist):
        """Maximum travel along the unit direction (dx, dy), stopping at
        contact with walls or (radius-inflated) obstacles."""
        p = self.params
        r = p.robot_radius
        t = dist
        if dx > 0.0:
            t = min(t, (p.width - r - x) / dx)
        elif dx < 0.0:
            t = min(t, (r - x) / dx)
        if dy > 0.0:
            t = min(t, (p.depth - r - y) / dy)
        elif dy < 0.0:
            t = min(t, (r - y) / dy)
        for x0, y0, x1, y1 in p.obstacles:
            entry = _ray_box_entry(x, y, dx, dy,
                                   (x0 - r, y0 - r, x1 + r, y1 + r))
            if entry is not None:
                t = min(t, entry)
        return max(0.0, t)

    def step(self, action, rng):
        """Execute one action with actuation noise, then sense."""
        if not 0 <= action < len(ACTIONS):
            raise ValueError(f"action index {action} out of range")
        kind, magnitude = ACTIONS[action]
        s = self.state
        p = self.params
        noisy = magnitude
        if p.actuation_sigma > 0.0:
            noisy += rng.normal(0.0, p.actuation_sigma * abs(magnitude))
        if kind == _TURN:
            s.heading = _wrap_angle(s.heading + noisy)
        else:
            sign = 1.0 if noisy >= 0.0 else -1.0
            dx = sign * math.cos(s.heading)
            dy = sign * math.sin(s.heading)
            travel = self._free_travel(s.x, s.y, dx, dy, abs(noisy))
            s.x += dx * travel
            s.y += dy * travel
        obs, c_p = self.sense(rng)
        return obs.vector(), arena_reward(obs, c_p), self.trial_done()

    # -- sensing ----------------------------------------------------------

    def _raycast(self, x, y, dx, dy):
        """Distance from (x, y) to the first wall or obstacle surface."""
        p = self.params
        t = math.inf
        if dx > 0.0:
            t = min(t, (p.width - x) / dx)
        elif dx < 0.0:
            t = min(t, (0.0 - x) / dx)
        if dy > 0.0:
            t = min(t, (p.depth - y) / dy)
        elif dy < 0.0:
            t = min(t, (0.0 - y) / dy)
        for box in p.obstacles:
            entry = _ray_box_entry(x, y, dx, dy, box)
            if entry is not None:
                t = min(t, entry)
        return t

    def _occluded(self, s):
        for box in self.params.obstacles:
            if _segment_hits_box(s.x, s.y, s.target_x, s.target_y, box):
                return True
        return False

    def _sonar(self, dx, dy, rng):
        s, p = self.state, self.params
        raw = self._raycast(s.x, s.y, dx, dy) - p.robot_radius
        value = min(max(raw, 0.0), p.sonar_range) / p.sonar_range
        if rng is not None and p.sensor_sigma > 0.0:
            value += rng.normal(0.0, p.sensor_sigma)
        return min(max(value, 0.0), 1.0)

    def sense(self, rng=None):
        """Simulated vision and sonar; returns (ArenaObservation, c_p)."""
        s, p = self.state, self.params
        dxt = s.target_x - s.x
        dyt = s.target_y - s.y
        dist = math.hypot(dxt, dyt)
        half_fov = math.radians(p.fov_deg) / 2.0
        bearing = _wrap_angle(math.atan2(dyt, dxt) - s.heading)
        visible = (dist <= p.vis_range and abs(bearing) <= half_fov
                   and not self._occluded(s))
        if visible:
            x_obs = min(max(bearing / half_fov, -1.0), 1.0)
            y_obs = min(max(2.0 * dist / p.vis_range - 1.0, -1.0), 1.0)
            c_p = p.c_max if dist <= 0.0 else min(p.c_max,
                                                  p.kappa / dist ** 2)
        else:
            x_obs, y_obs, c_p = 0.0, 0.0, 0.0
        f = self._sonar(math.cos(s.heading), math.sin(s.heading), rng)
        b = self._sonar(-math.cos(s.heading), -math.sin(s.heading), rng)
        return ArenaObservation(x=x_obs, y=y_obs, p=float(visible), f=f,
                                b=b), c_p

    def trial_done(self):
        """True when the robot center is within reach of the target
        (closed boundary)."""
        s = self.state
        return math.hypot(s.target_x - s.x,
                          s.target_y - s.y) <= self.params.reach_threshold

    # -- invariant helpers -------------------------------------------------

    def check_state(self):
        """Assert physical soundness of the current state."""
        s, p = self.state, self.params
        r = p.robot_radius
        eps = 1e-9
        if not (r - eps <= s.x <= p.width - r + eps
                and r - eps <= s.y <= p.depth - r + eps):
            raise AssertionError(f"robot center {s.x, s.y} outside inset walls")
        for x0, y0, x1, y1 in p.obstacles:
            if (x0 - r + eps < s.x < x1 + r - eps
                    and y0 - r + eps < s.y < y1 + r - eps):
                raise AssertionError(f"robot overlaps obstacle "
                                     f"{(x0, y0, x1, y1)}")
