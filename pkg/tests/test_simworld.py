import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowguard.simworld import (
    Circle,
    Contact,
    DriverConfig,
    OracleDriver,
    PIState,
    VehicleParams,
    VehicleState,
    Wall,
    WorldSpec,
    bearing_to,
    check_collision,
    empty_world,
    pi_speed_update,
    scenario,
    scenario_names,
    step_vehicle,
    wrap_angle,
)

PARAMS = VehicleParams()


class TestWrapAngle:
    @given(st.floats(-50.0, 50.0))
    def test_range_and_equivalence(self, a):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-12)
        assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-12)


class TestStepVehicle:
    def test_straight_line(self):
        s0 = VehicleState(speed=1.0, heading=0.7)
        s1 = step_vehicle(s0, 0.5, 1.0, PARAMS, dt=1.0)
        assert s1.heading == s0.heading
        assert s1.x == pytest.approx(math.cos(0.7))
        assert s1.y == pytest.approx(math.sin(0.7))

    def test_zero_speed_stays_put(self):
        s0 = VehicleState(x=1.0, y=2.0, heading=0.3, speed=0.0)
        s1 = step_vehicle(s0, 0.9, 0.0, PARAMS, dt=0.1)
        assert (s1.x, s1.y, s1.heading) == (1.0, 2.0, 0.3)

    def test_steer_right_turns_clockwise(self):
        s0 = VehicleState(speed=1.0)
        s1 = step_vehicle(s0, 1.0, 1.0, PARAMS, dt=0.1)
        s2 = step_vehicle(s1, 1.0, 1.0, PARAMS, dt=0.1)
        assert s1.heading < 0  # right = clockwise = decreasing heading
        assert s2.y < 0  # curving toward the right of the initial heading

    def test_turning_circle_closes(self):
        # constant wheel angle 0.3 rad: radius L/tan(0.3); after one full
        # circumference the integrated trajectory returns to the start
        delta = 0.3
        steer = 0.5 * (1.0 + delta / PARAMS.max_steer_angle)
        radius = PARAMS.wheelbase / math.tan(delta)
        v, dt = 0.5, 1e-3
        steps = int(round((2 * math.pi * radius / v) / dt))
        s = VehicleState(speed=v)
        for _ in range(steps):
            s = step_vehicle(s, steer, v, PARAMS, dt)
        assert math.hypot(s.x, s.y) < 1e-2
        assert abs(wrap_angle(s.heading)) < 0.05

    def test_curvature_matches_wheel_angle(self):
        # heading rate = -v/L * tan(delta) within O(dt)
        v, dt = 1.0, 1e-4
        s0 = VehicleState(speed=v)
        s1 = step_vehicle(s0, 0.8, v, PARAMS, dt)
        expect = -(v / PARAMS.wheelbase) * math.tan(PARAMS.wheel_angle(0.8))
        assert (s1.heading - s0.heading) / dt == pytest.approx(expect)

    @given(
        st.floats(0.0, 1.0),
        st.floats(0.0, 2.0),
        st.floats(-math.pi, math.pi),
    )
    def test_displacement_bounded_by_v_dt(self, steer, v, heading):
        dt = 1.0 / 30.0
        s0 = VehicleState(heading=heading, speed=v)
        s1 = step_vehicle(s0, steer, v, PARAMS, dt)
        assert math.hypot(s1.x - s0.x, s1.y - s0.y) <= v * dt + 1e-12

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            step_vehicle(VehicleState(), 0.5, 0.0, PARAMS, dt=0.0)


class TestCollision:
    def test_far_obstacle_none(self):
        world = WorldSpec("w", (Circle(10.0, 0.0, 1.0),), (-20, -20, 20, 20))
        assert check_collision(VehicleState(), world, PARAMS) is None

    def test_boundary_is_exclusive(self):
        r = 0.2
        d = PARAMS.body_radius + r
        world = WorldSpec("w", (Circle(d, 0.0, r),), (-20, -20, 20, 20))
        assert check_collision(VehicleState(), world, PARAMS) is None
        closer = WorldSpec("w", (Circle(d - 0.001, 0.0, r),), (-20, -20, 20, 20))
        hit = check_collision(VehicleState(), closer, PARAMS)
        assert hit == Contact(0, pytest.approx(0.001))

    def test_wall_contact(self):
        world = WorldSpec("w", (Wall(1.0, -5.0, 1.0, 5.0),), (-20, -20, 20, 20))
        assert check_collision(VehicleState(x=0.5), world, PARAMS) is None
        hit = check_collision(VehicleState(x=0.9), world, PARAMS)
        assert hit is not None and hit.obstacle_id == 0
        assert hit.penetration == pytest.approx(PARAMS.body_radius - 0.1)

    def test_out_of_bounds_is_wall_contact(self):
        world = empty_world(extent=1.0)
        assert check_collision(VehicleState(), world, PARAMS) is None
        hit = check_collision(VehicleState(x=0.95), world, PARAMS)
        assert hit is not None and hit.obstacle_id == "bounds"

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_circle_overlap_matches_point_sampling(self, data):
        # brute-force oracle: sample the vehicle disc densely; overlap iff
        # some sampled point falls strictly inside the obstacle
        cx = data.draw(st.floats(-1.0, 1.0))
        cy = data.draw(st.floats(-1.0, 1.0))
        r = data.draw(st.floats(0.05, 0.8))
        world = WorldSpec("w", (Circle(cx, cy, r),), (-50, -50, 50, 50))
        state = VehicleState()
        got = check_collision(state, world, PARAMS) is not None
        dist = math.hypot(cx, cy)
        if abs(dist - (PARAMS.body_radius + r)) < 1e-6:
            return  # exact-boundary draws are ambiguous under sampling
        ts = np.linspace(0, 2 * math.pi, 720, endpoint=False)
        rs = np.linspace(0, PARAMS.body_radius, 60)
        pts_x = np.outer(rs, np.cos(ts)).ravel()
        pts_y = np.outer(rs, np.sin(ts)).ravel()
        sampled = bool(np.any(np.hypot(pts_x - cx, pts_y - cy) < r - 1e-9))
        assert got == sampled


class TestPISpeed:
    def test_zero_error_zero_command(self):
        _, cmd = pi_speed_update(PIState(), 1.0, 1.0, 0.01)
        assert cmd == 0.0

    def test_command_clamps_at_one(self):
        _, cmd = pi_speed_update(PIState(), 100.0, 0.0, 0.01)
        assert cmd == 1.0

    def test_integral_clamped(self):
        pi = PIState()
        for _ in range(10000):
            pi, _ = pi_speed_update(pi, 100.0, 0.0, 0.01)
        assert pi.integral == pi.integral_max

    def test_step_response_on_first_order_motor(self):
        # motor: speed' = (gain * throttle - speed) / tau
        gain, tau, dt = 2.0, 0.2, 0.01
        pi = PIState(kp=0.8, ki=2.0)
        speed, setpoint = 0.0, 1.0
        trace = []
        for _ in range(int(30.0 / dt)):
            pi, cmd = pi_speed_update(pi, setpoint, speed, dt)
            speed += (gain * cmd - speed) / tau * dt
            trace.append(speed)
        settle = int(2.0 / dt)
        assert abs(trace[settle] - setpoint) < 0.05 * setpoint
        assert all(abs(s - setpoint) < 0.05 * setpoint for s in trace[settle:])

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            pi_speed_update(PIState(), 1.0, 0.0, 0.0)


class TestOracleDriver:
    def test_empty_world_no_override(self):
        driver = OracleDriver(empty_world(), DriverConfig(), [(5.0, 0.0)])
        out, exact = driver.step(VehicleState())
        assert not out.override_active
        assert exact == "none"
        assert out.desired_steer == pytest.approx(0.5)

    def test_desired_steers_toward_left_waypoint(self):
        driver = OracleDriver(empty_world(), DriverConfig(), [(1.0, 1.0)])
        out, _ = driver.step(VehicleState())
        assert out.desired_steer < 0.5  # waypoint on the left

    def test_desired_steers_toward_right_waypoint(self):
        driver = OracleDriver(empty_world(), DriverConfig(), [(1.0, -1.0)])
        out, _ = driver.step(VehicleState())
        assert out.desired_steer > 0.5

    def test_obstacle_slightly_right_steers_left(self):
        cfg = DriverConfig(d_trig=1.4)
        world = WorldSpec("w", (Circle(0.7, -0.05, 0.1),), (-20, -20, 20, 20))
        driver = OracleDriver(world, cfg, [(5.0, 0.0)])
        out, exact = driver.step(VehicleState())
        assert out.override_active
        assert out.override_steer == 0.0
        assert exact == "left"

    def test_obstacle_left_steers_right(self):
        world = WorldSpec("w", (Circle(0.7, 0.2, 0.1),), (-20, -20, 20, 20))
        driver = OracleDriver(world, DriverConfig(), [(5.0, 0.0)])
        out, exact = driver.step(VehicleState())
        assert out.override_active and out.override_steer == 1.0
        assert exact == "right"

    def test_outside_cone_ignored(self):
        # obstacle 90 degrees to the side, well within d_trig
        world = WorldSpec("w", (Circle(0.0, 0.5, 0.1),), (-20, -20, 20, 20))
        driver = OracleDriver(world, DriverConfig(), [(5.0, 0.0)])
        out, _ = driver.step(VehicleState())
        assert not out.override_active

    def test_hold_persists_exactly_n_frames(self):
        world = WorldSpec("w", (Circle(0.7, 0.0, 0.1),), (-20, -20, 20, 20))
        driver = OracleDriver(world, DriverConfig(hold_extra_frames=5), [(5.0, 0.0)])
        near = VehicleState()
        far = VehicleState(x=-10.0, y=-10.0, heading=math.pi)
        out, exact = driver.step(near)
        assert out.override_active and exact == "left"
        held = []
        for _ in range(8):
            out, exact = driver.step(far)
            held.append(out.override_active)
            assert exact == "none"
        assert held == [True] * 5 + [False] * 3

    def test_deterministic(self):
        world = scenario("pollers")
        cfg = DriverConfig(hold_extra_frames=3)
        states = [
            VehicleState(x=0.1 * i, y=0.02 * i, heading=0.05 * i, speed=1.0)
            for i in range(50)
        ]
        a = [OracleDriver(world, cfg, [(5.0, 0.0)]).step(s) for s in states]
        b = [OracleDriver(world, cfg, [(5.0, 0.0)]).step(s) for s in states]
        assert a == b


class TestScenarios:
    def test_names(self):
        assert scenario_names() == ["frontal_wall", "perimeter", "pollers", "spheres"]
        with pytest.raises(KeyError):
            scenario("lava")

    def test_pollers_geometry(self):
        w = scenario("pollers")
        circles = [o for o in w.obstacles if isinstance(o, Circle)]
        assert len(circles) == 2 and len(w.obstacles) == 2
        a, b = circles
        gap = math.hypot(a.cx - b.cx, a.cy - b.cy) - a.r - b.r
        assert gap == pytest.approx(1.0)
        assert gap > 2 * PARAMS.body_radius

    def test_spheres_geometry(self):
        w = scenario("spheres")
        a, b = w.obstacles
        assert a.r == b.r == 0.3
        assert math.hypot(a.cx - b.cx, a.cy - b.cy) == pytest.approx(2.0)

    def test_frontal_wall_is_one_wall(self):
        w = scenario("frontal_wall")
        assert len(w.obstacles) == 1 and isinstance(w.obstacles[0], Wall)

    @pytest.mark.parametrize("heading", [0.0, 1.0, 2.2, 3.1, -2.0, -0.7])
    def test_perimeter_straight_paths_collide(self, heading):
        w = scenario("perimeter")
        s = VehicleState(heading=heading, speed=1.0)
        for _ in range(1000):
            if check_collision(s, w, PARAMS):
                return
            s = step_vehicle(s, 0.5, 1.0, PARAMS, 1.0 / 30.0)
        pytest.fail("straight path never collided in a closed perimeter")

    def test_empty_world_has_no_obstacles(self):
        assert empty_world().obstacles == ()


class TestBearing:
    def test_left_positive(self):
        s = VehicleState(heading=0.0)
        assert bearing_to(s, 1.0, 1.0) > 0
        assert bearing_to(s, 1.0, -1.0) < 0
        assert bearing_to(s, 1.0, 0.0) == 0.0
