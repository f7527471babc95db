use proptest::prelude::*;
use std::sync::Arc;
use wbc_baseline::config::Config5D;
use wbc_baseline::execute;
use wbc_baseline::trajectory::{time_parameterize, Limits};
use wbc_core::env::{Env, EnvConfig, EpisodeSetup};
use wbc_core::geometry::{Aabb, Ellipse, OrientedBox, Vec2};
use wbc_core::robot::{forward_kinematics, RobotParams};
use wbc_core::world::{Line, WorldModel};

fn limits() -> Limits {
    Limits::for_robot(&RobotParams::default())
}

#[test]
fn one_meter_translation_duration() {
    // Cruise 1 m at 0.1 m/s plus one accel/decel pair at 0.15 m/s^2.
    let expected = 1.0 / 0.1 + 0.1 / 0.15;
    let path = [Config5D::new([0.0; 5]), Config5D::new([1.0, 0.0, 0.0, 0.0, 0.0])];
    let t = time_parameterize(&path, &limits());
    assert!((t.duration() - expected).abs() < 1e-12, "{}", t.duration());
}

#[test]
fn empty_and_single_point_paths_take_no_time() {
    assert_eq!(time_parameterize(&[], &limits()).duration(), 0.0);
    assert_eq!(time_parameterize(&[Config5D::new([1.0; 5])], &limits()).duration(), 0.0);
}

fn config() -> impl Strategy<Value = Config5D> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.1..3.1f64, -2.5..2.5f64, -2.5..2.5f64).prop_map(|(a, b, c, d, e)| Config5D::new([a, b, c, d, e]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_motion_respects_limits(path in prop::collection::vec(config(), 1..6)) {
        let lim = limits();
        let traj = time_parameterize(&path, &lim);
        traj.validate().unwrap();
        prop_assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        let n = 2000;
        for k in 0..=n {
            let p = traj.sample(traj.duration() * k as f64 / n as f64);
            for i in 0..5 {
                prop_assert!(p.vel[i].abs() <= lim.vel[i] * (1.0 + 1e-9), "dim {} vel {}", i, p.vel[i]);
                prop_assert!(p.acc[i].abs() <= lim.acc[i] * (1.0 + 1e-9), "dim {} acc {}", i, p.acc[i]);
            }
        }
        // Rest at every waypoint.
        for &t in &traj.times {
            let p = traj.sample(t);
            prop_assert!(p.vel.iter().all(|v| v.abs() < 1e-9));
        }
        let end = traj.sample(traj.duration() + 1.0);
        prop_assert_eq!(end.q, *traj.waypoints.last().unwrap());
    }
}

/// Free-space execution: tracking adds at most a quarter of the nominal
/// duration on top of the hold phase.
#[test]
fn free_space_tracking_overhead() {
    let world = Arc::new(WorldModel {
        obstacles: vec![],
        corridor_axis: Line { origin: Vec2::ZERO, direction: Vec2::new(1.0, 0.0) },
        corridor_width: 6.0,
        goal_region: OrientedBox { center: Vec2::new(2.0, 0.0), half_extents: Vec2::new(0.5, 0.5), yaw: 0.0 },
        spawn_region: Ellipse { center: Vec2::ZERO, semi_axes: Vec2::new(0.5, 0.5) },
        spawn_heading: 0.0,
        spawn_heading_spread: 0.0,
        bounds: Aabb::new(Vec2::new(-4.0, -4.0), Vec2::new(6.0, 4.0)),
    });
    let cfg = EnvConfig::default();
    let robot = cfg.robot.clone();
    let hold = cfg.reward.hold_steps() as f64 * robot.control_period;
    let mut env = Env::new(cfg).unwrap();
    env.set_tolerance(0.07);
    let cases = [
        ([0.0, 0.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.5, -0.5]),
        ([0.0, 0.0, 0.0, 0.3, 0.3], [1.5, 1.0, 0.8, -0.4, 1.0]),
        ([0.0, 0.0, 1.0, -1.0, 0.5], [-1.0, 2.0, -1.5, 1.0, -0.5]),
    ];
    for (a, b) in cases {
        let start = Config5D::new(a);
        let goal = Config5D::new(b);
        let traj = time_parameterize(&[start, goal], &Limits::for_robot(&robot));
        let target = forward_kinematics(&goal.to_state(), &robot).position();
        env.reset_with(world.clone(), EpisodeSetup { start: start.to_state(), goal: target }, 0).unwrap();
        let res = execute(&traj, &mut env).unwrap();
        assert!(res.outcome.is_success(), "{a:?} -> {b:?}: {:?}", res.outcome);
        let exec = res.steps as f64 * robot.control_period - hold;
        assert!(exec <= 1.25 * traj.duration(), "{exec} vs nominal {}", traj.duration());
        let straight = Vec2::new(a[0], a[1]).dist(env.state().base.position());
        assert!(res.base_distance >= straight - 1e-9);
    }
}
