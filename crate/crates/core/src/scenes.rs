//! Built-in measurement scenes used by the experiment runner, the
//! validation suites, and the regression tests.  Each scene pairs an
//! unknown scatterer inside the enclosing disk with the known sound-soft
//! (or known-index) reference ball placed outside it.

use num_complex::Complex64;

use crate::geometry::{
    BoundaryCondition, BoundaryCurve, ImpedanceProfile, MediumInclusion, ObstacleComponent,
    Point, ReferenceBall, Scene, SceneKind, SplineBump, SurfaceProfile,
};

fn obstacle_ball() -> ReferenceBall {
    ReferenceBall::new(Point::new(3.5, 0.0), 0.3).unwrap()
}

/// Kite-shaped sound-soft obstacle with the reference ball.
pub fn kite_ball() -> Scene {
    Scene {
        kind: SceneKind::Obstacle {
            components: vec![ObstacleComponent {
                curve: BoundaryCurve::kite(Point::new(0.0, 0.0), 1.0).unwrap(),
                bc: BoundaryCondition::Dirichlet,
            }],
        },
        ball: obstacle_ball(),
        enclosing_radius: 2.2,
    }
}

/// Unit-disk sound-soft obstacle with the reference ball.
pub fn disk_ball() -> Scene {
    Scene {
        kind: SceneKind::Obstacle {
            components: vec![ObstacleComponent {
                curve: BoundaryCurve::circle(Point::new(0.0, 0.0), 1.0).unwrap(),
                bc: BoundaryCondition::Dirichlet,
            }],
        },
        ball: obstacle_ball(),
        enclosing_radius: 2.2,
    }
}

/// Kite with a constant absorbing impedance condition, with the ball.
pub fn impedance_kite_ball() -> Scene {
    Scene {
        kind: SceneKind::Obstacle {
            components: vec![ObstacleComponent {
                curve: BoundaryCurve::kite(Point::new(0.0, 0.0), 1.0).unwrap(),
                bc: BoundaryCondition::Impedance(ImpedanceProfile::Constant(Complex64::new(
                    2.0, 0.5,
                ))),
            }],
        },
        ball: obstacle_ball(),
        enclosing_radius: 2.2,
    }
}

/// Compact scene used for the global-phase fixing stage: the outside-field
/// expansion needs `|b| − ρ > R`, which holds here with margin.
pub fn gauge_reference_scene() -> Scene {
    Scene {
        kind: SceneKind::Obstacle {
            components: vec![ObstacleComponent {
                curve: BoundaryCurve::circle(Point::new(0.0, 0.0), 0.7).unwrap(),
                bc: BoundaryCondition::Dirichlet,
            }],
        },
        ball: ReferenceBall::new(Point::new(3.0, 0.0), 0.4).unwrap(),
        enclosing_radius: 1.5,
    }
}

fn medium_ball() -> ReferenceBall {
    ReferenceBall::new(Point::new(3.0, 0.0), 0.5).unwrap()
}

/// Medium scene with no unknown inclusion: only the penetrable reference
/// ball of index `n₀ = 2` scatters.
pub fn medium_ball_only() -> Scene {
    Scene {
        kind: SceneKind::Medium {
            inclusions: Vec::new(),
            ball_index: 2.0,
        },
        ball: medium_ball(),
        enclosing_radius: 1.5,
    }
}

/// One refractive inclusion plus the penetrable reference ball.
pub fn medium_inclusion_ball() -> Scene {
    Scene {
        kind: SceneKind::Medium {
            inclusions: vec![MediumInclusion::Disk {
                center: Point::new(0.0, 0.0),
                radius: 0.6,
                index: Complex64::new(1.5, 0.0),
            }],
            ball_index: 2.0,
        },
        ball: medium_ball(),
        enclosing_radius: 1.5,
    }
}

/// Two disjoint refractive inclusions plus the penetrable reference ball.
pub fn medium_two_inclusions_ball() -> Scene {
    Scene {
        kind: SceneKind::Medium {
            inclusions: vec![
                MediumInclusion::Disk {
                    center: Point::new(-0.7, 0.0),
                    radius: 0.45,
                    index: Complex64::new(1.4, 0.0),
                },
                MediumInclusion::Disk {
                    center: Point::new(0.7, 0.1),
                    radius: 0.45,
                    index: Complex64::new(1.4, 0.0),
                },
            ],
            ball_index: 2.0,
        },
        ball: medium_ball(),
        enclosing_radius: 1.5,
    }
}

fn rough_ball() -> ReferenceBall {
    ReferenceBall::new(Point::new(2.0, 2.5), 0.3).unwrap()
}

/// Single smooth bump on the sound-soft line, ball floating above.
pub fn rough_bump_ball() -> Scene {
    Scene {
        kind: SceneKind::RoughSurface {
            profile: SurfaceProfile::bump(0.8, 0.0, 1.0).unwrap(),
        },
        ball: rough_ball(),
        enclosing_radius: 1.5,
    }
}

/// Two-bump spline perturbation of the line, ball floating above.
pub fn rough_spline_ball() -> Scene {
    Scene {
        kind: SceneKind::RoughSurface {
            profile: SurfaceProfile::spline(vec![
                SplineBump {
                    amplitude: 0.4,
                    center: -0.5,
                    halfwidth: 0.35,
                },
                SplineBump {
                    amplitude: 0.25,
                    center: 0.6,
                    halfwidth: 0.3,
                },
            ])
            .unwrap(),
        },
        ball: rough_ball(),
        enclosing_radius: 1.5,
    }
}

/// All built-in scenes as `(name, scene, default wavenumber)`.
pub fn builtin_scenes() -> Vec<(&'static str, Scene, f64)> {
    vec![
        ("obstacle-kite", kite_ball(), 5.0),
        ("obstacle-disk", disk_ball(), 5.0),
        ("obstacle-impedance", impedance_kite_ball(), 5.0),
        ("obstacle-gauge", gauge_reference_scene(), 2.0),
        ("medium-ball", medium_ball_only(), 2.0),
        ("medium-one", medium_inclusion_ball(), 2.0),
        ("medium-two", medium_two_inclusions_ball(), 2.0),
        ("rough-bump", rough_bump_ball(), 5.0),
        ("rough-spline", rough_spline_ball(), 5.0),
    ]
}

/// Look up a built-in scene by name.
pub fn scene_by_name(name: &str) -> Option<(Scene, f64)> {
    builtin_scenes()
        .into_iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, s, k)| (s, k))
}

/// Default reference incidence index on an `m`-direction grid: the first
/// direction for full-aperture scenes, straight down (`m/2`) for
/// rough-surface scenes.
pub fn default_d0_index(scene: &Scene, m: usize) -> usize {
    match scene.kind {
        SceneKind::RoughSurface { .. } => m / 2,
        _ => 0,
    }
}
