//! Private uniformity testing with the collision statistic and private
//! triangle density of random geometric graphs.

pub mod rgg;
pub mod uniformity;

pub use rgg::{
    private_triangle_density, private_triangle_density_with, sample_rgg, sphere_point, triangle_xi, GeometricGraph,
    LatentTriangle, Point3, TriangleConfig, TriangleKernel, TriangleOutcome, TriangleSource,
};
pub use uniformity::{
    collision_kernel, collision_theta, collision_variance, sample_multinomial, uniformity_test,
    uniformity_test_boosted, uniformity_xi, CollisionSource, PerturbedUniform, TestDecision, UniformityConfig,
};
