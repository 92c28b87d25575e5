//! The 2-D three-cluster toy problem used to visualize remembered decision
//! boundaries.
//!
//! Three isotropic Gaussian clusters (black, red, light blue) sit at seeded
//! centers at least six standard deviations apart, so each pairwise task is
//! comfortably linearly separable and any forgetting is attributable to the
//! training method. Task 1 separates black from red; task 2 separates black
//! from light blue; both tasks share the identical black points.
//!
//! The seeded placement keeps red and light blue on roughly opposite sides
//! of black (random orientation and spacing, jittered up to ~30 degrees
//! from collinear). With red inside the half-plane that task 2 assigns to
//! "black", an unconstrained learner that retrains on task 2 must start
//! classifying red points as black, which is exactly the forgetting the
//! experiment is meant to expose.
//!
//! All coordinates are mapped into the unit square with one common scale
//! factor (isotropy preserved).

use crate::error::Result;
use crate::numerics::matrix::Matrix;
use crate::numerics::rng::{RngStream, StreamDomain};
use crate::scalar::Scalar;

use super::{Dataset, HeadMode, Task, TaskSequence};

pub const CLUSTER_SIGMA: f64 = 1.0;
pub const CLUSTER_MIN_SEPARATION: f64 = 6.0;
pub const POINTS_PER_CLUSTER: usize = 200; // per split (train and test)

/// Axis-aligned window in feature space, used for heatmap rendering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// Index of each cluster in [`ClusterExperiment::centers`].
pub mod cluster {
    pub const BLACK: usize = 0;
    pub const RED: usize = 1;
    pub const LIGHT_BLUE: usize = 2;
}

pub struct ClusterExperiment<T> {
    /// Task 1: black (label 0) vs red (label 1).
    pub task1: Task<T>,
    /// Task 2: black (label 0) vs light blue (label 1).
    pub task2: Task<T>,
    /// Bounding box of all points, padded 20% per side.
    pub plot_region: Region,
    /// Cluster centers after rescaling (black, red, light blue).
    pub centers: [(f64, f64); 3],
    /// Standard deviation after rescaling.
    pub sigma: f64,
}

impl<T: Scalar> ClusterExperiment<T> {
    pub fn into_sequence(self) -> Result<TaskSequence<T>> {
        TaskSequence::from_tasks(vec![self.task1, self.task2], HeadMode::MultiHead, 2)
    }
}

fn draw_centers(rng: &mut RngStream) -> [(f64, f64); 3] {
    let black = (rng.uniform_in(8.0, 12.0), rng.uniform_in(8.0, 12.0));
    let theta = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
    let d_red = rng.uniform_in(6.5, 9.0) * CLUSTER_SIGMA;
    let d_blue = rng.uniform_in(6.5, 9.0) * CLUSTER_SIGMA;
    let jitter = rng.uniform_in(-0.5, 0.5); // radians off collinear
    let red = (black.0 + d_red * theta.cos(), black.1 + d_red * theta.sin());
    let phi = theta + std::f64::consts::PI + jitter;
    let blue = (black.0 + d_blue * phi.cos(), black.1 + d_blue * phi.sin());
    [black, red, blue]
}

fn draw_cluster(center: (f64, f64), n: usize, rng: &mut RngStream) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| {
            (
                center.0 + CLUSTER_SIGMA * rng.normal(),
                center.1 + CLUSTER_SIGMA * rng.normal(),
            )
        })
        .collect()
}

fn to_dataset<T: Scalar>(a: &[(f64, f64)], b: &[(f64, f64)]) -> Dataset<T> {
    let n = a.len() + b.len();
    let mut features = Matrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for (i, &(x, y)) in a.iter().chain(b).enumerate() {
        features.set(i, 0, T::from_f64_lossy(x));
        features.set(i, 1, T::from_f64_lossy(y));
        labels.push(if i < a.len() { 0 } else { 1 });
    }
    Dataset {
        features,
        labels,
        class_names: None,
    }
}

/// Generates the two-task cluster experiment.
pub fn gen_clusters<T: Scalar>(seed: u64) -> ClusterExperiment<T> {
    let mut rng = RngStream::for_domain(seed, StreamDomain::Clusters, 0, 0);
    let raw_centers = draw_centers(&mut rng);

    // train and test points per cluster, in cluster order
    let mut train: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut test: Vec<Vec<(f64, f64)>> = Vec::new();
    for &c in &raw_centers {
        train.push(draw_cluster(c, POINTS_PER_CLUSTER, &mut rng));
        test.push(draw_cluster(c, POINTS_PER_CLUSTER, &mut rng));
    }

    // map everything into the unit square with one shared scale
    let all: Vec<(f64, f64)> = train.iter().chain(&test).flatten().copied().collect();
    let min_x = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_y = all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let scale = 1.0 / (max_x - min_x).max(max_y - min_y);
    let remap = |p: (f64, f64)| ((p.0 - min_x) * scale, (p.1 - min_y) * scale);
    let train: Vec<Vec<(f64, f64)>> = train
        .into_iter()
        .map(|c| c.into_iter().map(remap).collect())
        .collect();
    let test: Vec<Vec<(f64, f64)>> = test
        .into_iter()
        .map(|c| c.into_iter().map(remap).collect())
        .collect();
    let centers = [
        remap(raw_centers[0]),
        remap(raw_centers[1]),
        remap(raw_centers[2]),
    ];

    let span_x = (max_x - min_x) * scale;
    let span_y = (max_y - min_y) * scale;
    let plot_region = Region {
        x_min: -0.2 * span_x,
        x_max: span_x * 1.2,
        y_min: -0.2 * span_y,
        y_max: span_y * 1.2,
    };

    let task1 = Task {
        task_id: 1,
        train: to_dataset(&train[cluster::BLACK], &train[cluster::RED]),
        test: to_dataset(&test[cluster::BLACK], &test[cluster::RED]),
        global_class_ids: vec![0, 1],
        head_dim: 2,
    };
    let task2 = Task {
        task_id: 2,
        train: to_dataset(&train[cluster::BLACK], &train[cluster::LIGHT_BLUE]),
        test: to_dataset(&test[cluster::BLACK], &test[cluster::LIGHT_BLUE]),
        global_class_ids: vec![0, 1],
        head_dim: 2,
    };

    ClusterExperiment {
        task1,
        task2,
        plot_region,
        centers,
        sigma: scale * CLUSTER_SIGMA,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_means_sit_near_their_centers() {
        let exp = gen_clusters::<f64>(17);
        // black = first half of task1 train, red = second half,
        // light blue = second half of task2 train
        let tol = 3.0 * exp.sigma / (POINTS_PER_CLUSTER as f64).sqrt();
        let mean_of = |task: &Task<f64>, label: usize| {
            let rows: Vec<usize> = (0..task.train.len())
                .filter(|&i| task.train.labels[i] == label)
                .collect();
            let mut mx = 0.0;
            let mut my = 0.0;
            for &i in &rows {
                mx += task.train.features.get(i, 0);
                my += task.train.features.get(i, 1);
            }
            (mx / rows.len() as f64, my / rows.len() as f64)
        };
        for (task, label, center) in [
            (&exp.task1, 0, exp.centers[cluster::BLACK]),
            (&exp.task1, 1, exp.centers[cluster::RED]),
            (&exp.task2, 1, exp.centers[cluster::LIGHT_BLUE]),
        ] {
            let (mx, my) = mean_of(task, label);
            assert!((mx - center.0).abs() <= tol, "{mx} vs {}", center.0);
            assert!((my - center.1).abs() <= tol, "{my} vs {}", center.1);
        }
    }

    #[test]
    fn both_tasks_share_the_black_points() {
        let exp = gen_clusters::<f64>(23);
        for i in 0..POINTS_PER_CLUSTER {
            assert_eq!(exp.task1.train.features.row(i), exp.task2.train.features.row(i));
            assert_eq!(exp.task1.test.features.row(i), exp.task2.test.features.row(i));
        }
    }

    #[test]
    fn features_land_in_the_unit_interval() {
        let exp = gen_clusters::<f32>(29);
        exp.task1.train.validate(2).unwrap();
        exp.task2.test.validate(2).unwrap();
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let a = gen_clusters::<f64>(31);
        let b = gen_clusters::<f64>(31);
        assert_eq!(a.task1.train.features, b.task1.train.features);
        assert_eq!(a.centers, b.centers);
    }

    #[test]
    fn centers_are_separated_and_red_opposes_light_blue() {
        for seed in 0..20u64 {
            let exp = gen_clusters::<f64>(seed);
            let [black, red, blue] = exp.centers;
            let dist = |a: (f64, f64), b: (f64, f64)| {
                ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
            };
            for (a, b) in [(black, red), (black, blue), (red, blue)] {
                assert!(dist(a, b) >= 6.0 * exp.sigma, "seed {seed}");
            }
            // red and light blue sit on opposite sides of black
            let dot = (red.0 - black.0) * (blue.0 - black.0)
                + (red.1 - black.1) * (blue.1 - black.1);
            assert!(dot < 0.0, "seed {seed}: dot {dot}");
        }
    }

    // Separability (a linear-ish classifier reaching >= 0.95 on each task)
    // is exercised in the training-loop tests where a trainer exists.
}
