//! Tip-wrench grid defining the rod shape set.

use compliance_core::Wrench;
use nalgebra::Vector6;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::GridSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    /// Position in the full grid, stable under subsampling.
    pub id: usize,
    pub wrench: Wrench,
}

/// Number of shapes in the full grid, before sampling.
pub fn grid_size(grid: &GridSpec) -> usize {
    let f = grid.force_levels.len().pow(grid.force_axes.len() as u32);
    let m = grid.moment_levels.len().pow(grid.moment_axes.len() as u32);
    f * m * grid.axial_offsets.len().max(1)
}

/// Cartesian grid of tip wrenches, ordered with the moment axes varying
/// slowest and the axial offset fastest; a seeded subset when sampling.
pub fn generate_shape_set(grid: &GridSpec, seed: u64) -> Vec<Shape> {
    let offsets = if grid.axial_offsets.is_empty() {
        vec![0.0]
    } else {
        grid.axial_offsets.clone()
    };
    // Each dimension: (wrench component, levels).
    let mut dims: Vec<(Option<usize>, &[f64])> = Vec::new();
    for &a in &grid.moment_axes {
        dims.push((Some(a), &grid.moment_levels));
    }
    for &a in &grid.force_axes {
        dims.push((Some(3 + a), &grid.force_levels));
    }
    dims.push((None, &offsets));

    let total = grid_size(grid);
    let mut shapes = Vec::with_capacity(total);
    for id in 0..total {
        let mut v = Vector6::zeros();
        let mut rest = id;
        for (component, levels) in dims.iter().rev() {
            let level = levels[rest % levels.len()];
            rest /= levels.len();
            match component {
                Some(k) => v[*k] += level,
                None => v[5] += level,
            }
        }
        shapes.push(Shape {
            id,
            wrench: Wrench::from_vector(&v),
        });
    }

    match grid.sample {
        Some(k) if k < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = sample(&mut rng, total, k).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| shapes[i].clone()).collect()
        }
        _ => shapes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn force_only() -> GridSpec {
        GridSpec {
            force_axes: vec![0, 1, 2],
            force_levels: vec![-1.0, 0.0, 1.0],
            moment_axes: vec![],
            moment_levels: vec![],
            axial_offsets: vec![],
            sample: None,
        }
    }

    #[test]
    fn force_only_grid_has_27_shapes() {
        let shapes = generate_shape_set(&force_only(), 0);
        assert_eq!(shapes.len(), 27);
        assert!(shapes.iter().all(|s| s.wrench.moment == nalgebra::Vector3::zeros()));
    }

    #[test]
    fn full_grid_has_729_distinct_shapes() {
        let c = ExperimentConfig::default_preset();
        let shapes = generate_shape_set(&c.grid, c.seed);
        assert_eq!(shapes.len(), 729);
        assert_distinct(&shapes);
        assert_eq!(shapes[0].wrench.to_vector(), Vector6::new(-0.5, -0.5, -0.5, -1.0, -1.0, -1.0));
        assert!(shapes.iter().any(|s| s.wrench.is_zero()));
    }

    #[test]
    fn extended_preset_has_2187_distinct_shapes() {
        let c = ExperimentConfig::parse(crate::config::GRID_2187_PRESET).unwrap();
        let shapes = generate_shape_set(&c.grid, c.seed);
        assert_eq!(shapes.len(), 2187);
        assert_distinct(&shapes);
    }

    #[test]
    fn sampling_is_seeded() {
        let mut g = force_only();
        g.sample = Some(5);
        let a = generate_shape_set(&g, 3);
        assert_eq!(a.len(), 5);
        assert_eq!(a, generate_shape_set(&g, 3));
        assert!(a.windows(2).all(|w| w[0].id < w[1].id));
    }

    fn assert_distinct(shapes: &[Shape]) {
        for (i, a) in shapes.iter().enumerate() {
            for b in &shapes[i + 1..] {
                assert!((a.wrench.to_vector() - b.wrench.to_vector()).norm() > 1e-12);
            }
        }
    }
}
