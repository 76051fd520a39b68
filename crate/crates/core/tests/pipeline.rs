use lbstrip::density::{column_average, normalize, relative_error, summarize_error, Normalization};
use lbstrip::geometry::{DomainConfig, Obstacle, Vec2};
use lbstrip::grid::GridSpec;
use lbstrip::laplace::{solve, SolverSettings};
use lbstrip::scattering::{KernelParams, Side};
use lbstrip::transport::{run_batch, BatchSettings};

fn strip() -> DomainConfig {
    DomainConfig::empty(4.0, 1.0, 1.0, 0.5)
}

#[test]
fn empty_strip_column_profile_has_diffusive_slope() {
    let config = strip();
    let batch = run_batch(&config, KernelParams::new(0.02), &BatchSettings::new(200_000, GridSpec::new(40, 10), 3)).unwrap();
    let density = normalize(&batch.sojourn, &config, Normalization::ColumnMean).unwrap();
    let cols: Vec<f64> = column_average(&density).into_iter().map(Option::unwrap).collect();
    let xs: Vec<f64> = (0..cols.len()).map(|i| (i as f64 + 0.5) * density.layout.cell).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, cols.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&cols).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!(slope < 0.0);
    assert!((slope / -0.125 - 1.0).abs() < 0.10, "slope {slope}");
}

#[test]
fn deposited_time_matches_trajectory_times() {
    let config = strip().with_obstacle(Obstacle::rectangle(Vec2::new(2.0, 0.5), 0.8, 0.8));
    let batch = run_batch(&config, KernelParams::new(0.05), &BatchSettings::new(50_000, GridSpec::new(200, 50), 12)).unwrap();
    let deposited: f64 = batch.sojourn.time.iter().sum();
    assert!((deposited / batch.total_time - 1.0).abs() < 1e-6);
    let by_class: f64 = batch.classes.iter().flatten().map(|c| c.time_sum).sum();
    assert!((by_class / batch.total_time - 1.0).abs() < 1e-9);
    assert_eq!(batch.completed() + batch.aborted, batch.n_particles);
    assert_eq!(batch.exits(Side::Left) + batch.exits(Side::Right), batch.completed());
}

#[test]
fn obstacle_field_tracks_the_reference_solution() {
    let config = strip().with_obstacle(Obstacle::rectangle(Vec2::new(2.0, 0.5), 0.8, 0.8));
    let grid = GridSpec::new(40, 10);
    let batch = run_batch(&config, KernelParams::new(0.02), &BatchSettings::new(200_000, grid, 4)).unwrap();
    let density = normalize(&batch.sojourn, &config, Normalization::ColumnMean).unwrap();
    let reference = solve(&config, grid, &SolverSettings::default()).unwrap();
    let summary = summarize_error(&relative_error(&density, &reference).unwrap());
    assert!(summary.mean < 0.08, "{summary:?}");
    // the field stays between the reservoir densities up to noise
    assert!(density.max() < 1.1 && density.min() > 0.4);
}
