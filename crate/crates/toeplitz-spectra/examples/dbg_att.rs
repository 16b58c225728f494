use toeplitz_spectra::linalg::{c, C64, ZERO};
use toeplitz_spectra::model::BlockSymbol;
use toeplitz_spectra::spectra::{finite_spectrum_refined, gamma_find, lambda_scan, LAMBDA_RAW_TOL};
use toeplitz_spectra::transfer::transfer_eigendata;
use toeplitz_spectra::Rect;
use ndarray::array;

fn main() {
    let window = Rect::new(-4.0, 4.0, -3.0, 3.0);
    let res = 0.01;
    let five = BlockSymbol::from_scalar_band(&[c(1.0,0.0), c(0.0,-0.5), c(-0.3,-0.3), c(1.0,0.0), c(0.0,0.5)]).unwrap();
    let put = |p: C64, m: C64| array![[ZERO, p], [m, ZERO]];
    let ssh = BlockSymbol::new(2, put(c(1.0,0.0), c(1.5,-0.1)), put(c(-0.1,-0.5), c(0.7,0.0)), put(c(0.5,1.0), c(1.0,0.0))).unwrap().with_grading(1).unwrap();
    for (name, h) in [("five", five), ("ssh", ssh)] {
        let cloud = lambda_scan(&h, &window, res, LAMBDA_RAW_TOL);
        let gamma: Vec<C64> = gamma_find(&h, &window, &cloud).points.iter().map(|p| p.energy).collect();
        println!("{name}: {} cloud pts, gamma {gamma:?}", cloud.points.len());
        let attractor: Vec<C64> = cloud.points.iter().map(|p| p.energy).chain(gamma.iter().copied()).collect();
        let mut ln_sum = 0.0; let mut count = 0;
        for p in cloud.points.iter().step_by(7) {
            if let Ok(d) = transfer_eigendata(&h, p.energy) { ln_sum += d.separating_radius().ln(); count += 1; }
        }
        let balance = (ln_sum / count as f64).exp();
        for n in [50usize, 100, 200] {
            let refined = finite_spectrum_refined(&h, n, balance).unwrap();
            let (argmax, d) = refined.eigenvalues.iter()
                .map(|e| (e, attractor.iter().map(|b| (e-b).norm()).fold(f64::INFINITY, f64::min)))
                .max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            let gap = transfer_eigendata(&h, *argmax).unwrap().middle_gap;
            println!("  N = {n}: d = {d:.4} at {argmax} (middle gap there {gap:.3e}), unresolved {}", refined.unresolved);
        }
    }
}
