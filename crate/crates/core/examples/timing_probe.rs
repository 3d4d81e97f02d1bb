// temporary timing probe
use std::sync::Arc;
use std::time::Instant;
use twirl_core::lift::MonotoneLift;
use twirl_core::model::ModelMap;

fn main() {
    let t0 = Instant::now();
    let model = ModelMap::standard().unwrap();
    eprintln!("model build: {:?}", t0.elapsed());
    let h = model.h().clone();
    let f = model.f().clone();

    for x0 in [0.1f64, 0.3, 0.5, 0.7] {
        let t = Instant::now();
        let mut acc = 0.0;
        for i in 0..100 { acc += h.invert(x0 + i as f64 * 1e-7); }
        let ti = t.elapsed();
        let t = Instant::now();
        for i in 0..100 { acc += f.eval(x0 + i as f64 * 1e-7); }
        let tf = t.elapsed();
        let t = Instant::now();
        for i in 0..100 { acc += f.invert(x0 + i as f64 * 1e-7); }
        let tfi = t.elapsed();
        let t = Instant::now();
        for i in 0..100 { acc += f.deriv(x0 + i as f64 * 1e-7); }
        let td = t.elapsed();
        eprintln!("x={x0:.1}  h.invert {:>8.1?}  f.eval {:>8.1?}  f.invert {:>8.1?}  f.deriv {:>8.1?}  (acc {:.1})",
            ti / 100, tf / 100, tfi / 100, td / 100, acc);
    }

    // accuracy spot-check: f ∘ f⁻¹ and h ∘ h⁻¹ residuals on a scan
    let mut worst = 0.0f64;
    for i in 0..2000 {
        let y = i as f64 / 2000.0;
        worst = worst.max((h.eval(h.invert(y)) - y).abs());
    }
    eprintln!("sup |h(h^-1 y) - y| on 2000 pts: {worst:.3e}");

    let t = Instant::now();
    let g = Arc::new(MonotoneLift::conjugate(h.clone(), Arc::new(MonotoneLift::rotation(0.5))));
    eprintln!("  (conjugate smoke {:?} bps {})", t.elapsed(), g.breakpoints().len());
}
