//! Two-dimensional complex FFT on row-major arrays, with plans cached
//! process-wide.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanKey = (usize, bool);
type PlanCache = Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>;

fn registry() -> &'static PlanCache {
    static REGISTRY: OnceLock<PlanCache> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut map = registry().lock().expect("fft plan registry poisoned");
    map.entry((len, inverse))
        .or_insert_with(|| {
            let direction = if inverse {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            };
            FftPlanner::new().plan_fft(len, direction)
        })
        .clone()
}

fn transform_rows(data: &mut Array2<Complex64>, inverse: bool) {
    let cols = data.ncols();
    let fft = plan(cols, inverse);
    if data.is_standard_layout() {
        fft.process(data.as_slice_mut().expect("standard layout"));
    } else {
        let mut owned = data.as_standard_layout().into_owned();
        fft.process(owned.as_slice_mut().expect("standard layout"));
        data.assign(&owned);
    }
}

/// Unnormalized 2D DFT in place. Forward uses `exp(-i ...)`.
pub fn fft2(data: &mut Array2<Complex64>, inverse: bool) {
    transform_rows(data, inverse);
    let mut t = data.t().as_standard_layout().into_owned();
    transform_rows(&mut t, inverse);
    data.assign(&t.t());
}
