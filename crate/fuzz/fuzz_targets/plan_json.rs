#![no_main]

use libfuzzer_sys::fuzz_target;
use wbc_baseline::PlanFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(plan) = PlanFile::from_json(text) {
        let d = plan.trajectory.duration();
        for k in 0..=8 {
            let p = plan.trajectory.sample(d * k as f64 / 8.0);
            assert!(p.q.q.iter().all(|v| v.is_finite()));
        }
    }
});
