#![no_main]

use libfuzzer_sys::fuzz_target;
use wbc_core::geometry::Vec2;
use wbc_core::world::WorldModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(w) = WorldModel::from_json(text) {
        let back = WorldModel::from_json(&w.to_json()).expect("accepted layout re-parses");
        assert_eq!(back, w);
        let r = w.raycast(w.spawn_region.center, Vec2::new(1.0, 0.0), 10.0);
        assert!(r >= 0.0 && r <= 10.0);
    }
});
