#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let base = radiomap::grid::GridConfig::default();
        if let Ok(grid) = radiomap::grid::parse_grid_dump(text, base.clone()) {
            let again = radiomap::grid::parse_grid_dump(&radiomap::grid::write_grid_dump(&grid), base).unwrap();
            assert_eq!(again.cells(), grid.cells());
        }
    }
});
