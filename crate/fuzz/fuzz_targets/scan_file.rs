#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(frames) = radiomap::grid::parse_scan_file(text) {
            let again = radiomap::grid::parse_scan_file(&radiomap::grid::write_scan_file(&frames)).unwrap();
            assert_eq!(again.len(), frames.len());
        }
    }
});
