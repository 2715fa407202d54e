#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(reg) = radiomap::pipeline::parse_radios(text) {
            let again = radiomap::pipeline::parse_radios(&radiomap::pipeline::write_radios(&reg)).unwrap();
            assert_eq!(again.radios.len(), reg.radios.len());
        }
    }
});
