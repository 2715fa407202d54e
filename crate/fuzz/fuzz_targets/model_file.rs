#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(model) = radiomap::learned::parse_model_file(text) {
            let written = radiomap::learned::write_model_file(&model);
            let again = radiomap::learned::parse_model_file(&written).unwrap();
            assert_eq!(radiomap::learned::write_model_file(&again), written);
        }
    }
});
