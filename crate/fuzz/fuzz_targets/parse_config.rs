#![no_main]

use libfuzzer_sys::fuzz_target;
use wso_cli::config::{parse_config, ModelSpec, Session};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = parse_config(text) else {
        return;
    };
    // black-box sessions sample the dynamics, which is too slow per input
    if !matches!(cfg.model, Some(ModelSpec::Blackbox(_))) {
        let _ = Session::new(text, None);
    }
});
