#![no_main]

use libfuzzer_sys::fuzz_target;
use wso_core::graph::MSGraph;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = MSGraph::from_json(text) {
        let back = MSGraph::from_json(&g.to_json()).expect("serialized graph decodes");
        assert_eq!(back.edges, g.edges);
    }
});
