#![no_main]

use keydist_cli::config::Config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = Config::parse(text) else { return };
    if let Ok(j) = cfg.source.joint() {
        let _ = cfg.channel.channels(&j);
    }
    let _ = cfg.experiment();
});
