#![no_main]

use keydist_cli::sweep::Grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = text.parse::<Grid>() {
        let values = grid.values();
        assert_eq!(values.len(), grid.points);
        let again: Grid = grid.to_string().parse().unwrap();
        assert_eq!(again.values().len(), values.len());
    }
});
