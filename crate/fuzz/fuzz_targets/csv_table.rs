#![no_main]

use keydist_cli::output::Table;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = Table::read_csv(data) {
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let again = Table::read_csv(buf.as_slice()).unwrap();
        assert_eq!(again.columns, table.columns);
    }
});
