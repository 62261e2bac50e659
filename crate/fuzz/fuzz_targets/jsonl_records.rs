#![no_main]

use keydist_cli::output::{read_records, write_records};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_records(data) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        assert_eq!(read_records(buf.as_slice()).unwrap().len(), records.len());
    }
});
