#![no_main]

use libfuzzer_sys::fuzz_target;
use paradiag_harness::ResultTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(table) = ResultTable::from_csv(text) else { return };
    // Compared as text: NaN cells are not equal to themselves.
    let written = table.to_csv();
    let reread = ResultTable::from_csv(&written).expect("written table parses");
    assert_eq!(reread.to_csv(), written);
});
