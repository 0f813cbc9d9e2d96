//! The fixture corpus, embedded so tests and tools work from any directory.

use std::path::PathBuf;

/// On-disk location of the corpus (patch and script paths are relative to it).
pub fn fixture_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))
}

pub const EVENTS: &str = include_str!("../fixtures/events.evt");

pub const FLDS: [(&str, &str); 12] = [
    ("self-management-1.fld", include_str!("../fixtures/fld/self-management-1.fld")),
    ("self-management-2.fld", include_str!("../fixtures/fld/self-management-2.fld")),
    ("self-optimization-ap.fld", include_str!("../fixtures/fld/self-optimization-ap.fld")),
    ("self-optimization.fld", include_str!("../fixtures/fld/self-optimization.fld")),
    ("self-repair-a.fld", include_str!("../fixtures/fld/self-repair-a.fld")),
    ("self-repair-a2.fld", include_str!("../fixtures/fld/self-repair-a2.fld")),
    ("self-repair-ap.fld", include_str!("../fixtures/fld/self-repair-ap.fld")),
    ("self-repair-flat.fld", include_str!("../fixtures/fld/self-repair-flat.fld")),
    ("self-repair-strategies-2.fld", include_str!("../fixtures/fld/self-repair-strategies-2.fld")),
    ("self-repair-strategies.fld", include_str!("../fixtures/fld/self-repair-strategies.fld")),
    ("self-repair.fld", include_str!("../fixtures/fld/self-repair.fld")),
    ("update-software.fld", include_str!("../fixtures/fld/update-software.fld")),
];

pub const LDS: [(&str, &str); 5] = [
    ("self-management-1.ld", include_str!("../fixtures/ld/self-management-1.ld")),
    ("self-management-2.ld", include_str!("../fixtures/ld/self-management-2.ld")),
    ("self-repair-flat.ld", include_str!("../fixtures/ld/self-repair-flat.ld")),
    ("self-repair-strategies.ld", include_str!("../fixtures/ld/self-repair-strategies.ld")),
    ("self-repair.ld", include_str!("../fixtures/ld/self-repair.ld")),
];

pub const PATCHES: [(&str, &str); 4] = [
    ("add-strategies-2.patch", include_str!("../fixtures/patch/add-strategies-2.patch")),
    ("add-strategies.patch", include_str!("../fixtures/patch/add-strategies.patch")),
    ("rebind-analysis.patch", include_str!("../fixtures/patch/rebind-analysis.patch")),
    ("update-software.patch", include_str!("../fixtures/patch/update-software.patch")),
];

pub const SCRIPTS: [(&str, &str); 4] = [
    ("flood.script", include_str!("../fixtures/script/flood.script")),
    ("novel-failure.script", include_str!("../fixtures/script/novel-failure.script")),
    ("one-crash.script", include_str!("../fixtures/script/one-crash.script")),
    ("update-software.script", include_str!("../fixtures/script/update-software.script")),
];

fn find(table: &[(&'static str, &'static str)], file: &str) -> &'static str {
    table
        .iter()
        .find(|(f, _)| *f == file)
        .map(|(_, text)| *text)
        .unwrap_or_else(|| panic!("no fixture `{file}`"))
}

pub fn fld(file: &str) -> &'static str {
    find(&FLDS, file)
}

pub fn ld(file: &str) -> &'static str {
    find(&LDS, file)
}

pub fn patch(file: &str) -> &'static str {
    find(&PATCHES, file)
}

pub fn script(file: &str) -> &'static str {
    find(&SCRIPTS, file)
}
