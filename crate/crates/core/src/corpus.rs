//! Bundled example programs.

pub const LEAST_MODEL: &str = include_str!("../corpus/least_model.pl");
pub const UNSOUND_MAX: &str = include_str!("../corpus/unsound_max.pl");
pub const SHORTEST_PATH: &str = include_str!("../corpus/shortest_path.pl");
pub const CYCLIC_PATH: &str = include_str!("../corpus/cyclic_path.pl");
pub const LUB: &str = include_str!("../corpus/lub.pl");
pub const STRAT_PATH: &str = include_str!("../corpus/strat_path.pl");
pub const EVEN_ODD: &str = include_str!("../corpus/even_odd.pl");
pub const EVEN_ODD_ALSO: &str = include_str!("../corpus/even_odd_also.pl");
pub const LONGEST_PATH: &str = include_str!("../corpus/longest_path.pl");

/// `(file stem, source)` for every bundled program.
pub const ALL: &[(&str, &str)] = &[
    ("least_model", LEAST_MODEL),
    ("unsound_max", UNSOUND_MAX),
    ("shortest_path", SHORTEST_PATH),
    ("cyclic_path", CYCLIC_PATH),
    ("lub", LUB),
    ("strat_path", STRAT_PATH),
    ("even_odd", EVEN_ODD),
    ("even_odd_also", EVEN_ODD_ALSO),
    ("longest_path", LONGEST_PATH),
];
