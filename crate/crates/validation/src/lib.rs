//! Holds the `acceptance` test target, which runs the numbered acceptance
//! criteria against `fanning-core` and prints one pass/fail line per criterion.
//!
//! Run it with `cargo test -p fanning-validation --test acceptance`.
