//! Acceptance criteria for `smallarea-core` live in `tests/acceptance.rs`;
//! run them with `cargo test -p smallarea-validation`.
