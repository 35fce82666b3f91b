//! Acceptance suite for `hedgecost`. Everything lives in `tests/acceptance.rs`;
//! run it with `cargo test -p hedgecost-verify --test acceptance`.
