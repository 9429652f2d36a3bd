//! Holds the `acceptance` test target; run it with
//! `cargo test -p archivesafe-acceptance --test acceptance`.
