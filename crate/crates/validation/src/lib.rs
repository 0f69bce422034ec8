//! Holds the `acceptance` test target, which prints one PASS/FAIL line per
//! acceptance criterion:
//!
//! ```text
//! cargo test -p wso-validation --test acceptance
//! ```
