//! Process-wide network egress switch.
//!
//! Every live adapter calls [`check`] before opening a connection. Test
//! mode denies egress; denied attempts are counted so suites can assert
//! that nothing tried to reach the network.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use thiserror::Error;

static DENIED: AtomicBool = AtomicBool::new(false);
static ATTEMPTS: AtomicUsize = AtomicUsize::new(0);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("network egress to {host} blocked")]
pub struct EgressDenied {
    pub host: String,
}

pub fn deny_all() {
    DENIED.store(true, Ordering::SeqCst);
}

pub fn allow_all() {
    DENIED.store(false, Ordering::SeqCst);
}

pub fn is_denied() -> bool {
    DENIED.load(Ordering::SeqCst)
}

/// Number of connection attempts made while egress was denied.
pub fn blocked_attempts() -> usize {
    ATTEMPTS.load(Ordering::SeqCst)
}

pub fn check(host: &str) -> Result<(), EgressDenied> {
    if is_denied() {
        ATTEMPTS.fetch_add(1, Ordering::SeqCst);
        return Err(EgressDenied {
            host: host.to_string(),
        });
    }
    Ok(())
}
