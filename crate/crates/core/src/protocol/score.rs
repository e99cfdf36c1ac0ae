use crate::scalar::Real;

use super::{PartyConfig, SyncOutcome, SyncResult};

/// Harness-side scoring against the hidden clock offsets.
///
/// Sets `sync_error` to the inferred minus the true offset of Bob's clock
/// relative to Alice's, reduced modulo the estimate's ambiguity. Runs that
/// did not sync are left unscored.
pub fn score(result: &mut SyncResult, alice: &PartyConfig, bob: &PartyConfig) {
    result.sync_error = None;
    if result.outcome != SyncOutcome::Synced {
        return;
    }
    let Some(offset) = result.offset else { return };
    let truth = bob.local_clock_offset - alice.local_clock_offset;
    let err = offset.value - truth;
    result.sync_error = Some(match offset.ambiguity {
        Some(period) => err.wrap_symmetric(period),
        None => err,
    });
}
