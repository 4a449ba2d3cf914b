use std::thread;
use std::time::Duration;

/// Bounded retries with exponential backoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    /// Same attempt budget without sleeping; for scripted runs and tests.
    pub fn immediate() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::ZERO }
    }

    /// Calls `op` until it succeeds, returns a non-retryable error, or the
    /// attempt budget runs out. Returns the last result and the number of
    /// attempts made.
    pub fn run<T, E>(
        &self,
        mut op: impl FnMut(u32) -> Result<T, E>,
        retryable: impl Fn(&E) -> bool,
    ) -> (Result<T, E>, u32) {
        let attempts = self.attempts.max(1);
        let mut attempt = 1;
        loop {
            let result = op(attempt);
            match &result {
                Err(e) if retryable(e) && attempt < attempts => {
                    let delay = self.base_delay * 2u32.pow(attempt - 1);
                    tracing::debug!(attempt, ?delay, "retrying after transport failure");
                    if !delay.is_zero() {
                        thread::sleep(delay);
                    }
                    attempt += 1;
                }
                _ => return (result, attempt),
            }
        }
    }
}
