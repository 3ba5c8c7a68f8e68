//! Client-side token bucket shared by every upstream client.

use std::sync::Mutex;
use std::time::{Duration, Instant};

#[derive(Debug)]
pub struct RateLimiter {
    rate: f64,
    burst: f64,
    state: Mutex<Bucket>,
}

#[derive(Debug)]
struct Bucket {
    tokens: f64,
    last: Instant,
}

impl RateLimiter {
    /// `rate` tokens per second, at most `burst` saved up. Starts full.
    ///
    /// # Panics
    ///
    /// When `rate` is not positive or `burst` is below one.
    pub fn new(rate: f64, burst: f64) -> Self {
        assert!(rate > 0.0 && rate.is_finite(), "rate must be positive, got {rate}");
        assert!(burst >= 1.0, "burst must be at least 1, got {burst}");
        Self {
            rate,
            burst,
            state: Mutex::new(Bucket {
                tokens: burst,
                last: Instant::now(),
            }),
        }
    }

    /// Takes a token if one is available at `now`; otherwise returns how
    /// long until one will be.
    fn try_take(&self, now: Instant) -> Result<(), Duration> {
        let mut b = self.state.lock().expect("rate limiter lock");
        let elapsed = now.saturating_duration_since(b.last).as_secs_f64();
        b.tokens = (b.tokens + elapsed * self.rate).min(self.burst);
        b.last = b.last.max(now);
        if b.tokens >= 1.0 {
            b.tokens -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - b.tokens) / self.rate))
        }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        loop {
            match self.try_take(Instant::now()) {
                Ok(()) => return,
                Err(wait) => std::thread::sleep(wait),
            }
        }
    }
}
