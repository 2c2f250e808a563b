use std::time::{Duration, Instant};

/// Token bucket. `take` returns how long the caller must wait before the
/// request may be sent.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    pub fn new(rate_per_s: f64, capacity: f64) -> Self {
        Self::starting_at(rate_per_s, capacity, Instant::now())
    }

    pub fn starting_at(rate_per_s: f64, capacity: f64, now: Instant) -> Self {
        TokenBucket {
            rate: rate_per_s,
            capacity,
            tokens: capacity,
            last: now,
        }
    }

    pub fn take(&mut self, now: Instant) -> Duration {
        let elapsed = now.saturating_duration_since(self.last).as_secs_f64();
        self.tokens = (self.tokens + elapsed * self.rate).min(self.capacity);
        self.last = now;
        self.tokens -= 1.0;
        if self.tokens >= 0.0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(-self.tokens / self.rate)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_to_rate() {
        let t0 = Instant::now();
        let mut b = TokenBucket::starting_at(5.0, 5.0, t0);
        for _ in 0..5 {
            assert_eq!(b.take(t0), Duration::ZERO);
        }
        let wait = b.take(t0);
        assert!((wait.as_secs_f64() - 0.2).abs() < 1e-9);
        // A second later the bucket has refilled.
        let mut b = TokenBucket::starting_at(5.0, 5.0, t0);
        for _ in 0..5 {
            b.take(t0);
        }
        assert_eq!(b.take(t0 + Duration::from_secs(1)), Duration::ZERO);
    }
}
