//! Polite HTTP client: per-host concurrency cap, minimum request spacing,
//! exponential backoff with `Retry-After` support, and retry telemetry.

use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use log::debug;
use serde::{Deserialize, Serialize};

use super::clock::Clock;
use super::transport::{HttpRequest, HttpResponse, Transport, TransportError};
use super::IngestError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchPolicy {
    /// Concurrent requests allowed per host.
    pub max_in_flight: usize,
    pub min_request_interval: Duration,
    pub max_retries: u32,
    pub backoff_initial: Duration,
    pub backoff_multiplier: f64,
    pub timeout: Duration,
    /// Must identify the operator (an e-mail address or URL).
    pub user_agent: String,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            max_in_flight: 2,
            min_request_interval: Duration::from_millis(200),
            max_retries: 4,
            backoff_initial: Duration::from_millis(500),
            backoff_multiplier: 2.0,
            timeout: Duration::from_secs(30),
            user_agent: concat!(
                "knowledge-integrity-observatory/",
                env!("CARGO_PKG_VERSION"),
                " (operator@example.org)"
            )
            .to_string(),
        }
    }
}

impl FetchPolicy {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::InvalidPolicy(m.to_string()));
        if self.max_in_flight < 1 {
            return bad("max_in_flight must be at least 1");
        }
        if !(self.backoff_multiplier > 1.0) || !self.backoff_multiplier.is_finite() {
            return bad("backoff multiplier must be greater than 1");
        }
        if !(self.user_agent.contains('@') || self.user_agent.contains("http")) {
            return bad("user agent must carry contact information (e-mail or URL)");
        }
        Ok(())
    }

    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        self.backoff_initial.mul_f64(self.backoff_multiplier.powi(retry as i32))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Telemetry {
    pub requests: u64,
    pub retries: u64,
    pub rate_limited: u64,
    pub max_in_flight_observed: usize,
}

#[derive(Debug, Default)]
struct HostState {
    in_flight: usize,
    next_slot: Duration,
}

/// Admission control per host.
struct HostGate {
    hosts: Mutex<HashMap<String, HostState>>,
    freed: Condvar,
}

impl HostGate {
    fn new() -> Self {
        HostGate { hosts: Mutex::new(HashMap::new()), freed: Condvar::new() }
    }

    /// Blocks until a slot is free, then waits out the spacing interval.
    /// Returns the number of requests in flight for the host after admission.
    fn acquire(&self, host: &str, policy: &FetchPolicy, clock: &dyn Clock) -> usize {
        let mut hosts = self.hosts.lock().unwrap();
        loop {
            let state = hosts.entry(host.to_string()).or_default();
            if state.in_flight < policy.max_in_flight {
                break;
            }
            hosts = self.freed.wait(hosts).unwrap();
        }
        let state = hosts.get_mut(host).expect("inserted above");
        let now = clock.now();
        let start = state.next_slot.max(now);
        state.next_slot = start + policy.min_request_interval;
        state.in_flight += 1;
        let in_flight = state.in_flight;
        drop(hosts);
        clock.sleep(start - now);
        in_flight
    }

    fn release(&self, host: &str) {
        let mut hosts = self.hosts.lock().unwrap();
        if let Some(s) = hosts.get_mut(host) {
            s.in_flight -= 1;
        }
        self.freed.notify_all();
    }
}

/// Shared by every fetcher of one ingestion run.
pub struct ApiClient {
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    policy: FetchPolicy,
    gate: HostGate,
    telemetry: Mutex<Telemetry>,
}

fn retry_after(resp: &HttpResponse) -> Option<Duration> {
    resp.header("retry-after")?.trim().parse::<u64>().ok().map(Duration::from_secs)
}

impl ApiClient {
    pub fn new(
        policy: FetchPolicy,
        transport: Arc<dyn Transport>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, IngestError> {
        policy.validate()?;
        Ok(ApiClient {
            transport,
            clock,
            policy,
            gate: HostGate::new(),
            telemetry: Mutex::new(Telemetry::default()),
        })
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    pub fn telemetry(&self) -> Telemetry {
        self.telemetry.lock().unwrap().clone()
    }

    /// GET with retries. Returns any non-retryable response (including 4xx)
    /// for the caller to interpret; retryable failures that exhaust the
    /// budget surface as errors.
    pub fn get(&self, url: &str) -> Result<HttpResponse, IngestError> {
        let request = HttpRequest::get(url);
        let host = request.host().to_string();
        let mut retry = 0u32;
        loop {
            let in_flight = self.gate.acquire(&host, &self.policy, self.clock.as_ref());
            {
                let mut t = self.telemetry.lock().unwrap();
                t.requests += 1;
                t.max_in_flight_observed = t.max_in_flight_observed.max(in_flight);
            }
            let outcome = self.transport.execute(&request);
            self.gate.release(&host);

            let (delay, failure) = match outcome {
                Ok(resp) if resp.status == 429 => {
                    self.telemetry.lock().unwrap().rate_limited += 1;
                    let delay = retry_after(&resp).unwrap_or_else(|| self.policy.backoff(retry));
                    (delay, IngestError::Http { url: url.to_string(), status: 429 })
                }
                Ok(resp) if resp.status >= 500 => {
                    (self.policy.backoff(retry), IngestError::Http { url: url.to_string(), status: resp.status })
                }
                Ok(resp) => return Ok(resp),
                Err(e) => (self.policy.backoff(retry), network_error(url, e)),
            };
            if retry >= self.policy.max_retries {
                return Err(failure);
            }
            debug!("retrying {url} in {delay:?} after {failure}");
            self.telemetry.lock().unwrap().retries += 1;
            retry += 1;
            self.clock.sleep(delay);
        }
    }
}

fn network_error(url: &str, e: TransportError) -> IngestError {
    IngestError::Network { url: url.to_string(), message: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::clock::ManualClock;
    use crate::ingestion::transport::ReplayTransport;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn epoch() -> chrono::DateTime<chrono::Utc> {
        "2021-05-01T00:00:00Z".parse().unwrap()
    }

    fn policy() -> FetchPolicy {
        FetchPolicy {
            max_in_flight: 1,
            min_request_interval: Duration::from_millis(100),
            max_retries: 3,
            backoff_initial: Duration::from_secs(1),
            backoff_multiplier: 2.0,
            timeout: Duration::from_secs(5),
            user_agent: "test (ops@example.org)".into(),
        }
    }

    /// Records the virtual time at which each request reaches the wire.
    struct Stamping {
        clock: Arc<ManualClock>,
        stamps: Mutex<Vec<Duration>>,
        inner: ReplayTransport,
    }

    impl Transport for Stamping {
        fn execute(&self, r: &HttpRequest) -> Result<HttpResponse, TransportError> {
            self.stamps.lock().unwrap().push(self.clock.now());
            self.inner.execute(r)
        }
    }

    #[test]
    fn policy_validation() {
        assert!(policy().validate().is_ok());
        assert!(FetchPolicy { max_in_flight: 0, ..policy() }.validate().is_err());
        assert!(FetchPolicy { backoff_multiplier: 1.0, ..policy() }.validate().is_err());
        assert!(FetchPolicy { user_agent: "anon".into(), ..policy() }.validate().is_err());
        assert_eq!(policy().backoff(0), Duration::from_secs(1));
        assert_eq!(policy().backoff(2), Duration::from_secs(4));
    }

    #[test]
    fn spacing_between_requests_to_one_host() {
        let clock = Arc::new(ManualClock::new(epoch()));
        let inner = ReplayTransport::new();
        inner.push("https://h/a", HttpResponse::new(200, "x"));
        let t = Arc::new(Stamping { clock: clock.clone(), stamps: Mutex::new(vec![]), inner });
        let client = ApiClient::new(policy(), t.clone(), clock.clone()).unwrap();
        for _ in 0..5 {
            client.get("https://h/a").unwrap();
        }
        let stamps = t.stamps.lock().unwrap().clone();
        for w in stamps.windows(2) {
            assert!(w[1] - w[0] >= Duration::from_millis(100), "{stamps:?}");
        }
        // other hosts are not delayed by this one
        let before = clock.now();
        t.inner.push("https://other/a", HttpResponse::new(200, "x"));
        client.get("https://other/a").unwrap();
        assert_eq!(clock.now(), before);
    }

    #[test]
    fn retries_with_exponential_backoff() {
        let clock = Arc::new(ManualClock::new(epoch()));
        let t = ReplayTransport::new();
        t.push("https://h/a", HttpResponse::new(503, ""));
        t.push("https://h/a", HttpResponse::new(503, ""));
        t.push("https://h/a", HttpResponse::new(200, "ok"));
        let p = FetchPolicy { min_request_interval: Duration::ZERO, ..policy() };
        let client = ApiClient::new(p, Arc::new(t), clock.clone()).unwrap();
        let resp = client.get("https://h/a").unwrap();
        assert_eq!(resp.body, b"ok");
        assert_eq!(client.telemetry().retries, 2);
        assert_eq!(clock.sleeps(), vec![Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn retry_budget_is_capped() {
        let clock = Arc::new(ManualClock::new(epoch()));
        let t = ReplayTransport::new();
        t.push("https://h/a", HttpResponse::new(502, ""));
        let p = FetchPolicy { min_request_interval: Duration::ZERO, ..policy() };
        let client = ApiClient::new(p, Arc::new(t), clock.clone()).unwrap();
        let err = client.get("https://h/a").unwrap_err();
        assert!(matches!(err, IngestError::Http { status: 502, .. }));
        assert_eq!(client.telemetry().requests, 4);
        assert_eq!(clock.sleeps().len(), 3);
    }

    #[test]
    fn honours_retry_after_on_429() {
        let clock = Arc::new(ManualClock::new(epoch()));
        let t = ReplayTransport::new();
        t.push("https://h/a", HttpResponse::new(429, "").with_header("Retry-After", "7"));
        t.push("https://h/a", HttpResponse::new(429, ""));
        t.push("https://h/a", HttpResponse::new(200, "ok"));
        let p = FetchPolicy { min_request_interval: Duration::ZERO, ..policy() };
        let client = ApiClient::new(p, Arc::new(t), clock.clone()).unwrap();
        client.get("https://h/a").unwrap();
        // header first, then the backoff schedule for the second retry
        assert_eq!(clock.sleeps(), vec![Duration::from_secs(7), Duration::from_secs(2)]);
        assert_eq!(client.telemetry().rate_limited, 2);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let clock = Arc::new(ManualClock::new(epoch()));
        let client = ApiClient::new(policy(), Arc::new(ReplayTransport::new()), clock.clone()).unwrap();
        assert_eq!(client.get("https://h/missing").unwrap().status, 404);
        assert_eq!(client.telemetry().retries, 0);
    }

    struct Flaky(AtomicUsize);
    impl Transport for Flaky {
        fn execute(&self, _: &HttpRequest) -> Result<HttpResponse, TransportError> {
            if self.0.fetch_add(1, Ordering::SeqCst) == 0 {
                Err(TransportError::Timeout)
            } else {
                Ok(HttpResponse::new(200, "ok"))
            }
        }
    }

    #[test]
    fn network_errors_are_retried() {
        let clock = Arc::new(ManualClock::new(epoch()));
        let client = ApiClient::new(policy(), Arc::new(Flaky(AtomicUsize::new(0))), clock).unwrap();
        assert_eq!(client.get("https://h/a").unwrap().status, 200);
        assert_eq!(client.telemetry().retries, 1);
    }

    /// Counts concurrent executions; the upper bound is what is asserted, so
    /// scheduling jitter cannot make this flaky.
    struct Concurrency {
        current: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Transport for Concurrency {
        fn execute(&self, _: &HttpRequest) -> Result<HttpResponse, TransportError> {
            let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            for _ in 0..50 {
                std::thread::yield_now();
            }
            self.current.fetch_sub(1, Ordering::SeqCst);
            Ok(HttpResponse::new(200, "ok"))
        }
    }

    #[test]
    fn in_flight_cap_holds_under_contention() {
        let clock = Arc::new(ManualClock::new(epoch()));
        let t = Arc::new(Concurrency { current: AtomicUsize::new(0), peak: AtomicUsize::new(0) });
        let p = FetchPolicy { max_in_flight: 2, min_request_interval: Duration::ZERO, ..policy() };
        let client = ApiClient::new(p, t.clone(), clock).unwrap();
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    for _ in 0..20 {
                        client.get("https://h/a").unwrap();
                    }
                });
            }
        });
        assert!(t.peak.load(Ordering::SeqCst) <= 2);
        assert!(client.telemetry().max_in_flight_observed <= 2);
        assert_eq!(client.telemetry().requests, 160);
    }
}
