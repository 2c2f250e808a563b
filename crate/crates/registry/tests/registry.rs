use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use evmscope_core::analyzers::AddressRegistry;
use evmscope_registry::{
    parse_address, ExplorerClient, ExplorerConfig, HttpResponse, HttpTransport, Mode, Registry, Source,
};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/registry.csv")
}

struct Counting {
    calls: Arc<AtomicUsize>,
    exists: bool,
}

impl HttpTransport for Counting {
    fn get(&mut self, _url: &str) -> Result<HttpResponse, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let result = if self.exists { "[{\"hash\":\"0x1\"}]" } else { "[]" };
        Ok(HttpResponse {
            status: 200,
            body: format!("{{\"status\":\"1\",\"message\":\"OK\",\"result\":{result}}}"),
        })
    }
}

fn counting_client(exists: bool) -> (ExplorerClient, Arc<AtomicUsize>) {
    let calls = Arc::new(AtomicUsize::new(0));
    let t = Counting {
        calls: calls.clone(),
        exists,
    };
    let cfg = ExplorerConfig {
        requests_per_s: 1000.0,
        ..ExplorerConfig::default()
    };
    (ExplorerClient::new(cfg, Box::new(t)).with_sleep(|_| {}), calls)
}

#[test]
fn fixture_answers_offline_lookups() {
    let r = Registry::offline(Some(&fixture()), None).unwrap();
    assert_eq!(r.mode(), Mode::Offline);
    let sale = parse_address("0x0c4740f71323129669424d1ae06c42aee99da30e").unwrap();
    let dev = parse_address("0x0639c169d9265ca4b4dece693764cda8ea5f3882").unwrap();
    assert_eq!(r.exists(&sale), Ok(false));
    assert_eq!(r.exists(&dev), Ok(true));
    let rec = r.lookup(&sale).unwrap();
    assert_eq!(rec.source, Source::Fixture);
    assert_eq!(rec.checked_at, 1_700_000_000);
    assert!(r.exists(&[0x42; 20]).is_err());
}

#[test]
fn disabled_registry_is_unavailable() {
    assert!(Registry::disabled().exists(&[0; 20]).is_err());
}

#[test]
fn cache_hit_makes_no_request() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.csv");
    let addr = [0x33; 20];
    {
        let (client, calls) = counting_client(true);
        let r = Registry::online(client, Some(&cache)).unwrap();
        assert_eq!(r.exists(&addr), Ok(true));
        assert_eq!(r.exists(&addr), Ok(true));
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert_eq!(r.lookup(&addr).unwrap().source, Source::Cache);
    }
    let text = std::fs::read_to_string(&cache).unwrap();
    assert!(text.starts_with(&format!("0x{},1,", "33".repeat(20))), "{text}");
    let (client, calls) = counting_client(false);
    let r = Registry::online(client, Some(&cache)).unwrap();
    assert_eq!(r.exists(&addr), Ok(true));
    assert_eq!(calls.load(Ordering::SeqCst), 0);
}

#[test]
fn offline_mode_never_touches_the_network() {
    let (client, calls) = counting_client(true);
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.csv");
    std::fs::write(&cache, format!("0x{},0,5\n", "44".repeat(20))).unwrap();
    let r = Registry::offline(Some(&fixture()), Some(&cache))
        .unwrap()
        .with_client(client);
    assert_eq!(r.exists(&[0x44; 20]), Ok(false));
    assert_eq!(r.lookup(&[0x44; 20]).unwrap().source, Source::Cache);
    for b in 0..=255u8 {
        let _ = r.exists(&[b; 20]);
    }
    assert!(r.exists(&[0x42; 20]).is_err());
    assert_eq!(calls.load(Ordering::SeqCst), 0);
}

#[test]
fn missing_cache_file_starts_empty() {
    let dir = tempfile::tempdir().unwrap();
    let r = Registry::offline(None, Some(&dir.path().join("absent.csv"))).unwrap();
    assert!(r.exists(&[1; 20]).is_err());
}

#[test]
fn malformed_fixture_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "0x1,maybe,0\n").unwrap();
    let e = Registry::offline(Some(&p), None).err().unwrap();
    assert!(e.to_string().contains(":1:"), "{e}");
}
