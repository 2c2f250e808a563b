//! Address-existence lookups: a bundled fixture table, a persistent cache
//! and a rate-limited block-explorer client.

mod bucket;
mod explorer;
mod table;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use evmscope_core::analyzers::{AddressRegistry, RegistryUnavailable};

pub use bucket::TokenBucket;
pub use explorer::{ExplorerClient, ExplorerConfig, HttpResponse, HttpTransport, UreqTransport};
pub use table::{format_record, parse_address, parse_table, AddressError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Online,
    Offline,
    Disabled,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "online" => Ok(Mode::Online),
            "offline" => Ok(Mode::Offline),
            "disabled" => Ok(Mode::Disabled),
            _ => Err(format!("unknown registry mode `{s}` (online, offline, disabled)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Online,
    Fixture,
    Cache,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AddressRecord {
    pub address: [u8; 20],
    pub exists: bool,
    pub source: Source,
    /// Seconds since the Unix epoch.
    pub checked_at: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Registry front end. Lookups go fixture table, then cache, then network,
/// depending on the mode. Network requests are serialised through one
/// client.
pub struct Registry {
    mode: Mode,
    fixture: HashMap<[u8; 20], AddressRecord>,
    cache: RwLock<HashMap<[u8; 20], AddressRecord>>,
    cache_path: Option<PathBuf>,
    client: Option<Mutex<ExplorerClient>>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn load(path: &Path, source: Source) -> Result<HashMap<[u8; 20], AddressRecord>, RegistryError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound && source == Source::Cache => {
            return Ok(HashMap::new())
        }
        Err(e) => {
            return Err(RegistryError::Io {
                path: path.to_path_buf(),
                source: e,
            })
        }
    };
    parse_table(&text, source).map_err(|(line, message)| RegistryError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

impl Registry {
    pub fn disabled() -> Self {
        Registry {
            mode: Mode::Disabled,
            fixture: HashMap::new(),
            cache: RwLock::new(HashMap::new()),
            cache_path: None,
            client: None,
        }
    }

    /// Offline mode: answers come from the fixture table and, failing that,
    /// from the cache. No network access.
    pub fn offline(fixture: Option<&Path>, cache: Option<&Path>) -> Result<Self, RegistryError> {
        let mut r = Registry::disabled();
        r.mode = Mode::Offline;
        if let Some(p) = fixture {
            r.fixture = load(p, Source::Fixture)?;
        }
        r.attach_cache(cache)?;
        Ok(r)
    }

    pub fn online(client: ExplorerClient, cache: Option<&Path>) -> Result<Self, RegistryError> {
        let mut r = Registry::disabled();
        r.mode = Mode::Online;
        r.client = Some(Mutex::new(client));
        r.attach_cache(cache)?;
        Ok(r)
    }

    /// Attaches a client without changing the mode. An offline registry
    /// keeps the client unused.
    pub fn with_client(mut self, client: ExplorerClient) -> Self {
        self.client = Some(Mutex::new(client));
        self
    }

    fn attach_cache(&mut self, cache: Option<&Path>) -> Result<(), RegistryError> {
        if let Some(p) = cache {
            self.cache = RwLock::new(load(p, Source::Cache)?);
            self.cache_path = Some(p.to_path_buf());
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn lookup(&self, address: &[u8; 20]) -> Result<AddressRecord, RegistryUnavailable> {
        match self.mode {
            Mode::Disabled => return Err(RegistryUnavailable("registry is disabled".into())),
            Mode::Offline => {
                if let Some(r) = self.fixture.get(address) {
                    return Ok(*r);
                }
            }
            Mode::Online => {}
        }
        if let Some(r) = self.cache.read().unwrap().get(address) {
            return Ok(AddressRecord {
                source: Source::Cache,
                ..*r
            });
        }
        let client = match (&self.client, self.mode) {
            (Some(c), Mode::Online) => c,
            _ => {
                return Err(RegistryUnavailable(format!(
                    "0x{} is not in the registry fixture",
                    hex::encode(address)
                )))
            }
        };
        let exists = client.lock().unwrap().has_transactions(address)?;
        let record = AddressRecord {
            address: *address,
            exists,
            source: Source::Online,
            checked_at: now(),
        };
        self.remember(record);
        Ok(record)
    }

    fn remember(&self, record: AddressRecord) {
        let mut cache = self.cache.write().unwrap();
        cache.insert(record.address, record);
        if let Some(p) = &self.cache_path {
            let mut rows: Vec<_> = cache.values().collect();
            rows.sort_by_key(|r| r.address);
            let text: String = rows.iter().map(|r| format_record(r) + "\n").collect();
            // A cache that cannot be written only costs repeated queries.
            let _ = std::fs::write(p, text);
        }
    }
}

impl AddressRegistry for Registry {
    fn exists(&self, address: &[u8; 20]) -> Result<bool, RegistryUnavailable> {
        self.lookup(address).map(|r| r.exists)
    }
}
