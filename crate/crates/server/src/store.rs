use std::collections::HashMap;
use std::sync::{Arc, Mutex as StdMutex, RwLock};
use std::time::{Duration, Instant};

use levelscope_core::Session;
use tokio::sync::Mutex;
use tokio::task::JoinHandle;

pub(crate) struct Slot {
    pub(crate) session: Arc<Mutex<Session>>,
    last_access: StdMutex<Instant>,
}

/// In-memory sessions keyed by opaque id, dropped after `ttl` of inactivity.
#[derive(Clone)]
pub struct SessionStore {
    inner: Arc<RwLock<HashMap<String, Arc<Slot>>>>,
    ttl: Duration,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self {
            inner: Arc::default(),
            ttl,
        }
    }

    pub fn insert(&self, session: Session) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let slot = Arc::new(Slot {
            session: Arc::new(Mutex::new(session)),
            last_access: StdMutex::new(Instant::now()),
        });
        self.inner.write().unwrap().insert(id.clone(), slot);
        id
    }

    /// Looks up a live session and refreshes its idle timer.
    pub(crate) fn get(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        let map = self.inner.read().unwrap();
        let slot = map.get(id)?;
        let mut last = slot.last_access.lock().unwrap();
        if last.elapsed() > self.ttl {
            return None;
        }
        *last = Instant::now();
        Some(slot.session.clone())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.inner.read().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Removes sessions idle for longer than the TTL. Returns how many.
    pub fn sweep(&self) -> usize {
        let mut map = self.inner.write().unwrap();
        let before = map.len();
        map.retain(|_, slot| slot.last_access.lock().unwrap().elapsed() <= self.ttl);
        before - map.len()
    }

    pub(crate) fn spawn_sweeper(self) -> JoinHandle<()> {
        let period = (self.ttl / 4).clamp(Duration::from_millis(50), Duration::from_secs(60));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                let dropped = self.sweep();
                if dropped > 0 {
                    tracing::info!(dropped, "expired idle sessions");
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use levelscope_core::synth::{generate, GeneratorConfig};
    use levelscope_core::SamplingConfig;

    fn session() -> Session {
        let ds = generate(&GeneratorConfig {
            rows: 50,
            ..GeneratorConfig::default()
        })
        .encode()
        .unwrap();
        Session::new(Arc::new(ds), &SamplingConfig::default())
    }

    #[test]
    fn idle_sessions_expire() {
        let store = SessionStore::new(Duration::from_millis(30));
        let id = store.insert(session());
        assert!(store.contains(&id));
        std::thread::sleep(Duration::from_millis(60));
        assert!(!store.contains(&id));
        assert_eq!(store.sweep(), 1);
        assert!(store.is_empty());
    }

    #[test]
    fn access_refreshes_timer() {
        let store = SessionStore::new(Duration::from_millis(80));
        let id = store.insert(session());
        for _ in 0..4 {
            std::thread::sleep(Duration::from_millis(30));
            assert!(store.contains(&id));
        }
        assert_eq!(store.sweep(), 0);
        assert_eq!(store.ids(), vec![id]);
    }
}
