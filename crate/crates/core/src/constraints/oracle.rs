use std::sync::Mutex;

/// Whether an oracle may be scored from several threads at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concurrency {
    Parallel,
    Serial,
}

/// A language model seen as prefix -> next-piece logits.
pub trait ScoringOracle {
    fn vocab_size(&self) -> usize;
    fn logits(&self, prefix: &[usize]) -> Vec<f64>;
    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }
}

impl<T: ScoringOracle + ?Sized> ScoringOracle for &T {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn logits(&self, prefix: &[usize]) -> Vec<f64> {
        (**self).logits(prefix)
    }
    fn concurrency(&self) -> Concurrency {
        (**self).concurrency()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UniformOracle {
    pub vocab_size: usize,
}

impl ScoringOracle for UniformOracle {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }
    fn logits(&self, _: &[usize]) -> Vec<f64> {
        vec![0.0; self.vocab_size]
    }
}

/// Context-free unigram model; logits are add-one smoothed log frequencies.
#[derive(Debug, Clone)]
pub struct UnigramOracle {
    log_probs: Vec<f64>,
}

impl UnigramOracle {
    pub fn from_counts(counts: &[u64]) -> Self {
        let total: f64 = counts.iter().map(|&c| c as f64 + 1.0).sum();
        Self {
            log_probs: counts
                .iter()
                .map(|&c| ((c as f64 + 1.0) / total).ln())
                .collect(),
        }
    }

    pub fn from_logits(logits: Vec<f64>) -> Self {
        Self { log_probs: logits }
    }
}

impl ScoringOracle for UnigramOracle {
    fn vocab_size(&self) -> usize {
        self.log_probs.len()
    }
    fn logits(&self, _: &[usize]) -> Vec<f64> {
        self.log_probs.clone()
    }
}

/// Wraps a closure. A serial oracle's closure only ever runs under a lock.
pub struct FnOracle<F> {
    vocab_size: usize,
    f: F,
    lock: Option<Mutex<()>>,
}

impl<F: Fn(&[usize]) -> Vec<f64>> FnOracle<F> {
    pub fn new(vocab_size: usize, f: F) -> Self {
        Self {
            vocab_size,
            f,
            lock: None,
        }
    }

    pub fn serial(vocab_size: usize, f: F) -> Self {
        Self {
            vocab_size,
            f,
            lock: Some(Mutex::new(())),
        }
    }
}

impl<F: Fn(&[usize]) -> Vec<f64>> ScoringOracle for FnOracle<F> {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }
    fn logits(&self, prefix: &[usize]) -> Vec<f64> {
        let _guard = self
            .lock
            .as_ref()
            .map(|m| m.lock().unwrap_or_else(|e| e.into_inner()));
        (self.f)(prefix)
    }
    fn concurrency(&self) -> Concurrency {
        if self.lock.is_some() {
            Concurrency::Serial
        } else {
            Concurrency::Parallel
        }
    }
}
