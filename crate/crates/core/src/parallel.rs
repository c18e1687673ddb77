//! Bounded worker pool with order-preserving map.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Records processed per parallel batch when streaming.
pub const DEFAULT_CHUNK: usize = 8192;

pub struct WorkerPool {
    pool: Option<rayon::ThreadPool>,
}

impl WorkerPool {
    /// `threads == 1` runs everything on the calling thread.
    pub fn new(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        let pool = if threads == 1 {
            None
        } else {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?,
            )
        };
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Map `f` over `items`; results come back in input order.
    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match &self.pool {
            None => items.iter().map(f).collect(),
            Some(pool) => pool.install(|| items.par_iter().map(f).collect()),
        }
    }

    /// Pull `chunk` items at a time from `source`, map each batch in
    /// parallel, and hand results to `sink` in source order. Stops at the
    /// first error from the source, the mapper, or the sink.
    pub fn stream<T, U, E, I, F, S>(&self, source: I, chunk: usize, f: F, mut sink: S) -> std::result::Result<(), E>
    where
        I: IntoIterator<Item = std::result::Result<T, E>>,
        T: Sync,
        U: Send,
        E: Send,
        F: Fn(&T) -> std::result::Result<U, E> + Sync + Send,
        S: FnMut(T, U) -> std::result::Result<(), E>,
    {
        let chunk = chunk.max(1);
        let mut source = source.into_iter();
        let mut batch = Vec::with_capacity(chunk);
        loop {
            batch.clear();
            for item in source.by_ref().take(chunk) {
                batch.push(item?);
            }
            if batch.is_empty() {
                return Ok(());
            }
            let results = self.map(&batch, &f);
            for (item, res) in batch.drain(..).zip(results) {
                sink(item, res?)?;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_threads_rejected() {
        assert!(WorkerPool::new(0).is_err());
    }

    #[test]
    fn map_preserves_order() {
        let items: Vec<u64> = (0..10_000).collect();
        let serial = WorkerPool::new(1).unwrap().map(&items, |x| x * x);
        let parallel = WorkerPool::new(4).unwrap().map(&items, |x| x * x);
        assert_eq!(serial, parallel);
        assert_eq!(parallel[9_999], 9_999 * 9_999);
    }

    #[test]
    fn stream_in_order_across_chunks() {
        let pool = WorkerPool::new(3).unwrap();
        let source = (0..1000u32).map(Ok::<_, String>);
        let mut seen = Vec::new();
        pool.stream(source, 64, |x| Ok(x + 1), |x, y| {
            seen.push((x, y));
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), 1000);
        assert!(seen.iter().enumerate().all(|(i, &(x, y))| x as usize == i && y == x + 1));
    }

    #[test]
    fn stream_propagates_errors() {
        let pool = WorkerPool::new(2).unwrap();
        let source = (0..10u32).map(|x| if x == 7 { Err("bad source".to_string()) } else { Ok(x) });
        let err = pool.stream(source, 4, |x| Ok(*x), |_, _| Ok(())).unwrap_err();
        assert_eq!(err, "bad source");
        let source = (0..10u32).map(Ok::<_, String>);
        let err = pool
            .stream(source, 4, |x| if *x == 2 { Err("bad map".into()) } else { Ok(*x) }, |_, _| Ok(()))
            .unwrap_err();
        assert_eq!(err, "bad map");
    }
}
