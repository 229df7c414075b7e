use std::collections::VecDeque;
use std::sync::{Condvar, Mutex, MutexGuard};

use thiserror::Error;

/// The buffer was closed because some stage aborted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("buffer closed")]
pub struct Closed;

struct State<T> {
    queue: VecDeque<T>,
    closed: bool,
    // histogram[k] counts pushes that left k items in the queue
    histogram: Vec<u64>,
}

/// Fixed-capacity blocking FIFO between two adjacent stages. Producers wait
/// while it is full, consumers wait while it is empty.
pub struct BoundedBuffer<T> {
    state: Mutex<State<T>>,
    not_empty: Condvar,
    not_full: Condvar,
    capacity: usize,
}

impl<T> BoundedBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "buffer capacity must be at least 1");
        BoundedBuffer {
            state: Mutex::new(State {
                queue: VecDeque::with_capacity(capacity),
                closed: false,
                histogram: vec![0; capacity + 1],
            }),
            not_empty: Condvar::new(),
            not_full: Condvar::new(),
            capacity,
        }
    }

    fn lock(&self) -> MutexGuard<'_, State<T>> {
        // a poisoned lock only means a peer panicked; the queue is still sound
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&self, item: T) -> Result<(), Closed> {
        let mut st = self.lock();
        while st.queue.len() >= self.capacity && !st.closed {
            st = self.not_full.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        if st.closed {
            return Err(Closed);
        }
        st.queue.push_back(item);
        let len = st.queue.len();
        st.histogram[len] += 1;
        drop(st);
        self.not_empty.notify_one();
        Ok(())
    }

    pub fn pop(&self) -> Result<T, Closed> {
        let mut st = self.lock();
        loop {
            if st.closed {
                return Err(Closed);
            }
            if let Some(item) = st.queue.pop_front() {
                drop(st);
                self.not_full.notify_one();
                return Ok(item);
            }
            st = self.not_empty.wait(st).unwrap_or_else(|e| e.into_inner());
        }
    }

    /// Wake every waiter and make all further pushes and pops fail.
    pub fn close(&self) {
        let mut st = self.lock();
        st.closed = true;
        st.queue.clear();
        drop(st);
        self.not_empty.notify_all();
        self.not_full.notify_all();
    }

    pub fn len(&self) -> usize {
        self.lock().queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn occupancy_histogram(&self) -> Vec<u64> {
        self.lock().histogram.clone()
    }
}
