use std::sync::Arc;

use arc_swap::ArcSwapOption;

/// Single-slot latest-value snapshot shared between one publisher and any
/// number of readers. Publishing never waits for readers and readers always
/// observe a complete value.
#[derive(Debug)]
pub struct GazeSlot<T> {
    inner: ArcSwapOption<T>,
}

impl<T> Default for GazeSlot<T> {
    fn default() -> Self {
        Self {
            inner: ArcSwapOption::empty(),
        }
    }
}

impl<T> GazeSlot<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn publish(&self, value: T) {
        self.inner.store(Some(Arc::new(value)));
    }

    pub fn latest(&self) -> Option<Arc<T>> {
        self.inner.load_full()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaze::GazeSample;
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::thread;

    #[test]
    fn empty_until_published() {
        let slot: GazeSlot<u32> = GazeSlot::new();
        assert!(slot.latest().is_none());
        slot.publish(3);
        slot.publish(4);
        assert_eq!(*slot.latest().unwrap(), 4);
    }

    #[test]
    fn readers_never_see_torn_samples() {
        let slot = Arc::new(GazeSlot::<GazeSample>::new());
        let done = Arc::new(AtomicBool::new(false));
        let reader = {
            let slot = slot.clone();
            let done = done.clone();
            thread::spawn(move || {
                let mut last = 0;
                while !done.load(Ordering::Relaxed) {
                    if let Some(s) = slot.latest() {
                        // writer keeps x == y == timestamp
                        assert_eq!(s.x_px, s.timestamp_us as f32);
                        assert_eq!(s.y_px, s.timestamp_us as f32);
                        assert!(s.timestamp_us >= last);
                        last = s.timestamp_us;
                    }
                }
            })
        };
        for t in 0..50_000u64 {
            slot.publish(GazeSample::new(t, t as f32, t as f32));
        }
        done.store(true, Ordering::Relaxed);
        reader.join().unwrap();
    }
}
