use std::thread;

use multiqueue::harness::{check_conservation, prefill};
use multiqueue::{Element, MultiQueue, MultiQueueConfig};

fn assert_binomial(lens: &[usize], total: usize) {
    let n = lens.len() as f64;
    let mean = total as f64 / n;
    let sd = (total as f64 * (1.0 / n) * (1.0 - 1.0 / n)).sqrt();
    for (i, &len) in lens.iter().enumerate() {
        let z = (len as f64 - mean) / sd;
        assert!(z.abs() < 5.0, "queue {i} holds {len}, z = {z:.2}");
    }
}

#[test]
fn random_placement_is_binomial_single_thread() {
    const TOTAL: usize = 1_000_000;
    let mut q = MultiQueue::new(MultiQueueConfig::new(8, 2.0).with_capacity_for(TOTAL)).unwrap();
    {
        let mut h = q.handle();
        for i in 0..TOTAL {
            h.insert(Element::new((i % 1000) as u32, i as u32));
        }
    }
    assert_binomial(&q.queue_lens(), TOTAL);
}

/// With fewer cores than threads a worker can be descheduled while holding a
/// lock; inserts then avoid that queue for a whole time slice and the counts
/// stop being binomial. The concentration check only applies without
/// oversubscription.
#[test]
fn random_placement_is_binomial() {
    const TOTAL: usize = 1_000_000;
    const THREADS: usize = 8;
    let mut q = MultiQueue::new(MultiQueueConfig::new(THREADS, 2.0).with_capacity_for(TOTAL)).unwrap();
    assert_eq!(q.num_queues(), 16);
    thread::scope(|s| {
        for t in 0..THREADS {
            let q = &q;
            s.spawn(move || {
                let mut h = q.handle_with_id(t);
                for i in 0..TOTAL / THREADS {
                    h.insert(Element::new((i % 1000) as u32, (t * TOTAL + i) as u32));
                }
            });
        }
    });
    assert!(q.all_unlocked());
    let lens = q.queue_lens();
    assert_eq!(lens.iter().sum::<usize>(), TOTAL);
    let cores = thread::available_parallelism().map_or(1, |n| n.get());
    if cores >= THREADS {
        assert_binomial(&lens, TOTAL);
    } else {
        println!("{cores} cores for {THREADS} threads, skipping concentration check: {lens:?}");
    }
}

#[test]
fn prefill_is_concentrated_per_queue() {
    let mut q = MultiQueue::new(MultiQueueConfig::new(56, 2.0).with_capacity_for(1_000_000)).unwrap();
    prefill(&q, 1_000_000, 100_000_000, 1);
    let lens = q.queue_lens();
    assert_eq!(lens.len(), 112);
    assert_eq!(lens.iter().sum::<usize>(), 1_000_000);
    let mean = 1_000_000.0 / 112.0;
    assert!((mean - 8928.57_f64).abs() < 0.01);
    let sd = (1_000_000.0 * (1.0 / 112.0) * (111.0 / 112.0_f64)).sqrt();
    for len in lens {
        assert!(((len as f64 - mean) / sd).abs() < 5.0, "{len}");
    }
    assert_eq!(q.grow_count(), 0, "preallocated heaps should not resize");
}

#[test]
fn blocking_deletes_return_the_prefill() {
    let mut q = MultiQueue::new(MultiQueueConfig::new(4, 2.0).with_capacity_for(1_000_000)).unwrap();
    prefill(&q, 1_000_000, 100_000_000, 9);
    let mut snapshot: Vec<(u32, u32)> = {
        let mut copy = MultiQueue::new(MultiQueueConfig::new(4, 2.0)).unwrap();
        prefill(&copy, 1_000_000, 100_000_000, 9);
        copy.drain().iter().map(|e| (e.value, e.key)).collect()
    };
    let mut out: Vec<(u32, u32)> = {
        let mut h = q.handle();
        (0..1_000_000)
            .map(|_| h.delete_min_blocking())
            .map(|e| (e.value, e.key))
            .collect()
    };
    assert!(q.is_empty());
    out.sort_unstable();
    snapshot.sort_unstable();
    assert_eq!(out, snapshot);
}

#[test]
fn concurrent_mixed_history_conserves_elements() {
    const THREADS: usize = 6;
    const OPS: usize = 40_000;
    for strict in [false, true] {
        let mut q = MultiQueue::new(MultiQueueConfig::new(THREADS, 2.0).with_strict_min(strict)).unwrap();
        let per_thread: Vec<(Vec<Element>, Vec<Element>)> = thread::scope(|s| {
            let workers: Vec<_> = (0..THREADS)
                .map(|t| {
                    let q = &q;
                    s.spawn(move || {
                        let mut h = q.handle();
                        let (mut ins, mut del) = (Vec::new(), Vec::new());
                        for i in 0..OPS {
                            // two inserts for every non-blocking delete attempt
                            if i % 3 != 2 {
                                let e = Element::new(((i * 7919) % 10_007) as u32, (t * OPS + i) as u32);
                                h.insert(e);
                                ins.push(e);
                            } else if let Some(e) = h.delete_min() {
                                del.push(e);
                            }
                        }
                        (ins, del)
                    })
                })
                .collect();
            workers.into_iter().map(|w| w.join().unwrap()).collect()
        });
        assert!(q.all_unlocked());
        let stats = q.stats();
        let inserted: Vec<Element> = per_thread.iter().flat_map(|p| p.0.clone()).collect();
        let deleted: Vec<Element> = per_thread.iter().flat_map(|p| p.1.clone()).collect();
        assert_eq!(stats.inserts, inserted.len() as u64);
        assert_eq!(stats.deletes, deleted.len() as u64);
        let drained = q.drain();
        check_conservation(&inserted, &deleted, &drained).unwrap();
    }
}

#[test]
fn single_queue_under_threads_keeps_per_thread_order() {
    // one local queue: every delete returns the global minimum at that instant,
    // so deletes without interleaved inserts by anyone come out sorted
    let q = MultiQueue::new(MultiQueueConfig::new(1, 1.0)).unwrap();
    {
        let mut h = q.handle();
        for k in (0..20_000u32).rev() {
            h.insert(Element::new(k, k));
        }
    }
    let outs: Vec<Vec<u32>> = thread::scope(|s| {
        let ws: Vec<_> = (0..4)
            .map(|_| {
                let q = &q;
                s.spawn(move || {
                    let mut h = q.handle();
                    std::iter::from_fn(|| h.delete_min()).map(|e| e.key).collect::<Vec<_>>()
                })
            })
            .collect();
        ws.into_iter().map(|w| w.join().unwrap()).collect()
    });
    let mut all = Vec::new();
    for o in &outs {
        assert!(o.windows(2).all(|w| w[0] < w[1]));
        all.extend_from_slice(o);
    }
    all.sort_unstable();
    assert_eq!(all, (0..20_000).collect::<Vec<_>>());
}
