use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io;

use serde::{Deserialize, Serialize};

use crate::quantum::Party;

struct Entry<E> {
    time: f64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Pending events ordered by `(time, insertion sequence)`.
pub struct EventQueue<E> {
    heap: BinaryHeap<Reverse<Entry<E>>>,
    next_seq: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the sequence number that breaks ties at equal `time`.
    pub fn push(&mut self, time: f64, event: E) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry { time, seq, event }));
        seq
    }

    pub fn pop(&mut self) -> Option<(f64, u64, E)> {
        self.heap.pop().map(|Reverse(e)| (e.time, e.seq, e.event))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TranscriptEvent {
    Collapse { species: String, type_i: usize, type_ii: usize },
    Send { species: String, n_labels: usize },
    Deliver { species: String, n_labels: usize, send_time: f64 },
    Lost { species: String },
    SampleBatch { species: String, nominal_t: f64, count_pos: u64, count_neg: u64 },
    Abort { reason: String },
}

/// One committed event. `time` is on the common axis, `local_time` on the
/// acting party's clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub seq: u64,
    pub time: f64,
    pub party: Party,
    pub local_time: f64,
    #[serde(flatten)]
    pub event: TranscriptEvent,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub(crate) fn push(&mut self, time: f64, party: Party, local_time: f64, event: TranscriptEvent) {
        let seq = self.records.len() as u64;
        self.records.push(TranscriptRecord {
            seq,
            time,
            party,
            local_time,
            event,
        });
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Skips blank lines and lines that are not transcript records (such as a header).
    pub fn read_jsonl<R: io::BufRead>(r: R) -> io::Result<Self> {
        let mut records = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if let Ok(rec) = serde_json::from_str::<TranscriptRecord>(&line) {
                records.push(rec);
            }
        }
        Ok(Transcript { records })
    }

    /// Common time of the first record matching `pred`.
    pub fn first_time(&self, pred: impl Fn(&TranscriptRecord) -> bool) -> Option<f64> {
        self.records.iter().find(|r| pred(r)).map(|r| r.time)
    }
}
