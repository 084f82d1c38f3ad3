/// When the batch under construction is sent for labeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriggerKind {
    /// Fires on the `w`-th sample observed since the last retrain.
    Window(usize),
    /// Fires on the decision that brings the batch to `k` members.
    BatchFilling(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriggerHeuristic {
    kind: TriggerKind,
    seen: usize,
}

impl TriggerHeuristic {
    pub fn window(w: usize) -> Self {
        TriggerHeuristic {
            kind: TriggerKind::Window(w),
            seen: 0,
        }
    }

    pub fn batch_filling(k: usize) -> Self {
        TriggerHeuristic {
            kind: TriggerKind::BatchFilling(k),
            seen: 0,
        }
    }

    pub fn kind(&self) -> TriggerKind {
        self.kind
    }

    /// Samples observed since the last reset.
    pub fn seen(&self) -> usize {
        self.seen
    }

    /// Counts one observed sample given the batch size after the decision.
    pub fn observe(&mut self, batch_len: usize) -> bool {
        self.seen += 1;
        match self.kind {
            TriggerKind::Window(w) => self.seen == w,
            TriggerKind::BatchFilling(k) => batch_len == k,
        }
    }

    pub fn reset(&mut self) {
        self.seen = 0;
    }
}
