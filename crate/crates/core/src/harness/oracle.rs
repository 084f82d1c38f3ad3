use crate::data::DataStream;
use crate::{Error, Result};

/// Simulated labeler holding the stream's hidden labels. Every released
/// label is counted.
#[derive(Debug)]
pub struct Oracle {
    /// Sorted by stream id.
    table: Vec<(u64, usize)>,
    query_count: usize,
}

impl Oracle {
    pub fn for_stream(stream: &DataStream) -> Self {
        Oracle {
            table: stream.label_table(),
            query_count: 0,
        }
    }

    pub fn query_count(&self) -> usize {
        self.query_count
    }

    /// Labels for `ids`, all or nothing: an id the stream has not served
    /// yet fails the whole query and nothing is charged.
    pub fn label(&mut self, ids: &[u64], stream: &DataStream) -> Result<Vec<usize>> {
        let labels = ids
            .iter()
            .map(|&id| {
                if !stream.has_served(id) {
                    return Err(Error::UnknownStreamId(id));
                }
                self.table
                    .binary_search_by_key(&id, |&(i, _)| i)
                    .map(|at| self.table[at].1)
                    .map_err(|_| Error::UnknownStreamId(id))
            })
            .collect::<Result<Vec<_>>>()?;
        self.query_count += labels.len();
        Ok(labels)
    }
}
