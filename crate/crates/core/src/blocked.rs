//! Blocked combinator: a sequence of independent inner filters behind a
//! multiplexed hash. The hash output's first component picks the block, the
//! second drives that block's inner filter; no operation ever touches the
//! other blocks.
//!
//! The combinator is generic over the inner [`Amq`], so blocked Bloom,
//! blocked counting and blocked quotient filters are instantiations, not
//! re-implementations.

use crate::amq::Amq;
use crate::hashing::HashOutput;
use crate::AmqError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockedState<A> {
    blocks: Vec<A>,
}

impl<A: Amq> BlockedState<A> {
    /// `blocks` clones of a fresh inner state.
    pub fn new(blocks: u64, template: A) -> Result<Self, AmqError> {
        if blocks == 0 {
            return Err(AmqError::InvalidParameter(
                "blocked structure needs at least 1 block".into(),
            ));
        }
        Ok(BlockedState {
            blocks: vec![template; blocks as usize],
        })
    }

    pub fn block_count(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn blocks(&self) -> &[A] {
        &self.blocks
    }

    pub(crate) fn from_blocks(blocks: Vec<A>) -> Self {
        BlockedState { blocks }
    }

    fn check(&self, block: &HashOutput) -> Result<usize, AmqError> {
        let at = block.index;
        if at < self.block_count() {
            Ok(at as usize)
        } else {
            Err(AmqError::IndexOutOfRange {
                index: at,
                size: self.block_count(),
            })
        }
    }
}

impl<A: Amq + std::fmt::Debug + PartialEq> Amq for BlockedState<A> {
    type Output = (HashOutput, A::Output);

    fn add_internal(&self, output: &Self::Output) -> Result<Self, AmqError> {
        let (block, inner_out) = output;
        let at = self.check(block)?;
        let mut blocks = self.blocks.clone();
        blocks[at] = blocks[at].add_internal(inner_out)?;
        Ok(BlockedState { blocks })
    }

    fn query_internal(&self, output: &Self::Output) -> bool {
        let (block, inner_out) = output;
        let at = self.check(block).expect("block index within range");
        self.blocks[at].query_internal(inner_out)
    }

    // Routing is random, so in the worst case all inserts land in one
    // block: demand capacity from every block.
    fn available_capacity(&self, further_inserts: u64) -> bool {
        self.blocks
            .iter()
            .all(|block| block.available_capacity(further_inserts))
    }
}
