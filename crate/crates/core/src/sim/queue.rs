//! Per-sender transmit serialization with a drop-tail queue.

use std::collections::VecDeque;

use crate::message::Message;
use crate::types::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDest {
    Broadcast,
    Unicast(NodeId),
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub msg: Message,
    pub dest: FrameDest,
}

#[derive(Debug)]
pub enum Submit {
    /// The radio was idle; transmit this frame immediately.
    TransmitNow(Frame),
    /// Parked behind the current transmission.
    Queued,
    /// Queue full; the arriving frame is discarded.
    Rejected(Frame),
}

/// A node transmits one frame at a time; arrivals beyond `capacity` waiting
/// frames are dropped.
#[derive(Debug)]
pub struct TxQueue {
    busy: bool,
    waiting: VecDeque<Frame>,
    capacity: usize,
}

impl TxQueue {
    pub fn new(capacity: usize) -> TxQueue {
        TxQueue {
            busy: false,
            waiting: VecDeque::new(),
            capacity,
        }
    }

    pub fn submit(&mut self, frame: Frame) -> Submit {
        if !self.busy {
            self.busy = true;
            return Submit::TransmitNow(frame);
        }
        if self.waiting.len() >= self.capacity {
            return Submit::Rejected(frame);
        }
        self.waiting.push_back(frame);
        Submit::Queued
    }

    /// Current transmission finished; returns the next frame to put on the
    /// air, if any.
    pub fn complete(&mut self) -> Option<Frame> {
        debug_assert!(self.busy);
        match self.waiting.pop_front() {
            Some(frame) => Some(frame),
            None => {
                self.busy = false;
                None
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.waiting.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::MsgKind;
    use crate::types::SeqNum;

    fn frame(id: u64) -> Frame {
        let mut msg = Message::new(MsgKind::Data, NodeId(0), SeqNum(0), NodeId(1));
        msg.msg_id = id;
        Frame {
            msg,
            dest: FrameDest::Broadcast,
        }
    }

    #[test]
    fn idle_queue_transmits_immediately() {
        let mut q = TxQueue::new(15);
        assert!(matches!(q.submit(frame(1)), Submit::TransmitNow(_)));
        assert!(matches!(q.submit(frame(2)), Submit::Queued));
    }

    #[test]
    fn fifteenth_waiting_frame_fills_the_queue() {
        let mut q = TxQueue::new(15);
        assert!(matches!(q.submit(frame(0)), Submit::TransmitNow(_)));
        for i in 1..=15 {
            assert!(matches!(q.submit(frame(i)), Submit::Queued), "frame {i}");
        }
        match q.submit(frame(16)) {
            Submit::Rejected(f) => assert_eq!(f.msg.msg_id, 16),
            other => panic!("{other:?}"),
        }
        assert_eq!(q.depth(), 15);
    }

    #[test]
    fn completion_drains_in_fifo_order() {
        let mut q = TxQueue::new(15);
        let Submit::TransmitNow(_) = q.submit(frame(1)) else {
            panic!()
        };
        q.submit(frame(2));
        q.submit(frame(3));
        assert_eq!(q.complete().unwrap().msg.msg_id, 2);
        assert_eq!(q.complete().unwrap().msg.msg_id, 3);
        assert!(q.complete().is_none());
        // Idle again.
        assert!(matches!(q.submit(frame(4)), Submit::TransmitNow(_)));
    }
}
