// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_PACKET_H
#define ATPSIM_PACKET_H

#include <cstdint>

#include "units.h"

namespace atpsim {

// Switch queue class.  Accurate traffic gets the big shared buffer (queue 0);
// approximate data is tagged with a priority level 1..6 (1 = highest, used by
// the lowest-rate flows); backup duplicates ride the strictly-lowest queue 7.
struct PriorityTag {
    enum class Class : uint8_t { Accurate, Approx, Backup };
    Class cls = Class::Accurate;
    uint8_t level = 0;  // 1..6, Approx only

    static PriorityTag accurate() { return {Class::Accurate, 0}; }
    static PriorityTag approx(uint8_t level) { return {Class::Approx, level}; }
    static PriorityTag backup() { return {Class::Backup, 0}; }
};

// Map a tag onto the 8 per-port FIFO queues.
inline int classify(const PriorityTag& tag) {
    switch (tag.cls) {
        case PriorityTag::Class::Accurate: return 0;
        case PriorityTag::Class::Approx:
            SIM_CHECK(tag.level >= 1 && tag.level <= 6, "approx priority level out of range 1..6");
            return tag.level;
        case PriorityTag::Class::Backup: return 7;
    }
    return 0;
}

enum class PacketKind : uint8_t { Data, Ack };

// Simulated packet.  Headers are byte-counted, not serialized: a data packet
// occupies payload + 56 B on the wire (16 B transport header + 40 B encap),
// an ACK occupies 64 B.  ACKs echo the identity of the packet they confirm in
// message_id / pkt_index / seq / payload_bytes and carry the receiver's
// cumulative n_ack plus the flow-done flag.
struct Packet {
    PacketKind kind = PacketKind::Data;
    PriorityTag prio;
    bool ce_marked = false;    // ECN congestion-experienced
    bool echo_ce = false;      // ack: CE state of the confirmed data packet
    bool from_backup = false;  // data: emitted by the backup sub-flow (echoed in acks)
    bool flow_done = false;    // ack: receiver reached its required message count

    uint32_t flow_id = 0;
    uint32_t message_id = 0;
    uint32_t pkt_index = 0;     // packet position within the message
    uint32_t seq = 0;           // per-flow emission sequence number
    uint16_t payload_bytes = 0;
    uint64_t n_ack = 0;         // ack: loss-adjusted acknowledgment count

    NodeId src = -1;
    NodeId dst = -1;

    uint32_t wire_bytes() const {
        return kind == PacketKind::Ack ? ACK_WIRE_BYTES : payload_bytes + DATA_OVERHEAD_BYTES;
    }
};

}  // namespace atpsim

#endif
