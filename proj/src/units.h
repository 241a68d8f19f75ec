// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_UNITS_H
#define ATPSIM_UNITS_H

#include <cstdint>
#include <stdexcept>
#include <string>

namespace atpsim {

// Virtual time in integer nanoseconds.  12 us per 1500 B at 1 Gbps is exact.
using SimTime = int64_t;
// Bandwidth in bits per second.
using Bps = int64_t;
using NodeId = int32_t;

constexpr SimTime NS_PER_SEC = 1'000'000'000;
constexpr SimTime NS_PER_US = 1'000;

constexpr SimTime time_us(int64_t us) { return us * NS_PER_US * 1000 / 1000; }
constexpr SimTime time_ms(int64_t ms) { return ms * 1'000'000; }

constexpr Bps GBPS = 1'000'000'000;
constexpr Bps MBPS = 1'000'000;

// Emulated header accounting: transport header fields (flow_id 4, message_id 4,
// seq 4, data_len 2, priority 1, flags 1) plus UDP/IP/Ethernet encapsulation.
constexpr uint32_t TRANSPORT_HEADER_BYTES = 16;
constexpr uint32_t ENCAP_OVERHEAD_BYTES = 40;
constexpr uint32_t DATA_OVERHEAD_BYTES = TRANSPORT_HEADER_BYTES + ENCAP_OVERHEAD_BYTES;
constexpr uint32_t ACK_WIRE_BYTES = 64;
constexpr uint32_t MIN_CTRL_WIRE_BYTES = DATA_OVERHEAD_BYTES;  // zero-payload frame

constexpr uint32_t DEFAULT_MTU = 1500;
constexpr uint32_t mtu_payload(uint32_t mtu) { return mtu - ENCAP_OVERHEAD_BYTES; }

// Wire footprint of a data packet carrying `payload_bytes`.
constexpr uint64_t data_wire_bits(uint32_t payload_bytes) {
    return static_cast<uint64_t>(payload_bytes + DATA_OVERHEAD_BYTES) * 8;
}

// Serialization delay of `bytes` on a link of `bw` bits/sec, rounded up so a
// link never ships more bits than its rate allows.
inline SimTime transmission_time_ns(uint64_t bytes, Bps bw) {
    if (bw <= 0)
        throw std::invalid_argument("transmission_time_ns: bandwidth must be positive");
    unsigned __int128 bits = static_cast<unsigned __int128>(bytes) * 8u * NS_PER_SEC;
    return static_cast<SimTime>((bits + static_cast<unsigned __int128>(bw) - 1) / bw);
}

// Fatal simulation invariant violation; the CLI maps this to a nonzero exit
// that names the failed assertion.
struct SimError : std::logic_error {
    explicit SimError(const std::string& what) : std::logic_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

#define SIM_CHECK(cond, msg)                                            \
    do {                                                                \
        if (!(cond))                                                    \
            throw ::atpsim::SimError(std::string("invariant violated: ") + (msg)); \
    } while (0)

}  // namespace atpsim

#endif
