// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_RNG_H
#define ATPSIM_RNG_H

#include <cmath>
#include <cstdint>
#include <random>

#include "units.h"

namespace atpsim {

// Independent named streams hang off one master seed so that adding draws to
// one consumer (say, RED) never perturbs another (say, workload sizes).
enum class RngUse : uint32_t {
    Spray = 0,
    Red = 1,
    WorkloadSize = 2,
    WorkloadArrival = 3,
    WorkloadPlacement = 4,
    SenderDrop = 5,
};

class RngStream {
  public:
    RngStream(uint64_t master_seed, RngUse use)
        : eng_(mix(master_seed, static_cast<uint32_t>(use))) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).  Hand-rolled from the top 53 bits so the draw
    // sequence is identical across standard libraries.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    uint64_t uniform_int(uint64_t n) { return n <= 1 ? 0 : eng_() % n; }

    // Exponential inter-arrival with the given rate (events per unit).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  private:
    static uint64_t mix(uint64_t seed, uint32_t use) {
        uint64_t z = seed + 0x9E3779B97F4A7C15ull * (use + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::mt19937_64 eng_;
};

}  // namespace atpsim

#endif
