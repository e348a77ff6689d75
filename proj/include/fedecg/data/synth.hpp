#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedecg/data/ecg.hpp"
#include "fedecg/rng.hpp"

namespace fedecg::data {

// Seeded synthetic ECG generator: a desk-scale stand-in dataset with the
// same shape as the real one (8 client shards + test, 4 classes, 200 Hz).
//
// Waveform model per class:
//   SINUS  regular beats (P, QRS, T Gaussian bumps), RR = rr_mean*(1 + j*u)
//          with small jitter j and u ~ U(-1,1)
//   AFIB   no P bump, per-beat RR drawn from a wide uniform band
//          (irregularly irregular), plus a fast low-amplitude baseline wiggle
//   OTHER  sinus base; every third beat is ectopic: inverted QRS, early
//   NOISE  band-limited noise with no beat structure
// All records are emitted at 200 Hz and peak-normalized to [-1, 1].
struct SynthConfig {
    // counts[shard][class]; shard order c0..c7 then test.
    std::array<std::array<int, kNumClasses>, 9> counts{};
    double duration_s = 30.0;
    double rr_mean_s = 0.8;        // sinus mean RR
    double rr_jitter = 0.04;       // sinus fractional jitter
    double afib_rr_band = 0.45;    // AFIB RR in rr_mean*(1 +/- band)
    double noise_amplitude = 0.05; // additive white noise on every class
    std::uint64_t seed = 0;
};

// Uniform counts per client shard with an optional dominant-class skew:
// shard i favors class (i mod 4) with fraction 0.25 + 0.75*skew; the test
// shard stays balanced.
SynthConfig make_synth_config(int records_per_shard, int test_records, double skew,
                              std::uint64_t seed);

// RR-interval sequence for one record of the given class; exposed separately
// so interval statistics can be checked against the generator directly.
std::vector<double> synth_rr_intervals(RhythmLabel label, const SynthConfig& cfg, SeededRng& rng,
                                       int count);

// One record; deterministic in (cfg.seed, shard_idx, record_idx).
EcgRecord synth_record(const SynthConfig& cfg, RhythmLabel label, int shard_idx, int record_idx);

// The full dataset keyed by shard name, plus ids assigned per shard.
std::vector<std::pair<EcgRecord, std::string>> synth_generate(const SynthConfig& cfg);

}  // namespace fedecg::data
