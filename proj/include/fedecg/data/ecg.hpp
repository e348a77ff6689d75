#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedecg/error.hpp"

namespace fedecg::data {

// Class ids are fixed: SINUS=0, AFIB=1, OTHER=2, NOISE=3.
enum class RhythmLabel : int { SINUS = 0, AFIB = 1, OTHER = 2, NOISE = 3 };

inline constexpr int kNumClasses = 4;

const char* label_name(RhythmLabel label);
RhythmLabel label_from_name(const std::string& name);  // throws IngestError

// One labeled single-lead recording. fs is 200 or 300 Hz on ingest.
struct EcgRecord {
    std::string id;
    int fs = 200;
    std::vector<float> samples;
    RhythmLabel label = RhythmLabel::SINUS;
};

// Fixed-length window ready for the model.
struct Window {
    std::vector<float> samples;
    int label = 0;
};

// A client node's private partition (or the merged test set).
struct Shard {
    std::string shard_id;  // c0..c7 or "test"
    std::vector<Window> windows;

    std::vector<std::int64_t> class_histogram() const {
        std::vector<std::int64_t> h(kNumClasses, 0);
        for (const auto& w : windows) h.at(static_cast<std::size_t>(w.label)) += 1;
        return h;
    }
};

inline constexpr int kTargetHz = 200;
inline constexpr std::int64_t kWindowSamples = 6000;  // 30 s at 200 Hz

// Identity at 200 Hz; rational 2/3 polyphase resampling at 300 Hz
// (Hamming-windowed sinc low-pass cut at the 100 Hz output Nyquist, 65 taps
// for an integer group delay, branches normalized to exact unit DC gain).
// Output length = round(len * 2/3). Other rates are rejected.
EcgRecord resample_to_200(const EcgRecord& rec);

// Center-fits a 200 Hz record to target_len samples: shorter records are
// zero-padded symmetrically (extra zero on the right), longer ones keep the
// central window (extra trim on the left). Default target is 30 s.
std::vector<float> fix_length(const std::vector<float>& samples,
                              std::int64_t target_len = kWindowSamples);

// In-place peak normalization to [-1, 1]; silent records stay zero.
void normalize_amplitude(std::vector<float>& samples);

// Full per-record pipeline: resample -> fix_length -> normalize.
Window make_window(const EcgRecord& rec, std::int64_t target_len = kWindowSamples);

// Shard keys: c0..c7 plus "test".
std::vector<std::string> shard_names();
bool valid_shard_name(const std::string& name);

// Seeded held-out split for monitoring: floor(n*fraction) windows go to val
// (chosen by shuffle), the rest stay in train in their original order. Tiny
// inputs may end up with an empty val part.
struct SplitWindows {
    std::vector<Window> train;
    std::vector<Window> val;
};
SplitWindows split_validation(const std::vector<Window>& windows, double fraction,
                              std::uint64_t seed);

// Partitions records into the 8 client shards plus the test shard according
// to the record-id -> shard assignment. Every record must be assigned exactly
// once; windows are cut to target_len.
std::map<std::string, Shard> partition_shards(const std::vector<EcgRecord>& records,
                                              const std::map<std::string, std::string>& assignment,
                                              std::int64_t target_len = kWindowSamples);

}  // namespace fedecg::data
