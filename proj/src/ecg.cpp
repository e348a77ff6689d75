#include "fedecg/data/ecg.hpp"

#include <algorithm>
#include <cmath>

#include "fedecg/rng.hpp"

namespace fedecg::data {

const char* label_name(RhythmLabel label) {
    switch (label) {
        case RhythmLabel::SINUS: return "SINUS";
        case RhythmLabel::AFIB: return "AFIB";
        case RhythmLabel::OTHER: return "OTHER";
        case RhythmLabel::NOISE: return "NOISE";
    }
    return "?";
}

RhythmLabel label_from_name(const std::string& name) {
    if (name == "SINUS") return RhythmLabel::SINUS;
    if (name == "AFIB") return RhythmLabel::AFIB;
    if (name == "OTHER") return RhythmLabel::OTHER;
    if (name == "NOISE") return RhythmLabel::NOISE;
    throw IngestError("unknown label '" + name + "'");
}

namespace {

// 2/3 polyphase filter bank. Prototype: 65-tap Hamming-windowed sinc, cutoff
// 100 Hz at the 600 Hz upsampled rate (normalized 1/6), center tap 32. The
// even/odd polyphase branches are normalized to unit coefficient sum, which
// preserves DC exactly. Output sample m reads upsampled index 3m with the
// 32-sample group delay compensated, so the resampler is delay-free.
struct Polyphase23 {
    static constexpr int kTaps = 65;
    static constexpr int kCenter = 32;
    double h[kTaps];

    Polyphase23() {
        const double fc = 1.0 / 6.0;  // cycles per upsampled sample
        double sum_even = 0, sum_odd = 0;
        for (int n = 0; n < kTaps; ++n) {
            const double t = n - static_cast<double>(kCenter);
            const double arg = 2.0 * M_PI * fc * t;
            const double sinc = t == 0.0 ? 1.0 : std::sin(arg) / arg;
            const double window = 0.54 - 0.46 * std::cos(2.0 * M_PI * n / (kTaps - 1));
            h[n] = 2.0 * fc * sinc * window;
            (n % 2 == 0 ? sum_even : sum_odd) += h[n];
        }
        for (int n = 0; n < kTaps; ++n) h[n] /= (n % 2 == 0 ? sum_even : sum_odd);
    }
};

const Polyphase23& filter23() {
    static const Polyphase23 f;
    return f;
}

}  // namespace

EcgRecord resample_to_200(const EcgRecord& rec) {
    if (rec.samples.empty()) throw IngestError("record '" + rec.id + "' has no samples");
    if (rec.fs == kTargetHz) return rec;
    if (rec.fs != 300)
        throw IngestError("record '" + rec.id + "': unsupported sample rate " +
                          std::to_string(rec.fs));

    const auto& f = filter23();
    const std::int64_t in_len = static_cast<std::int64_t>(rec.samples.size());
    const std::int64_t out_len = (2 * in_len + 1) / 3;  // round(len * 2/3)

    EcgRecord out;
    out.id = rec.id;
    out.fs = kTargetHz;
    out.label = rec.label;
    out.samples.resize(static_cast<std::size_t>(out_len));

    // y[m] = sum_k h[k] * x_up[3m + center - k], x_up[j] = x[j/2] for even j.
    for (std::int64_t m = 0; m < out_len; ++m) {
        const std::int64_t up = 3 * m + Polyphase23::kCenter;
        double acc = 0;
        for (int k = 0; k < Polyphase23::kTaps; ++k) {
            const std::int64_t j = up - k;
            if (j < 0 || (j & 1)) continue;
            const std::int64_t src = j >> 1;
            if (src >= in_len) continue;
            acc += f.h[k] * static_cast<double>(rec.samples[static_cast<std::size_t>(src)]);
        }
        out.samples[static_cast<std::size_t>(m)] = static_cast<float>(acc);
    }
    return out;
}

std::vector<float> fix_length(const std::vector<float>& samples, std::int64_t target_len) {
    const std::int64_t len = static_cast<std::int64_t>(samples.size());
    if (len == target_len) return samples;
    std::vector<float> out(static_cast<std::size_t>(target_len), 0.0f);
    if (len < target_len) {
        const std::int64_t left = (target_len - len) / 2;  // extra zero on the right
        std::copy(samples.begin(), samples.end(), out.begin() + left);
    } else {
        const std::int64_t trim = len - target_len;
        const std::int64_t left = (trim + 1) / 2;  // extra trim on the left
        std::copy(samples.begin() + left, samples.begin() + left + target_len, out.begin());
    }
    return out;
}

void normalize_amplitude(std::vector<float>& samples) {
    float peak = 0;
    for (const float v : samples) peak = std::max(peak, std::abs(v));
    if (peak == 0.0f) return;
    for (float& v : samples) v /= peak;
}

Window make_window(const EcgRecord& rec, std::int64_t target_len) {
    const EcgRecord at200 = resample_to_200(rec);
    Window w;
    w.samples = fix_length(at200.samples, target_len);
    normalize_amplitude(w.samples);
    w.label = static_cast<int>(rec.label);
    return w;
}

std::vector<std::string> shard_names() {
    std::vector<std::string> names;
    for (int i = 0; i < 8; ++i) names.push_back("c" + std::to_string(i));
    names.push_back("test");
    return names;
}

bool valid_shard_name(const std::string& name) {
    if (name == "test") return true;
    return name.size() == 2 && name[0] == 'c' && name[1] >= '0' && name[1] <= '7';
}

SplitWindows split_validation(const std::vector<Window>& windows, double fraction,
                              std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0)
        throw ValueError("split_validation: fraction must be in [0,1)");
    const std::size_t n = windows.size();
    const std::size_t val_count = static_cast<std::size_t>(static_cast<double>(n) * fraction);

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    SeededRng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.next_below(i)]);

    std::vector<bool> in_val(n, false);
    for (std::size_t i = 0; i < val_count; ++i) in_val[idx[i]] = true;

    SplitWindows out;
    for (std::size_t i = 0; i < n; ++i)
        (in_val[i] ? out.val : out.train).push_back(windows[i]);
    return out;
}

std::map<std::string, Shard> partition_shards(const std::vector<EcgRecord>& records,
                                              const std::map<std::string, std::string>& assignment,
                                              std::int64_t target_len) {
    std::map<std::string, Shard> shards;
    for (const auto& name : shard_names()) shards[name].shard_id = name;

    std::map<std::string, bool> seen;
    for (const auto& rec : records) {
        if (seen.count(rec.id))
            throw IngestError("record '" + rec.id + "' appears more than once");
        seen[rec.id] = true;
        const auto it = assignment.find(rec.id);
        if (it == assignment.end())
            throw IngestError("record '" + rec.id + "' has no shard assignment");
        if (!valid_shard_name(it->second))
            throw IngestError("record '" + rec.id + "': invalid shard '" + it->second + "'");
        shards[it->second].windows.push_back(make_window(rec, target_len));
    }
    for (const auto& [id, shard] : assignment)
        if (!seen.count(id)) throw IngestError("assignment names unknown record '" + id + "'");
    return shards;
}

}  // namespace fedecg::data
