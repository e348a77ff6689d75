#include "fedecg/data/synth.hpp"

#include <cmath>
#include <cstdio>

namespace fedecg::data {

SynthConfig make_synth_config(int records_per_shard, int test_records, double skew,
                              std::uint64_t seed) {
    if (records_per_shard < 0 || test_records < 0)
        throw ValueError("make_synth_config: counts must be >= 0");
    if (skew < 0.0 || skew > 1.0) throw ValueError("make_synth_config: skew must be in [0,1]");

    SynthConfig cfg;
    cfg.seed = seed;
    for (int s = 0; s < 8; ++s) {
        const int dominant = s % kNumClasses;
        const double dom_frac = 0.25 + 0.75 * skew;
        const int dom = static_cast<int>(std::lround(records_per_shard * dom_frac));
        const int rest = records_per_shard - dom;
        for (int c = 0; c < kNumClasses; ++c) cfg.counts[s][c] = rest / 3;
        cfg.counts[s][dominant] = dom;
        // put rounding leftovers on the dominant class
        int assigned = 0;
        for (int c = 0; c < kNumClasses; ++c) assigned += cfg.counts[s][c];
        cfg.counts[s][dominant] += records_per_shard - assigned;
    }
    for (int c = 0; c < kNumClasses; ++c) cfg.counts[8][c] = test_records / kNumClasses;
    cfg.counts[8][0] += test_records - (test_records / kNumClasses) * kNumClasses;
    return cfg;
}

std::vector<double> synth_rr_intervals(RhythmLabel label, const SynthConfig& cfg, SeededRng& rng,
                                       int count) {
    std::vector<double> rr(static_cast<std::size_t>(count));
    for (auto& v : rr) {
        const double u = rng.uniform(-1.0, 1.0);
        switch (label) {
            case RhythmLabel::AFIB:
                v = cfg.rr_mean_s * (1.0 + cfg.afib_rr_band * u);
                break;
            default:
                v = cfg.rr_mean_s * (1.0 + cfg.rr_jitter * u);
                break;
        }
    }
    return rr;
}

namespace {

void add_gaussian(std::vector<float>& x, double center_s, double sigma_s, double amp) {
    const double lo = center_s - 4 * sigma_s;
    const double hi = center_s + 4 * sigma_s;
    const int i_lo = std::max(0, static_cast<int>(std::floor(lo * kTargetHz)));
    const int i_hi = std::min(static_cast<int>(x.size()) - 1,
                              static_cast<int>(std::ceil(hi * kTargetHz)));
    for (int i = i_lo; i <= i_hi; ++i) {
        const double t = static_cast<double>(i) / kTargetHz - center_s;
        x[static_cast<std::size_t>(i)] +=
            static_cast<float>(amp * std::exp(-0.5 * (t / sigma_s) * (t / sigma_s)));
    }
}

}  // namespace

EcgRecord synth_record(const SynthConfig& cfg, RhythmLabel label, int shard_idx, int record_idx) {
    SeededRng rng(derive_seed(cfg.seed, "synth", static_cast<std::uint64_t>(shard_idx),
                              static_cast<std::uint64_t>(record_idx)));
    const int n = static_cast<int>(std::lround(cfg.duration_s * kTargetHz));
    EcgRecord rec;
    rec.fs = kTargetHz;
    rec.label = label;
    rec.samples.assign(static_cast<std::size_t>(n), 0.0f);

    // Per-record morphology, drawn before anything else so one record's
    // waveform never depends on another. The spread is what keeps small
    // shards from covering a class with a handful of examples.
    const double rate_scale = 1.0 + 0.35 * rng.uniform(-1.0, 1.0);
    const double p_amp = 0.22 * (1.0 + 0.4 * rng.uniform(-1.0, 1.0));
    const double t_amp = 0.35 * (1.0 + 0.4 * rng.uniform(-1.0, 1.0));
    const double qrs_w = 0.025 * (1.0 + 0.3 * rng.uniform(-1.0, 1.0));
    const double p_w = 0.05 * (1.0 + 0.3 * rng.uniform(-1.0, 1.0));
    const double t_w = 0.09 * (1.0 + 0.3 * rng.uniform(-1.0, 1.0));
    const double wander_amp = 0.15 * rng.uniform(0.3, 1.2);
    const double wander_freq = rng.uniform(0.15, 0.6);
    const double wander_phase = rng.uniform(0.0, 2.0 * M_PI);
    const double noise_scale = rng.uniform(0.5, 1.5);

    if (label == RhythmLabel::NOISE) {
        // band-limited noise: a bank of random sinusoids, no beat structure
        const int bank = 40;
        for (int b = 0; b < bank; ++b) {
            const double freq = rng.uniform(0.5, 40.0);
            const double amp = rng.uniform(0.05, 0.30);
            const double phase = rng.uniform(0.0, 2.0 * M_PI);
            for (int i = 0; i < n; ++i)
                rec.samples[static_cast<std::size_t>(i)] += static_cast<float>(
                    amp * std::sin(2.0 * M_PI * freq * i / kTargetHz + phase));
        }
    } else {
        const int max_beats =
            static_cast<int>(cfg.duration_s /
                             (cfg.rr_mean_s * 0.65 * (1.0 - cfg.afib_rr_band))) + 3;
        std::vector<double> rr = synth_rr_intervals(label, cfg, rng, max_beats);
        for (auto& v : rr) v *= rate_scale;

        double onset = rr[0] * 0.5;
        for (int beat = 0; onset < cfg.duration_s && beat < max_beats; ++beat) {
            const double rr_here = rr[static_cast<std::size_t>(beat)];
            const bool ectopic = label == RhythmLabel::OTHER && beat % 3 == 2;
            if (ectopic) {
                // early, inverted, wide QRS without a P wave
                add_gaussian(rec.samples, onset, 2.0 * qrs_w * rr_here, -1.0);
            } else {
                if (label != RhythmLabel::AFIB)
                    add_gaussian(rec.samples, onset - 0.25 * rr_here, p_w * rr_here, p_amp);
                add_gaussian(rec.samples, onset, qrs_w * rr_here, 1.0);
                add_gaussian(rec.samples, onset + 0.35 * rr_here, t_w * rr_here, t_amp);
            }
            const double next_rr = rr[static_cast<std::size_t>((beat + 1) % max_beats)];
            const bool next_ectopic = label == RhythmLabel::OTHER && (beat + 1) % 3 == 2;
            onset += next_ectopic ? 0.65 * next_rr : next_rr;
        }
        if (label == RhythmLabel::AFIB) {
            // fibrillatory baseline wiggle
            for (int w = 0; w < 3; ++w) {
                const double freq = rng.uniform(4.5, 8.5);
                const double phase = rng.uniform(0.0, 2.0 * M_PI);
                for (int i = 0; i < n; ++i)
                    rec.samples[static_cast<std::size_t>(i)] += static_cast<float>(
                        0.06 * std::sin(2.0 * M_PI * freq * i / kTargetHz + phase));
            }
        }
        // slow baseline wander on every beat-bearing class
        for (int i = 0; i < n; ++i)
            rec.samples[static_cast<std::size_t>(i)] += static_cast<float>(
                wander_amp * std::sin(2.0 * M_PI * wander_freq * i / kTargetHz + wander_phase));
    }

    for (auto& v : rec.samples)
        v += static_cast<float>(noise_scale *
                                rng.uniform(-cfg.noise_amplitude, cfg.noise_amplitude));
    normalize_amplitude(rec.samples);
    return rec;
}

std::vector<std::pair<EcgRecord, std::string>> synth_generate(const SynthConfig& cfg) {
    std::vector<std::pair<EcgRecord, std::string>> out;
    const auto names = shard_names();
    for (int s = 0; s < 9; ++s) {
        int idx = 0;
        for (int c = 0; c < kNumClasses; ++c) {
            for (int r = 0; r < cfg.counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)];
                 ++r, ++idx) {
                EcgRecord rec = synth_record(cfg, static_cast<RhythmLabel>(c), s, idx);
                char id[32];
                std::snprintf(id, sizeof(id), "%s_%04d", names[static_cast<std::size_t>(s)].c_str(),
                              idx);
                rec.id = id;
                out.emplace_back(std::move(rec), names[static_cast<std::size_t>(s)]);
            }
        }
    }
    return out;
}

}  // namespace fedecg::data
