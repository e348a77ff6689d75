#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fedecg/data/manifest.hpp"
#include "fedecg/data/synth.hpp"

using namespace fedecg;
using namespace fedecg::data;

TEST_CASE("resample keeps 200 Hz records untouched") {
    EcgRecord rec;
    rec.id = "r";
    rec.fs = 200;
    rec.samples = {1, 2, 3};
    auto out = resample_to_200(rec);
    CHECK(out.fs == 200);
    CHECK(out.samples == rec.samples);
}

TEST_CASE("30 s at 300 Hz becomes exactly 6000 samples") {
    EcgRecord rec;
    rec.id = "r";
    rec.fs = 300;
    rec.samples.assign(9000, 0.5f);
    auto out = resample_to_200(rec);
    CHECK(out.fs == 200);
    CHECK(out.samples.size() == 6000);
}

TEST_CASE("output length is round(len*2/3) across lengths") {
    for (const int len : {3, 4, 5, 7, 100, 101, 102, 8999, 9000, 9001}) {
        EcgRecord rec;
        rec.id = "r";
        rec.fs = 300;
        rec.samples.assign(static_cast<std::size_t>(len), 0.0f);
        const auto out = resample_to_200(rec);
        CHECK(static_cast<std::int64_t>(out.samples.size()) ==
              static_cast<std::int64_t>(std::llround(2.0 * len / 3.0)));
    }
}

TEST_CASE("DC is preserved away from the edges") {
    EcgRecord rec;
    rec.id = "r";
    rec.fs = 300;
    rec.samples.assign(3000, 0.75f);
    auto out = resample_to_200(rec);
    for (std::size_t i = 50; i + 50 < out.samples.size(); ++i)
        CHECK(std::abs(out.samples[i] - 0.75f) < 1e-4f);
}

TEST_CASE("a 5 Hz sinusoid resamples onto the analytic sinusoid") {
    const int n300 = 9000;  // 30 s
    EcgRecord rec;
    rec.id = "r";
    rec.fs = 300;
    rec.samples.resize(n300);
    for (int i = 0; i < n300; ++i)
        rec.samples[static_cast<std::size_t>(i)] =
            static_cast<float>(std::sin(2.0 * M_PI * 5.0 * i / 300.0));
    auto out = resample_to_200(rec);
    REQUIRE(out.samples.size() == 6000);
    double worst = 0;
    for (std::size_t m = 200; m + 200 < out.samples.size(); ++m) {
        const double expect = std::sin(2.0 * M_PI * 5.0 * static_cast<double>(m) / 200.0);
        worst = std::max(worst, std::abs(out.samples[m] - expect));
    }
    CHECK(worst < 0.01);
}

TEST_CASE("unsupported sample rates are rejected") {
    EcgRecord rec;
    rec.id = "bad";
    rec.fs = 250;
    rec.samples = {1.0f};
    CHECK_THROWS_AS(resample_to_200(rec), IngestError);
}

TEST_CASE("fix_length pads symmetrically with the extra zero on the right") {
    std::vector<float> sig(4000, 1.0f);
    auto out = fix_length(sig);
    REQUIRE(out.size() == 6000);
    for (int i = 0; i < 1000; ++i) CHECK(out[static_cast<std::size_t>(i)] == 0.0f);
    for (int i = 1000; i < 5000; ++i) CHECK(out[static_cast<std::size_t>(i)] == 1.0f);
    for (int i = 5000; i < 6000; ++i) CHECK(out[static_cast<std::size_t>(i)] == 0.0f);

    // odd pad: 5 -> 8 puts 1 zero left, 2 right
    auto odd = fix_length({1, 1, 1, 1, 1}, 8);
    CHECK(odd[0] == 0.0f);
    CHECK(odd[1] == 1.0f);
    CHECK(odd[5] == 1.0f);
    CHECK(odd[6] == 0.0f);
    CHECK(odd[7] == 0.0f);
}

TEST_CASE("fix_length is the identity at the target length") {
    std::vector<float> sig(6000);
    for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = static_cast<float>(i);
    auto out = fix_length(sig);
    CHECK(out == sig);
}

TEST_CASE("fix_length trims centrally with the extra cut on the left") {
    std::vector<float> sig(7001);
    for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = static_cast<float>(i);
    auto out = fix_length(sig);
    REQUIRE(out.size() == 6000);
    CHECK(out.front() == 501.0f);
    CHECK(out.back() == 6500.0f);
}

TEST_CASE("every emitted window has exactly the target length") {
    SeededRng rng(60);
    for (int trial = 0; trial < 1000; ++trial) {
        const int len = 100 + static_cast<int>(rng.next_below(19901));
        EcgRecord rec;
        rec.id = "t";
        rec.fs = rng.next_below(2) ? 300 : 200;
        rec.samples.resize(static_cast<std::size_t>(len));
        for (auto& v : rec.samples) v = static_cast<float>(rng.uniform(-1, 1));
        const auto w = make_window(rec);
        CHECK(w.samples.size() == 6000);
    }
}

TEST_CASE("pipeline is idempotent on already-conformant records") {
    SeededRng rng(61);
    EcgRecord rec;
    rec.id = "t";
    rec.fs = 200;
    rec.samples.resize(6000);
    for (auto& v : rec.samples) v = static_cast<float>(rng.uniform(-1, 1));
    const auto w1 = make_window(rec);
    EcgRecord again;
    again.id = "t";
    again.fs = 200;
    again.samples = w1.samples;
    const auto w2 = make_window(again);
    CHECK(w1.samples == w2.samples);
}

TEST_CASE("amplitude normalization bounds records to [-1,1]") {
    std::vector<float> sig = {3.0f, -6.0f, 1.5f};
    normalize_amplitude(sig);
    CHECK(sig[0] == doctest::Approx(0.5));
    CHECK(sig[1] == doctest::Approx(-1.0));
    std::vector<float> zero(5, 0.0f);
    normalize_amplitude(zero);
    for (auto v : zero) CHECK(v == 0.0f);
}

TEST_CASE("partition distributes by assignment and rejects bad assignments") {
    std::vector<EcgRecord> records;
    std::map<std::string, std::string> assignment;
    for (int i = 0; i < 6; ++i) {
        EcgRecord r;
        r.id = "rec" + std::to_string(i);
        r.fs = 200;
        r.samples.assign(100, 0.5f);
        r.label = static_cast<RhythmLabel>(i % 4);
        records.push_back(r);
        assignment[r.id] = i < 4 ? ("c" + std::to_string(i)) : "test";
    }
    auto shards = partition_shards(records, assignment, 128);
    CHECK(shards.at("c0").windows.size() == 1);
    CHECK(shards.at("test").windows.size() == 2);
    CHECK(shards.at("c7").windows.empty());

    // histogram sums equal shard sizes
    std::size_t total = 0;
    for (const auto& [name, shard] : shards) {
        std::int64_t sum = 0;
        for (const auto c : shard.class_histogram()) sum += c;
        CHECK(sum == static_cast<std::int64_t>(shard.windows.size()));
        total += shard.windows.size();
    }
    CHECK(total == records.size());

    SUBCASE("unassigned record") {
        records.push_back(records[0]);
        records.back().id = "orphan";
        CHECK_THROWS_AS(partition_shards(records, assignment, 128), IngestError);
    }
    SUBCASE("duplicate record id") {
        records.push_back(records[0]);
        CHECK_THROWS_AS(partition_shards(records, assignment, 128), IngestError);
    }
    SUBCASE("invalid shard name") {
        assignment["rec0"] = "c9";
        CHECK_THROWS_AS(partition_shards(records, assignment, 128), IngestError);
    }
}

TEST_CASE("synth datasets are bit-identical per seed and honor the counts") {
    SynthConfig cfg = make_synth_config(8, 12, 0.5, 99);
    cfg.duration_s = 2.0;
    auto a = synth_generate(cfg);
    auto b = synth_generate(cfg);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() == 8 * 8 + 12);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first.id == b[i].first.id);
        CHECK(a[i].first.samples == b[i].first.samples);
    }

    // histogram matches requested counts exactly
    std::array<std::array<int, 4>, 9> got{};
    const auto names = shard_names();
    for (const auto& [rec, shard] : a) {
        const auto it = std::find(names.begin(), names.end(), shard);
        got[static_cast<std::size_t>(it - names.begin())]
           [static_cast<std::size_t>(rec.label)] += 1;
    }
    for (int s = 0; s < 9; ++s)
        for (int c = 0; c < 4; ++c)
            CHECK(got[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] ==
                  cfg.counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)]);
}

TEST_CASE("different seeds give different signals") {
    SynthConfig a = make_synth_config(2, 0, 0.0, 1);
    SynthConfig b = make_synth_config(2, 0, 0.0, 2);
    a.duration_s = b.duration_s = 1.0;
    CHECK(synth_generate(a)[0].first.samples != synth_generate(b)[0].first.samples);
}

TEST_CASE("AFIB RR variability dwarfs sinus variability") {
    SynthConfig cfg;
    cfg.seed = 7;
    SeededRng rng_a(1), rng_s(2);
    auto rr_afib = synth_rr_intervals(RhythmLabel::AFIB, cfg, rng_a, 1000);
    auto rr_sinus = synth_rr_intervals(RhythmLabel::SINUS, cfg, rng_s, 1000);
    auto cv = [](const std::vector<double>& rr) {
        double mean = 0;
        for (const double v : rr) mean += v;
        mean /= static_cast<double>(rr.size());
        double var = 0;
        for (const double v : rr) var += (v - mean) * (v - mean);
        var /= static_cast<double>(rr.size());
        return std::sqrt(var) / mean;
    };
    CHECK(cv(rr_afib) > 3.0 * cv(rr_sinus));
}

TEST_CASE("synthetic records are normalized and the right length") {
    SynthConfig cfg = make_synth_config(1, 0, 0.0, 5);
    cfg.duration_s = 1.28;
    for (int c = 0; c < 4; ++c) {
        auto rec = synth_record(cfg, static_cast<RhythmLabel>(c), 0, c);
        CHECK(rec.samples.size() == 256);
        float peak = 0;
        for (auto v : rec.samples) peak = std::max(peak, std::abs(v));
        CHECK(peak == doctest::Approx(1.0f));
    }
}

TEST_CASE("skewed counts favor the shard's dominant class") {
    const SynthConfig cfg = make_synth_config(100, 40, 0.8, 1);
    // shard 0 dominates SINUS: 0.25 + 0.75*0.8 = 0.85
    CHECK(cfg.counts[0][0] >= 84);
    int total = 0;
    for (int c = 0; c < 4; ++c) total += cfg.counts[0][static_cast<std::size_t>(c)];
    CHECK(total == 100);
    // test shard balanced
    for (int c = 0; c < 4; ++c) CHECK(cfg.counts[8][static_cast<std::size_t>(c)] == 10);
}

TEST_CASE("dataset round-trips through manifest and raw files bit-exactly") {
    SynthConfig cfg = make_synth_config(3, 4, 0.3, 123);
    cfg.duration_s = 1.0;
    const auto records = synth_generate(cfg);

    const std::string dir = "manifest_roundtrip_test";
    std::filesystem::remove_all(dir);
    write_dataset(dir, records);
    const auto loaded = load_manifest(dir + "/manifest.csv");
    REQUIRE(loaded.records.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded.records[i].id == records[i].first.id);
        CHECK(loaded.records[i].fs == records[i].first.fs);
        CHECK(loaded.records[i].label == records[i].first.label);
        CHECK(loaded.records[i].samples == records[i].first.samples);
        CHECK(loaded.shard_assignment.at(records[i].first.id) == records[i].second);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest ingest errors name the offending record") {
    const std::string dir = "manifest_errors_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_f32_file(dir + "/ok.f32", {0.1f, 0.2f});

    auto write_manifest = [&](const std::string& body) {
        std::ofstream out(dir + "/manifest.csv", std::ios::trunc);
        out << "record_id,path,fs,label,shard\n" << body;
    };

    SUBCASE("unknown label") {
        write_manifest("rec1,ok.f32,200,X,c0\n");
        try {
            load_manifest(dir + "/manifest.csv");
            FAIL("expected IngestError");
        } catch (const IngestError& e) {
            CHECK(std::string(e.what()).find("rec1") != std::string::npos);
        }
    }
    SUBCASE("missing signal file") {
        write_manifest("rec2,missing.f32,200,SINUS,c0\n");
        try {
            load_manifest(dir + "/manifest.csv");
            FAIL("expected IngestError");
        } catch (const IngestError& e) {
            CHECK(std::string(e.what()).find("rec2") != std::string::npos);
        }
    }
    SUBCASE("bad header") {
        std::ofstream out(dir + "/manifest.csv", std::ios::trunc);
        out << "id,path\n";
        out.close();
        CHECK_THROWS_AS(load_manifest(dir + "/manifest.csv"), IngestError);
    }
    SUBCASE("bad sample rate") {
        write_manifest("rec3,ok.f32,123,SINUS,c0\n");
        CHECK_THROWS_AS(load_manifest(dir + "/manifest.csv"), IngestError);
    }
    SUBCASE("valid manifest loads") {
        write_manifest("rec1,ok.f32,200,SINUS,c0\nrec2,ok.f32,300,AFIB,test\n");
        const auto ds = load_manifest(dir + "/manifest.csv");
        CHECK(ds.records.size() == 2);
        CHECK(ds.records[1].label == RhythmLabel::AFIB);
    }
    std::filesystem::remove_all(dir);
}
