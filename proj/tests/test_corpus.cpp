#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pvt/corpus.hpp"
#include "pvt/error.hpp"

using namespace pvt;

namespace {

GenConfig tiny_config(std::uint64_t seed) {
    GenConfig cfg;
    cfg.n_positive = 24;
    cfg.n_negative = 12;
    cfg.negative_timeline_hours = 60.0 / 3600.0;  // one minute
    cfg.seed = seed;
    return cfg;
}

std::string fresh_dir(const char* name) {
    const std::string dir = std::string("/tmp/pvt_corpus_") + name;
    std::filesystem::remove_all(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("edit_distance basics") {
    CHECK(edit_distance({1, 2, 3}, {1, 2, 3}) == 0);
    CHECK(edit_distance({}, {1, 2, 3}) == 3);
    CHECK(edit_distance({1, 2, 3}, {}) == 3);
    CHECK(edit_distance({1, 2, 3}, {1, 9, 3}) == 1);       // substitution
    CHECK(edit_distance({1, 2, 3}, {1, 3}) == 1);          // deletion
    CHECK(edit_distance({1, 2, 3}, {1, 2, 4, 3}) == 1);    // insertion
    CHECK(edit_distance({5, 5, 5}, {6, 6}) == 3);
}

TEST_CASE("trigger sequence shape") {
    const auto a = PhoneAlphabet::default_alphabet();
    const auto trig = trigger_sequence(a);
    REQUIRE(trig.size() == 8);
    CHECK(trig[3] == a.word_boundary());
    for (std::size_t i = 0; i < trig.size(); ++i)
        if (i != 3) CHECK_FALSE(a.phones[trig[i]].silent);
}

TEST_CASE("generate_corpus produces validated entries") {
    const auto dir = fresh_dir("basic");
    const auto cfg = tiny_config(77);
    const auto m = generate_corpus(cfg, dir);
    const auto a = PhoneAlphabet::default_alphabet();
    const auto trig = trigger_sequence(a);

    REQUIRE(static_cast<int>(m.entries.size()) == cfg.n_positive + cfg.n_negative);
    CHECK(m.trigger_phones == trig);

    int positives = 0;
    for (const auto& e : m.entries) {
        CHECK((e.split == "train" || e.split == "test"));
        CHECK(e.duration_s > 0.2);
        REQUIRE_FALSE(e.phones.empty());
        REQUIRE(e.phone_starts.size() == e.phones.size());
        REQUIRE(e.phone_ends.size() == e.phones.size());
        CHECK(e.candidate_start >= 0.0);
        CHECK(e.candidate_start < e.candidate_end);
        CHECK(e.candidate_end <= e.duration_s + 1e-9);
        CHECK(std::filesystem::exists(dir + "/" + e.wav));
        if (e.positive) {
            ++positives;
            // the trigger prefix is the canonical sequence and trigger_end
            // matches the realized end of its last symbol
            REQUIRE(e.phones.size() >= trig.size());
            CHECK(std::equal(trig.begin(), trig.end(), e.phones.begin()));
            CHECK(e.trigger_end == doctest::Approx(e.phone_ends[trig.size() - 1]).epsilon(1e-12));
            CHECK(e.payload_words.size() >= 4);
            CHECK(e.payload_words.size() <= 7);
        } else {
            CHECK(e.trigger_end < 0.0);
        }
    }
    CHECK(positives == cfg.n_positive);
}

TEST_CASE("negatives keep their distance from the trigger") {
    const auto dir = fresh_dir("negdist");
    auto cfg = tiny_config(78);
    cfg.confusable_fraction = 0.0;
    const auto m = generate_corpus(cfg, dir);
    const auto trig = trigger_sequence(PhoneAlphabet::default_alphabet());
    for (const auto& e : m.entries) {
        if (e.positive) continue;
        CHECK_FALSE(e.confusable);
        CHECK(edit_distance(e.phones, trig) > 2);
    }
}

TEST_CASE("confusables corrupt the trigger prefix by 1-2 phones") {
    const auto dir = fresh_dir("confus");
    auto cfg = tiny_config(79);
    cfg.confusable_fraction = 1.0;
    cfg.verbatim_fraction = 0.0;
    const auto m = generate_corpus(cfg, dir);
    const auto trig = trigger_sequence(PhoneAlphabet::default_alphabet());
    int seen = 0;
    for (const auto& e : m.entries) {
        if (e.positive) continue;
        REQUIRE(e.confusable);
        CHECK_FALSE(e.verbatim);
        REQUIRE(e.phones.size() >= trig.size());
        const std::vector<int> prefix(e.phones.begin(), e.phones.begin() + trig.size());
        const int d = edit_distance(prefix, trig);
        CHECK(d >= 1);
        CHECK(d <= 2);
        ++seen;
    }
    CHECK(seen == cfg.n_negative);
}

TEST_CASE("verbatim confusables keep the trigger and differ only after it") {
    const auto dir = fresh_dir("verbatim");
    auto cfg = tiny_config(82);
    cfg.confusable_fraction = 1.0;
    cfg.verbatim_fraction = 1.0;
    const auto m = generate_corpus(cfg, dir);
    const auto trig = trigger_sequence(PhoneAlphabet::default_alphabet());
    for (const auto& e : m.entries) {
        if (e.positive) continue;
        REQUIRE(e.confusable);
        REQUIRE(e.verbatim);
        REQUIRE(e.phones.size() > trig.size());  // 4-7 tail words follow
        const std::vector<int> prefix(e.phones.begin(), e.phones.begin() + trig.size());
        CHECK(edit_distance(prefix, trig) == 0);
        CHECK(e.trigger_end < 0.0);  // still a negative
    }
}

TEST_CASE("timeline covers the requested hours") {
    const auto dir = fresh_dir("timeline");
    const auto cfg = tiny_config(80);
    const auto m = generate_corpus(cfg, dir);
    REQUIRE_FALSE(m.timeline.empty());
    double total = 0.0;
    int bursts = 0;
    for (const auto& c : m.timeline) {
        CHECK(std::filesystem::exists(dir + "/" + c.wav));
        total += c.duration_s;
        bursts += c.n_bursts;
    }
    CHECK(total / 3600.0 == doctest::Approx(m.negative_timeline_hours));
    CHECK(total >= cfg.negative_timeline_hours * 3600.0 - 1.0);
    CHECK(bursts > 0);  // a one-minute chunk fits several bursts
}

TEST_CASE("manifest round-trips through load_manifest") {
    const auto dir = fresh_dir("roundtrip");
    const auto cfg = tiny_config(81);
    const auto written = generate_corpus(cfg, dir);
    const auto loaded = load_manifest(dir);

    REQUIRE(loaded.entries.size() == written.entries.size());
    for (std::size_t i = 0; i < written.entries.size(); ++i) {
        const auto& w = written.entries[i];
        const auto& l = loaded.entries[i];
        CHECK(l.id == w.id);
        CHECK(l.wav == w.wav);
        CHECK(l.positive == w.positive);
        CHECK(l.confusable == w.confusable);
        CHECK(l.verbatim == w.verbatim);
        CHECK(l.split == w.split);
        CHECK(l.snr_db == w.snr_db);
        CHECK(l.duration_s == w.duration_s);
        CHECK(l.trigger_end == w.trigger_end);
        CHECK(l.candidate_start == w.candidate_start);
        CHECK(l.candidate_end == w.candidate_end);
        CHECK(l.phones == w.phones);
        CHECK(l.phone_starts == w.phone_starts);
        CHECK(l.phone_ends == w.phone_ends);
        CHECK(l.payload_words == w.payload_words);
        CHECK(l.seed == w.seed);
    }
    REQUIRE(loaded.timeline.size() == written.timeline.size());
    CHECK(loaded.negative_timeline_hours == written.negative_timeline_hours);
    CHECK(loaded.trigger_phones == written.trigger_phones);
}

TEST_CASE("regeneration with the same seed is byte-identical") {
    const auto d1 = fresh_dir("regen1");
    const auto d2 = fresh_dir("regen2");
    const auto cfg = tiny_config(82);
    generate_corpus(cfg, d1);
    generate_corpus(cfg, d2);
    CHECK(slurp(d1 + "/manifest.jsonl") == slurp(d2 + "/manifest.jsonl"));
    CHECK(slurp(d1 + "/timeline.jsonl") == slurp(d2 + "/timeline.jsonl"));
    CHECK(slurp(d1 + "/gen_config.json") == slurp(d2 + "/gen_config.json"));
    CHECK(slurp(d1 + "/wav/utt_00000.wav") == slurp(d2 + "/wav/utt_00000.wav"));
    CHECK(slurp(d1 + "/wav/utt_00030.wav") == slurp(d2 + "/wav/utt_00030.wav"));
    CHECK(slurp(d1 + "/timeline/chunk_000.wav") == slurp(d2 + "/timeline/chunk_000.wav"));
}

TEST_CASE("different seeds change the corpus") {
    const auto d1 = fresh_dir("seeda");
    const auto d2 = fresh_dir("seedb");
    generate_corpus(tiny_config(83), d1);
    generate_corpus(tiny_config(84), d2);
    CHECK(slurp(d1 + "/wav/utt_00000.wav") != slurp(d2 + "/wav/utt_00000.wav"));
}

TEST_CASE("test_fraction zero puts everything in train") {
    const auto dir = fresh_dir("alltrain");
    auto cfg = tiny_config(85);
    cfg.test_fraction = 0.0;
    const auto m = generate_corpus(cfg, dir);
    for (const auto& e : m.entries) CHECK(e.split == "train");
}

TEST_CASE("generate_corpus rejects empty counts") {
    auto cfg = tiny_config(86);
    cfg.n_positive = 0;
    CHECK_THROWS_AS(generate_corpus(cfg, "/tmp/pvt_corpus_invalid"), DataError);
}

TEST_CASE("load_manifest errors name the missing piece") {
    CHECK_THROWS_WITH_AS(load_manifest("/tmp/pvt_corpus_missing_dir"),
                         doctest::Contains("/tmp/pvt_corpus_missing_dir"), DataError);
}
