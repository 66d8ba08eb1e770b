#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvt/synth.hpp"

namespace pvt {

struct GenConfig {
    int n_positive = 2000;
    int n_negative = 600;  // keeps the 3.5:1 ratio
    int payload_vocab = 100;
    int negative_vocab = 40;
    double zipf_s = 1.5;
    double confusable_fraction = 0.5;
    // Of the confusables, this fraction carry the trigger sequence verbatim
    // (an accidental trigger followed by speech not meant for the assistant);
    // only the continuation separates them from positives.
    double verbatim_fraction = 0.5;
    double snr_min_db = 14.0;
    double snr_max_db = 30.0;
    double negative_timeline_hours = 2.0;
    double timeline_chunk_s = 600.0;
    double timeline_gap_min_s = 4.0;
    double timeline_gap_max_s = 10.0;
    double test_fraction = 0.2;
    std::uint64_t seed = 1234;
    SynthConfig synth;
};

struct ManifestEntry {
    int id = 0;
    std::string wav;  // path relative to the corpus dir
    bool positive = false;
    bool confusable = false;
    bool verbatim = false;  // confusable with an untouched trigger prefix
    std::string split;  // "train" or "test"
    double snr_db = 0.0;
    double duration_s = 0.0;
    double trigger_end = -1.0;  // < 0 = absent (negatives)
    // Annotation-sourced candidate span handed to the scorer.
    double candidate_start = 0.0;
    double candidate_end = 0.0;
    std::vector<int> phones;
    std::vector<double> phone_starts, phone_ends;
    std::vector<int> payload_words;
    std::uint64_t seed = 0;
};

struct TimelineChunk {
    std::string wav;
    double duration_s = 0.0;
    int n_bursts = 0;
};

struct CorpusManifest {
    std::vector<ManifestEntry> entries;
    std::vector<TimelineChunk> timeline;
    double negative_timeline_hours = 0.0;
    std::vector<int> trigger_phones;  // canonical sequence, boundaries included
    GenConfig gen;
};

// Canonical trigger phone sequence for the default alphabet.
std::vector<int> trigger_sequence(const PhoneAlphabet& alphabet);

// Writes wav/, timeline/, manifest.jsonl, timeline.jsonl, gen_config.json.
// Deterministic in cfg.seed; per-utterance seeds make parallel == serial.
CorpusManifest generate_corpus(const GenConfig& cfg, const std::string& out_dir);

// Reads back what generate_corpus wrote.
CorpusManifest load_manifest(const std::string& corpus_dir);

// Levenshtein distance over phone ids (confusable bookkeeping and tests).
int edit_distance(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace pvt
