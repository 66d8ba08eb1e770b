#include "pvt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pvt/error.hpp"
#include "pvt/parallel.hpp"
#include "pvt/rng.hpp"

namespace pvt {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Phones that may appear inside vocabulary words (everything but boundaries).
std::vector<int> speech_phones(const PhoneAlphabet& a) {
    std::vector<int> ids;
    for (int i = 0; i < a.size(); ++i)
        if (!a.phones[i].silent) ids.push_back(i);
    return ids;
}

// Substitution groups: a confusable swaps a trigger phone for a spectrally
// similar one, so the corrupted prefix stays hard to reject early.
const std::vector<std::vector<const char*>>& confusion_groups() {
    static const std::vector<std::vector<const char*>> groups = {
        {"aa", "ae", "ah", "ao", "eh", "ih", "iy", "uw"},
        {"m", "n", "l", "r", "w", "y"},
        {"s", "sh", "f", "hh"},
        {"t", "k"},
    };
    return groups;
}

std::vector<int> similar_phones(const PhoneAlphabet& a, int phone) {
    const std::string& name = a.phones[phone].name;
    for (const auto& group : confusion_groups()) {
        bool member = false;
        for (const char* g : group) member |= name == g;
        if (!member) continue;
        std::vector<int> out;
        for (const char* g : group)
            if (name != g) out.push_back(a.find(g));
        return out;
    }
    return {};
}

using Word = std::vector<int>;

Word random_word(Rng& rng, const std::vector<int>& pool) {
    Word w(rng.uniform_int(2, 4));
    for (auto& p : w) p = pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)];
    return w;
}

// Deterministic vocabularies; negative words never collide with positive
// words or trigger words.
struct WordTables {
    std::vector<Word> payload, negative;
};

WordTables build_word_tables(const GenConfig& cfg, const PhoneAlphabet& alphabet,
                             const std::vector<int>& trigger) {
    const auto pool = speech_phones(alphabet);
    WordTables t;
    {
        Rng rng(derive_seed(cfg.seed, "payload-vocab"));
        for (int i = 0; i < cfg.payload_vocab; ++i) {
            Word w = random_word(rng, pool);
            while (std::find(t.payload.begin(), t.payload.end(), w) != t.payload.end())
                w = random_word(rng, pool);
            t.payload.push_back(std::move(w));
        }
    }
    {
        Rng rng(derive_seed(cfg.seed, "negative-vocab"));
        auto clashes = [&](const Word& w) {
            if (std::find(t.payload.begin(), t.payload.end(), w) != t.payload.end()) return true;
            if (std::find(t.negative.begin(), t.negative.end(), w) != t.negative.end())
                return true;
            // no word may be a contiguous slice of the trigger sequence
            if (w.size() <= trigger.size())
                for (std::size_t at = 0; at + w.size() <= trigger.size(); ++at)
                    if (std::equal(w.begin(), w.end(), trigger.begin() + at)) return true;
            return false;
        };
        for (int i = 0; i < cfg.negative_vocab; ++i) {
            Word w = random_word(rng, pool);
            while (clashes(w)) w = random_word(rng, pool);
            t.negative.push_back(std::move(w));
        }
    }
    return t;
}

void append_word(std::vector<int>& seq, const Word& w, int wb) {
    if (!seq.empty()) seq.push_back(wb);
    seq.insert(seq.end(), w.begin(), w.end());
}

// Positive: trigger, then payload words, then a closing sentence gap.
std::vector<int> positive_sequence(const std::vector<int>& trigger,
                                   const std::vector<int>& payload_words, const WordTables& tables,
                                   const PhoneAlphabet& alphabet) {
    std::vector<int> seq = trigger;
    for (int w : payload_words) append_word(seq, tables.payload[w], alphabet.word_boundary());
    seq.push_back(alphabet.sentence_boundary());
    return seq;
}

struct NegativeDraw {
    std::vector<int> seq;
    bool confusable = false;
    bool verbatim = false;
};

NegativeDraw negative_sequence(Rng& rng, const GenConfig& cfg, const std::vector<int>& trigger,
                               const WordTables& tables, const PhoneAlphabet& alphabet) {
    NegativeDraw out;
    out.confusable = rng.uniform() < cfg.confusable_fraction;
    const int wb = alphabet.word_boundary();
    if (out.confusable) {
        out.verbatim = rng.uniform() < cfg.verbatim_fraction;
        out.seq = trigger;
        if (out.verbatim) {
            // accidental trigger: exact phrase, then payload-length speech
            // from the negative vocabulary; the prefix carries no signal
            const int tail_words = rng.uniform_int(4, 7);
            for (int w = 0; w < tail_words; ++w)
                append_word(out.seq, tables.negative[rng.uniform_int(0, cfg.negative_vocab - 1)],
                            wb);
        } else {
            // corrupt 1-2 speech phones of the trigger, then 0-3 negative words
            std::vector<int> speech_pos;
            for (std::size_t i = 0; i < trigger.size(); ++i)
                if (!alphabet.phones[trigger[i]].silent) speech_pos.push_back(static_cast<int>(i));
            const int subs = rng.uniform_int(1, 2);
            for (int s = 0; s < subs; ++s) {
                const int at =
                    speech_pos[rng.uniform_int(0, static_cast<int>(speech_pos.size()) - 1)];
                const auto sims = similar_phones(alphabet, trigger[at]);
                if (!sims.empty())
                    out.seq[at] = sims[rng.uniform_int(0, static_cast<int>(sims.size()) - 1)];
            }
            const int tail_words = rng.uniform_int(0, 3);
            for (int w = 0; w < tail_words; ++w)
                append_word(out.seq, tables.negative[rng.uniform_int(0, cfg.negative_vocab - 1)],
                            wb);
        }
    } else {
        // plain negative: 2-7 negative-vocabulary words; resample while the
        // realized sequence lands within edit distance 2 of the trigger
        do {
            out.seq.clear();
            const int words = rng.uniform_int(2, 7);
            for (int w = 0; w < words; ++w)
                append_word(out.seq, tables.negative[rng.uniform_int(0, cfg.negative_vocab - 1)],
                            wb);
        } while (edit_distance(out.seq, trigger) <= 2);
    }
    out.seq.push_back(alphabet.sentence_boundary());
    return out;
}

json entry_to_json(const ManifestEntry& e) {
    json j{{"id", e.id},
           {"wav", e.wav},
           {"label", e.positive ? "positive" : "negative"},
           {"confusable", e.confusable},
           {"verbatim", e.verbatim},
           {"split", e.split},
           {"snr_db", e.snr_db},
           {"duration_s", e.duration_s},
           {"candidate_start", e.candidate_start},
           {"candidate_end", e.candidate_end},
           {"phones", e.phones},
           {"phone_starts", e.phone_starts},
           {"phone_ends", e.phone_ends},
           {"payload_words", e.payload_words},
           {"seed", e.seed}};
    if (e.positive) j["trigger_end"] = e.trigger_end;
    return j;
}

ManifestEntry entry_from_json(const json& j) {
    ManifestEntry e;
    e.id = j.at("id");
    e.wav = j.at("wav");
    e.positive = j.at("label") == "positive";
    e.confusable = j.at("confusable");
    e.verbatim = j.at("verbatim");
    e.split = j.at("split");
    e.snr_db = j.at("snr_db");
    e.duration_s = j.at("duration_s");
    e.candidate_start = j.at("candidate_start");
    e.candidate_end = j.at("candidate_end");
    e.phones = j.at("phones").get<std::vector<int>>();
    e.phone_starts = j.at("phone_starts").get<std::vector<double>>();
    e.phone_ends = j.at("phone_ends").get<std::vector<double>>();
    e.payload_words = j.at("payload_words").get<std::vector<int>>();
    e.seed = j.at("seed");
    if (j.contains("trigger_end")) e.trigger_end = j.at("trigger_end");
    return e;
}

ManifestEntry make_entry(int id, const GenConfig& cfg, const PhoneAlphabet& alphabet,
                         const std::vector<int>& trigger, const WordTables& tables,
                         const std::string& out_dir) {
    const bool positive = id < cfg.n_positive;
    ManifestEntry e;
    e.id = id;
    e.positive = positive;
    e.seed = derive_seed(cfg.seed, "utt", static_cast<std::uint64_t>(id));
    Rng rng(derive_seed(cfg.seed, "spec", static_cast<std::uint64_t>(id)));

    UtteranceSpec spec;
    spec.snr_db = rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
    if (positive) {
        spec.positive = true;
        spec.trigger_phone_count = static_cast<int>(trigger.size());
        spec.payload_words = sample_payload(derive_seed(cfg.seed, "payload", id), cfg.zipf_s,
                                            cfg.payload_vocab);
        spec.phone_sequence = positive_sequence(trigger, spec.payload_words, tables, alphabet);
        e.payload_words = spec.payload_words;
    } else {
        const auto draw = negative_sequence(rng, cfg, trigger, tables, alphabet);
        spec.phone_sequence = draw.seq;
        e.confusable = draw.confusable;
        e.verbatim = draw.verbatim;
    }
    e.phones = spec.phone_sequence;
    e.snr_db = spec.snr_db;

    const auto r = synthesize_utterance(spec, alphabet, cfg.synth, e.seed);
    e.duration_s = r.audio.duration();
    e.phone_starts = r.phone_starts;
    e.phone_ends = r.phone_ends;
    if (positive) e.trigger_end = r.trigger_end;
    // Annotation candidate: the trigger span for positives; a trigger-length
    // prefix for negatives.
    e.candidate_start = r.phone_starts[0];
    const std::size_t last =
        std::min(trigger.size(), spec.phone_sequence.size()) - 1;
    e.candidate_end = positive ? e.trigger_end : r.phone_ends[last];

    char name[64];
    std::snprintf(name, sizeof(name), "wav/utt_%05d.wav", id);
    e.wav = name;
    write_wav(out_dir + "/" + e.wav, r.audio);
    e.split = derive_seed(cfg.seed, "split", id) % 1000 <
                      static_cast<std::uint64_t>(cfg.test_fraction * 1000.0)
                  ? "test"
                  : "train";
    return e;
}

TimelineChunk make_chunk(int chunk, double chunk_s, const GenConfig& cfg,
                         const PhoneAlphabet& alphabet, const std::vector<int>& trigger,
                         const WordTables& tables, const std::string& out_dir) {
    Rng rng(derive_seed(cfg.seed, "timeline", chunk));
    const int rate = cfg.synth.sample_rate;
    const auto n = static_cast<std::int64_t>(chunk_s * rate);
    std::vector<double> wave(static_cast<std::size_t>(n));
    const double floor_rms = std::pow(10.0, -50.0 / 20.0);  // -50 dBFS background
    for (auto& v : wave) v = floor_rms * rng.normal();

    int bursts = 0;
    std::int64_t cursor = std::llround(rng.uniform(cfg.timeline_gap_min_s, cfg.timeline_gap_max_s) *
                                       rate);
    while (true) {
        UtteranceSpec spec;
        spec.snr_db = rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
        const auto draw = negative_sequence(rng, cfg, trigger, tables, alphabet);
        spec.phone_sequence = draw.seq;
        const auto r = synthesize_utterance(
            spec, alphabet, cfg.synth,
            derive_seed(cfg.seed, "timeline-burst", (static_cast<std::uint64_t>(chunk) << 20) + bursts));
        const auto len = static_cast<std::int64_t>(r.audio.samples.size());
        if (cursor + len >= n) break;
        for (std::int64_t i = 0; i < len; ++i)
            wave[static_cast<std::size_t>(cursor + i)] += r.audio.samples[i] / 32768.0;
        ++bursts;
        cursor += len + std::llround(rng.uniform(cfg.timeline_gap_min_s, cfg.timeline_gap_max_s) *
                                     rate);
    }

    AudioBuffer audio;
    audio.sample_rate = rate;
    audio.samples.resize(wave.size());
    for (std::size_t i = 0; i < wave.size(); ++i)
        audio.samples[i] =
            static_cast<std::int16_t>(std::lround(std::clamp(wave[i], -0.999, 0.999) * 32767.0));

    TimelineChunk tc;
    char name[64];
    std::snprintf(name, sizeof(name), "timeline/chunk_%03d.wav", chunk);
    tc.wav = name;
    tc.duration_s = audio.duration();
    tc.n_bursts = bursts;
    write_wav(out_dir + "/" + tc.wav, audio);
    return tc;
}

}  // namespace

std::vector<int> trigger_sequence(const PhoneAlphabet& alphabet) {
    std::vector<int> seq;
    for (const char* name : {"hh", "eh", "y", "wb", "s", "ih", "r", "iy"}) {
        const int id = alphabet.find(name);
        if (id < 0) throw DataError(std::string("trigger phone missing from alphabet: ") + name);
        seq.push_back(id);
    }
    return seq;
}

int edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<int> row(m + 1);
    for (std::size_t j = 0; j <= m; ++j) row[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        int diag = row[0];
        row[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            const int next = std::min({row[j] + 1, row[j - 1] + 1,
                                       diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = row[j];
            row[j] = next;
        }
    }
    return row[m];
}

CorpusManifest generate_corpus(const GenConfig& cfg, const std::string& out_dir) {
    if (cfg.n_positive < 1 || cfg.n_negative < 1)
        throw DataError("generate_corpus: utterance counts must be positive");
    std::error_code ec;
    fs::create_directories(out_dir + "/wav", ec);
    fs::create_directories(out_dir + "/timeline", ec);
    if (ec) throw DataError("generate_corpus: cannot create " + out_dir + ": " + ec.message());

    const auto alphabet = PhoneAlphabet::default_alphabet();
    const auto trigger = trigger_sequence(alphabet);
    const auto tables = build_word_tables(cfg, alphabet, trigger);

    CorpusManifest m;
    m.gen = cfg;
    m.trigger_phones = trigger;
    const int total = cfg.n_positive + cfg.n_negative;
    m.entries.resize(total);
    parallel_for(total, [&](std::int64_t id) {
        m.entries[id] = make_entry(static_cast<int>(id), cfg, alphabet, trigger, tables, out_dir);
    });

    const double want_s = cfg.negative_timeline_hours * 3600.0;
    const int chunks = std::max(1, static_cast<int>(std::ceil(want_s / cfg.timeline_chunk_s)));
    m.timeline.resize(chunks);
    parallel_for(chunks, [&](std::int64_t c) {
        // last chunk covers only the remainder
        const double len = std::min(cfg.timeline_chunk_s, want_s - c * cfg.timeline_chunk_s);
        m.timeline[c] = make_chunk(static_cast<int>(c), std::max(len, 1.0), cfg, alphabet,
                                   trigger, tables, out_dir);
    });
    double total_s = 0.0;
    for (const auto& tc : m.timeline) total_s += tc.duration_s;
    m.negative_timeline_hours = total_s / 3600.0;

    {
        std::ofstream f(out_dir + "/manifest.jsonl");
        if (!f) throw DataError("cannot write " + out_dir + "/manifest.jsonl");
        for (const auto& e : m.entries) f << entry_to_json(e).dump() << "\n";
    }
    {
        std::ofstream f(out_dir + "/timeline.jsonl");
        if (!f) throw DataError("cannot write " + out_dir + "/timeline.jsonl");
        for (const auto& tc : m.timeline)
            f << json{{"wav", tc.wav}, {"duration_s", tc.duration_s}, {"n_bursts", tc.n_bursts}}
                     .dump()
              << "\n";
    }
    {
        json j{{"n_positive", cfg.n_positive},
               {"n_negative", cfg.n_negative},
               {"payload_vocab", cfg.payload_vocab},
               {"negative_vocab", cfg.negative_vocab},
               {"zipf_s", cfg.zipf_s},
               {"confusable_fraction", cfg.confusable_fraction},
               {"snr_min_db", cfg.snr_min_db},
               {"snr_max_db", cfg.snr_max_db},
               {"negative_timeline_hours", cfg.negative_timeline_hours},
               {"timeline_chunk_s", cfg.timeline_chunk_s},
               {"timeline_gap_min_s", cfg.timeline_gap_min_s},
               {"timeline_gap_max_s", cfg.timeline_gap_max_s},
               {"test_fraction", cfg.test_fraction},
               {"seed", cfg.seed},
               {"trigger_phones", trigger},
               {"realized_timeline_hours", m.negative_timeline_hours}};
        std::ofstream f(out_dir + "/gen_config.json");
        if (!f) throw DataError("cannot write " + out_dir + "/gen_config.json");
        f << j.dump(2) << "\n";
    }
    return m;
}

CorpusManifest load_manifest(const std::string& corpus_dir) {
    CorpusManifest m;
    {
        std::ifstream f(corpus_dir + "/gen_config.json");
        if (!f) throw DataError("missing gen_config.json in: " + corpus_dir);
        json j = json::parse(f);
        GenConfig& g = m.gen;
        g.n_positive = j.at("n_positive");
        g.n_negative = j.at("n_negative");
        g.payload_vocab = j.at("payload_vocab");
        g.negative_vocab = j.at("negative_vocab");
        g.zipf_s = j.at("zipf_s");
        g.confusable_fraction = j.at("confusable_fraction");
        g.snr_min_db = j.at("snr_min_db");
        g.snr_max_db = j.at("snr_max_db");
        g.negative_timeline_hours = j.at("negative_timeline_hours");
        g.timeline_chunk_s = j.at("timeline_chunk_s");
        g.timeline_gap_min_s = j.at("timeline_gap_min_s");
        g.timeline_gap_max_s = j.at("timeline_gap_max_s");
        g.test_fraction = j.at("test_fraction");
        g.seed = j.at("seed");
        m.trigger_phones = j.at("trigger_phones").get<std::vector<int>>();
        m.negative_timeline_hours = j.at("realized_timeline_hours");
    }
    {
        std::ifstream f(corpus_dir + "/manifest.jsonl");
        if (!f) throw DataError("missing manifest.jsonl in: " + corpus_dir);
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            try {
                m.entries.push_back(entry_from_json(json::parse(line)));
            } catch (const json::exception& e) {
                throw DataError(std::string("bad manifest line: ") + e.what());
            }
        }
    }
    {
        std::ifstream f(corpus_dir + "/timeline.jsonl");
        if (f) {
            std::string line;
            while (std::getline(f, line)) {
                if (line.empty()) continue;
                json j = json::parse(line);
                m.timeline.push_back({j.at("wav"), j.at("duration_s"), j.at("n_bursts")});
            }
        }
    }
    if (m.entries.empty()) throw DataError("empty manifest in: " + corpus_dir);
    return m;
}

}  // namespace pvt
