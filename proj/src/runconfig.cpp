#include "pvt/runconfig.hpp"

#include <fstream>
#include <sstream>

#include "pvt/error.hpp"

#include <json.hpp>

namespace pvt {
namespace {

using json = nlohmann::ordered_json;

json gen_to_json(const GenConfig& g) {
    return {{"n_positive", g.n_positive},
            {"n_negative", g.n_negative},
            {"payload_vocab", g.payload_vocab},
            {"negative_vocab", g.negative_vocab},
            {"zipf_s", g.zipf_s},
            {"confusable_fraction", g.confusable_fraction},
            {"verbatim_fraction", g.verbatim_fraction},
            {"snr_min_db", g.snr_min_db},
            {"snr_max_db", g.snr_max_db},
            {"negative_timeline_hours", g.negative_timeline_hours},
            {"timeline_chunk_s", g.timeline_chunk_s},
            {"timeline_gap_min_s", g.timeline_gap_min_s},
            {"timeline_gap_max_s", g.timeline_gap_max_s},
            {"test_fraction", g.test_fraction}};
}

void gen_from_json(const json& j, GenConfig& g) {
    g.n_positive = j.value("n_positive", g.n_positive);
    g.n_negative = j.value("n_negative", g.n_negative);
    g.payload_vocab = j.value("payload_vocab", g.payload_vocab);
    g.negative_vocab = j.value("negative_vocab", g.negative_vocab);
    g.zipf_s = j.value("zipf_s", g.zipf_s);
    g.confusable_fraction = j.value("confusable_fraction", g.confusable_fraction);
    g.verbatim_fraction = j.value("verbatim_fraction", g.verbatim_fraction);
    g.snr_min_db = j.value("snr_min_db", g.snr_min_db);
    g.snr_max_db = j.value("snr_max_db", g.snr_max_db);
    g.negative_timeline_hours = j.value("negative_timeline_hours", g.negative_timeline_hours);
    g.timeline_chunk_s = j.value("timeline_chunk_s", g.timeline_chunk_s);
    g.timeline_gap_min_s = j.value("timeline_gap_min_s", g.timeline_gap_min_s);
    g.timeline_gap_max_s = j.value("timeline_gap_max_s", g.timeline_gap_max_s);
    g.test_fraction = j.value("test_fraction", g.test_fraction);
}

json frontend_to_json(const FrontendConfig& f) {
    return {{"sample_rate", f.sample_rate}, {"window_ms", f.window_ms},
            {"hop_ms", f.hop_ms},           {"fft_size", f.fft_size},
            {"mel_bins", f.mel_bins},       {"fmin_hz", f.fmin_hz},
            {"fmax_hz", f.fmax_hz},         {"log_floor", f.log_floor},
            {"stack_size", f.stack_size},   {"downsample", f.downsample}};
}

void frontend_from_json(const json& j, FrontendConfig& f) {
    f.sample_rate = j.value("sample_rate", f.sample_rate);
    f.window_ms = j.value("window_ms", f.window_ms);
    f.hop_ms = j.value("hop_ms", f.hop_ms);
    f.fft_size = j.value("fft_size", f.fft_size);
    f.mel_bins = j.value("mel_bins", f.mel_bins);
    f.fmin_hz = j.value("fmin_hz", f.fmin_hz);
    f.fmax_hz = j.value("fmax_hz", f.fmax_hz);
    f.log_floor = j.value("log_floor", f.log_floor);
    f.stack_size = j.value("stack_size", f.stack_size);
    f.downsample = j.value("downsample", f.downsample);
}

json model_to_json(const ModelConfig& m) {
    return {{"num_layers", m.num_layers},
            {"hidden", m.hidden},
            {"input_dim", m.input_dim},
            {"phonetic_classes", m.phonetic_classes},
            {"discriminative_classes", m.discriminative_classes}};
}

void model_from_json(const json& j, ModelConfig& m) {
    m.num_layers = j.value("num_layers", m.num_layers);
    m.hidden = j.value("hidden", m.hidden);
    m.input_dim = j.value("input_dim", m.input_dim);
    m.phonetic_classes = j.value("phonetic_classes", m.phonetic_classes);
    m.discriminative_classes = j.value("discriminative_classes", m.discriminative_classes);
}

json train_to_json(const TrainConfig& t) {
    return {{"learning_rate", t.learning_rate},
            {"clip_norm", t.clip_norm},
            {"batch_size", t.batch_size},
            {"max_steps", t.max_steps},
            {"lambda_disc", t.lambda_disc},
            {"view_offsets", t.view_offsets},
            {"beta1", t.beta1},
            {"beta2", t.beta2},
            {"adam_eps", t.adam_eps}};
}

void train_from_json(const json& j, TrainConfig& t) {
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.clip_norm = j.value("clip_norm", t.clip_norm);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.max_steps = j.value("max_steps", t.max_steps);
    t.lambda_disc = j.value("lambda_disc", t.lambda_disc);
    t.view_offsets = j.value("view_offsets", t.view_offsets);
    t.beta1 = j.value("beta1", t.beta1);
    t.beta2 = j.value("beta2", t.beta2);
    t.adam_eps = j.value("adam_eps", t.adam_eps);
}

json stub_to_json(const StubConfig& s) {
    return {{"frame_s", s.frame_s},
            {"energy_threshold", s.energy_threshold},
            {"min_gap_s", s.min_gap_s},
            {"min_burst_s", s.min_burst_s},
            {"nominal_trigger_s", s.nominal_trigger_s},
            {"max_overlap_s", s.max_overlap_s}};
}

void stub_from_json(const json& j, StubConfig& s) {
    s.frame_s = j.value("frame_s", s.frame_s);
    s.energy_threshold = j.value("energy_threshold", s.energy_threshold);
    s.min_gap_s = j.value("min_gap_s", s.min_gap_s);
    s.min_burst_s = j.value("min_burst_s", s.min_burst_s);
    s.nominal_trigger_s = j.value("nominal_trigger_s", s.nominal_trigger_s);
    s.max_overlap_s = j.value("max_overlap_s", s.max_overlap_s);
}

}  // namespace

std::string runconfig_to_json(const RunConfig& cfg) {
    json j;
    j["corpus_dir"] = cfg.corpus_dir;
    j["checkpoint"] = cfg.checkpoint;
    j["out_dir"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["gen"] = gen_to_json(cfg.gen);
    j["frontend"] = frontend_to_json(cfg.frontend);
    j["model"] = model_to_json(cfg.model);
    j["train"] = train_to_json(cfg.train);
    j["stub"] = stub_to_json(cfg.stub);
    j["contexts"] = cfg.contexts;
    j["early_context"] = cfg.early_context;
    j["late_context"] = cfg.late_context;
    j["early_frr_target"] = cfg.early_frr_target;
    j["late_frr_target"] = cfg.late_frr_target;
    j["late_over_deferred_only"] = cfg.late_over_deferred_only;
    j["aggregate"] = cfg.aggregate;
    j["operating_fa_count"] = cfg.operating_fa_count;
    j["operating_hours_per_fa"] = cfg.operating_hours_per_fa;
    return j.dump(2) + "\n";
}

RunConfig runconfig_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("bad run config: ") + e.what());
    }
    RunConfig cfg;
    cfg.corpus_dir = j.value("corpus_dir", cfg.corpus_dir);
    cfg.checkpoint = j.value("checkpoint", cfg.checkpoint);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("gen")) gen_from_json(j["gen"], cfg.gen);
    if (j.contains("frontend")) frontend_from_json(j["frontend"], cfg.frontend);
    if (j.contains("model")) model_from_json(j["model"], cfg.model);
    if (j.contains("train")) train_from_json(j["train"], cfg.train);
    if (j.contains("stub")) stub_from_json(j["stub"], cfg.stub);
    cfg.contexts = j.value("contexts", cfg.contexts);
    cfg.early_context = j.value("early_context", cfg.early_context);
    cfg.late_context = j.value("late_context", cfg.late_context);
    cfg.early_frr_target = j.value("early_frr_target", cfg.early_frr_target);
    cfg.late_frr_target = j.value("late_frr_target", cfg.late_frr_target);
    cfg.late_over_deferred_only = j.value("late_over_deferred_only", cfg.late_over_deferred_only);
    cfg.aggregate = j.value("aggregate", cfg.aggregate);
    if (cfg.aggregate != "max" && cfg.aggregate != "mean")
        throw DataError("bad run config: aggregate must be \"max\" or \"mean\"");
    cfg.operating_fa_count = j.value("operating_fa_count", cfg.operating_fa_count);
    cfg.operating_hours_per_fa = j.value("operating_hours_per_fa", cfg.operating_hours_per_fa);
    return cfg;
}

RunConfig load_runconfig(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open config: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return runconfig_from_json(ss.str());
}

void save_runconfig(const std::string& path, const RunConfig& cfg) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write config: " + path);
    f << runconfig_to_json(cfg);
}

}  // namespace pvt
