#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pvt/corpus.hpp"
#include "pvt/error.hpp"
#include "pvt/frontend.hpp"
#include "pvt/rng.hpp"
#include "pvt/trainer.hpp"

using namespace pvt;

namespace {

ManifestEntry fake_positive(double duration_s, double trigger_end) {
    ManifestEntry e;
    e.id = 7;
    e.positive = true;
    e.duration_s = duration_s;
    e.trigger_end = trigger_end;
    e.phones = {5, 3, 5};
    e.phone_starts = {0.0, 0.5, 1.0};
    e.phone_ends = {0.4, 0.9, 1.4};
    return e;
}

double view_end_tolerant(const std::vector<ViewSpec>& vs, int frames) {
    for (const auto& v : vs)
        if (v.frames == frames) return v.end_s;
    return -1.0;
}

bool params_equal(const NetParams<float>& a, const NetParams<float>& b) {
    bool same = true;
    std::vector<const Mat<float>*> av, bv;
    a.visit([&](const std::string&, const Mat<float>& m) { av.push_back(&m); });
    b.visit([&](const std::string&, const Mat<float>& m) { bv.push_back(&m); });
    for (std::size_t i = 0; i < av.size(); ++i)
        same = same && av[i]->v == bv[i]->v;
    return same;
}

float first_param(const NetParams<float>& p) {
    float out = 0.0f;
    bool got = false;
    p.visit([&](const std::string&, const Mat<float>& m) {
        if (!got && m.size() > 0) {
            out = m.v[0];
            got = true;
        }
    });
    return out;
}

struct TinySetup {
    GenConfig gen;
    ModelConfig model;
    FrontendConfig fe;
    TrainConfig tr;
    std::string dir;
};

TinySetup tiny_setup(const char* name, std::uint64_t seed) {
    TinySetup s;
    s.gen.n_positive = 10;
    s.gen.n_negative = 6;
    s.gen.negative_timeline_hours = 8.0 / 3600.0;
    s.gen.test_fraction = 0.25;
    s.gen.seed = seed;
    s.fe.mel_bins = 10;
    s.fe.stack_size = 3;
    s.fe.downsample = 3;
    s.model.num_layers = 1;
    s.model.hidden = 8;
    s.model.input_dim = s.fe.feature_dim();
    s.tr.seed = seed + 1;
    s.tr.batch_size = 4;
    s.dir = std::string("/tmp/pvt_trainer_") + name;
    std::filesystem::remove_all(s.dir);
    return s;
}

}  // namespace

TEST_CASE("make_views enumerates post-trigger prefixes plus the whole") {
    const FrontendConfig fe;  // 25 ms / 10 ms, stack 7, downsample 3
    const auto e = fake_positive(3.0, 0.8);
    const auto vs = make_views(e, fe, {0.0, 0.5, 1.0, 1.5, 2.0}, 22);
    REQUIRE(vs.size() == 6);

    // frame counts follow the stacked-frame geometry and stay sorted
    for (std::size_t i = 1; i < vs.size(); ++i) CHECK(vs[i].frames > vs[i - 1].frames);
    CHECK(vs[0].end_s == doctest::Approx(0.8));
    CHECK(vs[0].frames == stacked_frames_in(fe, 12800));
    CHECK(vs.back().end_s == doctest::Approx(3.0));
    CHECK(vs.back().is_whole);
    for (std::size_t i = 0; i + 1 < vs.size(); ++i) CHECK_FALSE(vs[i].is_whole);

    // labels gate on phone midpoints: 0.2, 0.7, 1.2
    CHECK(vs[0].labels.symbols == std::vector<int>{5, 3});       // end 0.8
    CHECK(vs[1].labels.symbols == std::vector<int>{5, 3, 5});    // end 1.3
    CHECK(vs.back().labels.symbols == std::vector<int>{5, 3, 5});
    for (const auto& v : vs) {
        CHECK(v.labels.blank_index == 22);
        CHECK(v.phonetic_ok);  // plenty of frames for <= 3 labels
    }
}

TEST_CASE("make_views anchors frame counts at candidate_start") {
    const FrontendConfig fe;
    auto e = fake_positive(3.0, 0.8);
    e.candidate_start = 0.1;
    const auto anchored = make_views(e, fe, {0.0}, 22);
    e.candidate_start = 0.0;
    const auto from_zero = make_views(e, fe, {0.0}, 22);
    REQUIRE(anchored.size() == 2);
    REQUIRE(from_zero.size() == 2);
    // the 0.1 s anchor removes exactly the frames that fit in 0.1 s less
    CHECK(anchored[0].end_s == from_zero[0].end_s);
    CHECK(anchored[0].frames == stacked_frames_in(fe, 16000 * 7 / 10));
    CHECK(anchored[0].frames < from_zero[0].frames);
    CHECK(anchored[1].frames == stacked_frames_in(fe, 16000 * 29 / 10));
}

TEST_CASE("make_views clips over-long offsets into the whole view") {
    const FrontendConfig fe;
    auto e = fake_positive(1.0, 0.9);
    e.phone_ends = {0.4, 0.9, 1.0};
    e.phone_starts = {0.0, 0.5, 0.95};
    const auto vs = make_views(e, fe, {0.0, 0.5, 1.0}, 22);
    REQUIRE(vs.size() == 2);  // 0.9 and the collapsed whole
    CHECK(vs[0].end_s == doctest::Approx(0.9));
    CHECK(vs[1].end_s == doctest::Approx(1.0));
    CHECK(vs[1].is_whole);
}

TEST_CASE("make_views dedupes offsets that land on the same frame count") {
    const FrontendConfig fe;
    const auto e = fake_positive(3.0, 0.8);
    const auto vs = make_views(e, fe, {0.0, 0.001}, 22);
    REQUIRE(vs.size() == 2);  // 0.8 and 0.801 share a frame count
    CHECK(vs[0].frames == stacked_frames_in(fe, 12800));
    CHECK(vs[1].is_whole);
}

TEST_CASE("make_views demands trigger_end on positives") {
    const FrontendConfig fe;
    auto e = fake_positive(3.0, 0.8);
    e.trigger_end = -1.0;
    CHECK_THROWS_WITH_AS(make_views(e, fe, {0.0}, 22), doctest::Contains("missing trigger_end"),
                         DataError);
}

TEST_CASE("make_views rejects utterances shorter than one window") {
    const FrontendConfig fe;
    ManifestEntry e;
    e.id = 3;
    e.positive = false;
    e.duration_s = 0.01;  // 160 samples < one 400-sample window
    CHECK_THROWS_WITH_AS(make_views(e, fe, {}, 22), doctest::Contains("no usable view"),
                         DataError);
}

TEST_CASE("adam_step with zero gradients is a no-op") {
    ModelConfig mc;
    mc.num_layers = 1;
    mc.hidden = 4;
    mc.input_dim = 6;
    auto params = init_params(mc, 5);
    const auto before = params;
    auto grads = init_params(mc, 6);
    grads.visit([](const std::string&, Mat<float>& g) { g.fill(0.0f); });
    auto m = grads, v = grads;
    const TrainConfig cfg;
    CHECK(adam_step(params, grads, m, v, 1, cfg) == 0.0);
    CHECK(params_equal(params, before));
}

TEST_CASE("adam_step clips the global norm before updating") {
    ModelConfig mc;
    mc.num_layers = 1;
    mc.hidden = 4;
    mc.input_dim = 6;
    auto params = init_params(mc, 5);
    const float p0 = first_param(params);
    auto grads = init_params(mc, 6);
    grads.visit([](const std::string&, Mat<float>& g) { g.fill(0.0f); });
    bool planted = false;
    grads.visit([&](const std::string&, Mat<float>& g) {
        if (!planted && g.size() > 0) {
            g.v[0] = 40.0f;  // twice the clip norm
            planted = true;
        }
    });
    auto m = grads, v = grads;
    m.visit([](const std::string&, Mat<float>& x) { x.fill(0.0f); });
    v.visit([](const std::string&, Mat<float>& x) { x.fill(0.0f); });
    TrainConfig cfg;  // clip 20, lr 0.0008
    const double norm = adam_step(params, grads, m, v, 1, cfg);
    CHECK(norm == doctest::Approx(40.0));
    // post-clip gradient 20; with bias correction the step is ~lr exactly
    CHECK(first_param(params) == doctest::Approx(p0 - cfg.learning_rate).epsilon(1e-4));
}

TEST_CASE("adam_step rejects non-finite gradients by tensor name") {
    ModelConfig mc;
    mc.num_layers = 1;
    mc.hidden = 4;
    mc.input_dim = 6;
    auto params = init_params(mc, 5);
    auto grads = init_params(mc, 6);
    grads.visit([](const std::string&, Mat<float>& g) { g.fill(0.0f); });
    bool planted = false;
    grads.visit([&](const std::string&, Mat<float>& g) {
        if (!planted && g.size() > 0) {
            g.v[0] = std::numeric_limits<float>::quiet_NaN();
            planted = true;
        }
    });
    auto m = grads, v = grads;
    CHECK_THROWS_WITH_AS(adam_step(params, grads, m, v, 1, TrainConfig{}),
                         doctest::Contains("non-finite gradient in tensor"), NumericError);
}

TEST_CASE("train is deterministic across runs") {
    auto s = tiny_setup("det", 300);
    const auto man = generate_corpus(s.gen, s.dir);
    s.tr.max_steps = 5;
    const auto r1 = train(man, s.dir, s.model, s.fe, s.tr, s.dir + "/log1.csv");
    const auto r2 = train(man, s.dir, s.model, s.fe, s.tr, s.dir + "/log2.csv");
    CHECK(r1.steps_run == 5);
    CHECK(params_equal(r1.ckpt.params, r2.ckpt.params));
    CHECK(params_equal(r1.ckpt.adam_m, r2.ckpt.adam_m));
    CHECK(params_equal(r1.ckpt.adam_v, r2.ckpt.adam_v));
    CHECK(r1.final_phonetic_loss == r2.final_phonetic_loss);
    CHECK(r1.final_disc_loss == r2.final_disc_loss);

    std::ifstream f1(s.dir + "/log1.csv"), f2(s.dir + "/log2.csv");
    const std::string l1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string l2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(l1 == l2);
    CHECK(l1.substr(0, l1.find('\n')) == "step,phonetic_loss,disc_loss,grad_norm_preclip");
}

TEST_CASE("train resumes bit-exactly from a checkpoint") {
    auto s = tiny_setup("resume", 301);
    const auto man = generate_corpus(s.gen, s.dir);

    s.tr.max_steps = 6;
    const auto full = train(man, s.dir, s.model, s.fe, s.tr, "");

    s.tr.max_steps = 3;
    const auto half = train(man, s.dir, s.model, s.fe, s.tr, "");
    CHECK(half.ckpt.step == 3);
    s.tr.max_steps = 6;
    const auto rest = train(man, s.dir, s.model, s.fe, s.tr, "", &half.ckpt);
    CHECK(rest.steps_run == 3);
    CHECK(rest.ckpt.step == 6);
    CHECK(params_equal(rest.ckpt.params, full.ckpt.params));
    CHECK(params_equal(rest.ckpt.adam_m, full.ckpt.adam_m));
    CHECK(params_equal(rest.ckpt.adam_v, full.ckpt.adam_v));
}

TEST_CASE("train with max_steps 0 returns the untouched init") {
    auto s = tiny_setup("zero", 302);
    const auto man = generate_corpus(s.gen, s.dir);
    s.tr.max_steps = 0;
    const auto r = train(man, s.dir, s.model, s.fe, s.tr, "");
    CHECK(r.steps_run == 0);
    CHECK(r.ckpt.step == 0);
    CHECK(params_equal(r.ckpt.params, init_params(s.model, derive_seed(s.tr.seed, "init"))));
    CHECK(r.ckpt.norm_mean.cols == s.fe.feature_dim());  // stats are still computed
}

TEST_CASE("a short training run reduces the phonetic loss") {
    auto s = tiny_setup("descend", 303);
    const auto man = generate_corpus(s.gen, s.dir);
    s.tr.max_steps = 40;
    s.tr.learning_rate = 0.003;
    const auto r = train(man, s.dir, s.model, s.fe, s.tr, s.dir + "/log.csv");
    CHECK(r.steps_run == 40);
    CHECK(r.holdout_disc_accuracy >= 0.0);
    CHECK(r.holdout_disc_accuracy <= 1.0);

    std::ifstream f(s.dir + "/log.csv");
    std::string line;
    std::getline(f, line);  // header
    std::vector<double> phon;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string step, p;
        std::getline(ss, step, ',');
        std::getline(ss, p, ',');
        phon.push_back(std::stod(p));
    }
    REQUIRE(phon.size() == 40);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 5; ++i) {
        head += phon[i] / 5.0;
        tail += phon[35 + i] / 5.0;
    }
    CHECK(tail < head);
}
