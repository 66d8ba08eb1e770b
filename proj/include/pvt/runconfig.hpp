#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvt/corpus.hpp"
#include "pvt/frontend.hpp"
#include "pvt/model.hpp"
#include "pvt/scorer.hpp"
#include "pvt/trainer.hpp"

namespace pvt {

// Everything one experiment needs, in one JSON file. The master seed derives
// every module seed by labeled hashing; gen.seed / train.seed are therefore
// not part of the file.
struct RunConfig {
    std::string corpus_dir = "corpus";
    std::string checkpoint = "checkpoint.pvtc";
    std::string out_dir = "out";
    std::uint64_t seed = 1234;

    GenConfig gen;
    FrontendConfig frontend;
    ModelConfig model;
    TrainConfig train;
    StubConfig stub;

    std::vector<double> contexts = {0.3, 0.5, 1.0, 1.5, 2.0};
    double early_context = 0.3;
    double late_context = 2.0;
    double early_frr_target = 0.03;
    double late_frr_target = 0.01;
    bool late_over_deferred_only = false;
    std::string aggregate = "max";  // or "mean"
    std::int64_t operating_fa_count = 50;
    double operating_hours_per_fa = 100.0;
};

std::string runconfig_to_json(const RunConfig& cfg);
RunConfig runconfig_from_json(const std::string& text);

RunConfig load_runconfig(const std::string& path);
void save_runconfig(const std::string& path, const RunConfig& cfg);

}  // namespace pvt
