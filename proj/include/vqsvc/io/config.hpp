#pragma once

#include <string>

#include "vqsvc/hier/module.hpp"
#include "vqsvc/hier/train.hpp"
#include "vqsvc/io/corpus.hpp"
#include "vqsvc/net/decoder.hpp"

namespace vqsvc::io {

// Everything a run needs, with full-scale defaults baked in. A config file
// overrides defaults; command-line flags override the file. Unknown keys are
// rejected so typos cannot silently fall back to defaults.
struct RunConfig {
    std::uint64_t seed = 1234;
    std::string corpus_dir = "corpus";
    std::string checkpoint_dir = "checkpoints";
    std::string report_dir = "reports";
    net::GenMode gen_mode = net::GenMode::sample;

    SynthDataParams synth;
    hier::ModuleSpec bottom;
    hier::ModuleSpec upper;
    hier::TrainingConfig train_bottom;
    hier::TrainingConfig train_upper;

    RunConfig();  // fills in the full-scale module topologies
};

// Merge the JSON document at `path` into `cfg`. Missing keys keep their
// current values; unknown keys are an error naming the offending key.
void load_run_config(const std::string& path, RunConfig& cfg);

// Parse just a module section (used by checkpoint manifests).
hier::ModuleSpec parse_module_spec(const std::string& json_text);
std::string module_spec_to_json(const hier::ModuleSpec& spec);

std::string training_config_to_json(const hier::TrainingConfig& cfg);
hier::TrainingConfig parse_training_config(const std::string& json_text);

const char* gen_mode_name(net::GenMode mode);
net::GenMode parse_gen_mode(const std::string& name);

}  // namespace vqsvc::io
