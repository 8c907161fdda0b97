#include "vqsvc/io/config.hpp"

#include <fstream>

#include "json.hpp"

namespace vqsvc::io {

using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& section, const std::string& key) {
    fail(ErrorCategory::bad_config, "unknown config key: " + section + "." + key);
}

template <class F>
void walk(const json& j, const std::string& section, F&& handle) {
    require(j.is_object(), ErrorCategory::bad_config, "config section '" + section +
                                                          "' must be an object");
    for (const auto& [key, value] : j.items())
        if (!handle(key, value)) bad_key(section, key);
}

int as_int(const json& v, const std::string& what) {
    require(v.is_number_integer(), ErrorCategory::bad_config, what + " must be an integer");
    return v.get<int>();
}

double as_num(const json& v, const std::string& what) {
    require(v.is_number(), ErrorCategory::bad_config, what + " must be a number");
    return v.get<double>();
}

std::string as_str(const json& v, const std::string& what) {
    require(v.is_string(), ErrorCategory::bad_config, what + " must be a string");
    return v.get<std::string>();
}

std::vector<int> as_int_list(const json& v, const std::string& what) {
    require(v.is_array(), ErrorCategory::bad_config, what + " must be a list of integers");
    std::vector<int> out;
    for (const auto& e : v) out.push_back(as_int(e, what + " entry"));
    return out;
}

void merge_module(const json& j, const std::string& section, hier::ModuleSpec& m) {
    walk(j, section, [&](const std::string& k, const json& v) {
        if (k == "scale") m.scale = as_str(v, k);
        else if (k == "sample_rate_hz") m.sample_rate_hz = as_int(v, k);
        else if (k == "low_rate_hz") m.low_rate_hz = as_int(v, k);
        else if (k == "uses_low_res_conditioning") {
            require(v.is_boolean(), ErrorCategory::bad_config, k + " must be a boolean");
            m.uses_low_res_conditioning = v.get<bool>();
        }
        else if (k == "codebook_size") m.codebook_size = as_int(v, k);
        else if (k == "latent_dim") m.encoder.latent_dim = as_int(v, k);
        else if (k == "encoder_blocks") m.encoder.n_blocks = as_int(v, k);
        else if (k == "encoder_channels") m.encoder.block_channels = as_int_list(v, k);
        else if (k == "pitch_dim") m.pitch_dim = as_int(v, k);
        else if (k == "loud_dim") m.loud_dim = as_int(v, k);
        else if (k == "singer_dim") m.singer_dim = as_int(v, k);
        else if (k == "decoder_layers") m.decoder.n_layers = as_int(v, k);
        else if (k == "decoder_channels") m.decoder.channels = as_int(v, k);
        else if (k == "dilation_cycle") m.decoder.dilation_cycle = as_int_list(v, k);
        else return false;
        return true;
    });
    m.encoder.in_rate_hz = m.sample_rate_hz;
}

json module_json(const hier::ModuleSpec& m) {
    return json{{"scale", m.scale},
                {"sample_rate_hz", m.sample_rate_hz},
                {"low_rate_hz", m.low_rate_hz},
                {"uses_low_res_conditioning", m.uses_low_res_conditioning},
                {"codebook_size", m.codebook_size},
                {"latent_dim", m.encoder.latent_dim},
                {"encoder_blocks", m.encoder.n_blocks},
                {"encoder_channels", m.encoder.block_channels},
                {"pitch_dim", m.pitch_dim},
                {"loud_dim", m.loud_dim},
                {"singer_dim", m.singer_dim},
                {"decoder_layers", m.decoder.n_layers},
                {"decoder_channels", m.decoder.channels},
                {"dilation_cycle", m.decoder.dilation_cycle}};
}

void merge_training(const json& j, const std::string& section, hier::TrainingConfig& t) {
    walk(j, section, [&](const std::string& k, const json& v) {
        if (k == "frame_length") t.frame_length = as_int(v, k);
        else if (k == "batch_size") t.batch_size = as_int(v, k);
        else if (k == "beta") t.beta = as_num(v, k);
        else if (k == "iterations") t.iterations = as_int(v, k);
        else if (k == "learning_rate") t.learning_rate = as_num(v, k);
        else return false;
        return true;
    });
}

json training_json(const hier::TrainingConfig& t) {
    return json{{"frame_length", t.frame_length},
                {"batch_size", t.batch_size},
                {"beta", t.beta},
                {"iterations", t.iterations},
                {"learning_rate", t.learning_rate},
                {"seed", t.seed}};
}

void merge_synth(const json& j, SynthDataParams& s) {
    walk(j, "synth", [&](const std::string& k, const json& v) {
        if (k == "n_singers") s.n_singers = as_int(v, k);
        else if (k == "n_songs") s.n_songs = as_int(v, k);
        else if (k == "sample_rate_hz") s.sample_rate_hz = as_int(v, k);
        else if (k == "duration_s") s.song.duration_s = as_num(v, k);
        else return false;
        return true;
    });
}

}  // namespace

RunConfig::RunConfig() {
    bottom.scale = "bottom";
    bottom.sample_rate_hz = 8000;
    bottom.encoder.in_rate_hz = 8000;
    bottom.encoder.n_blocks = 6;
    bottom.encoder.latent_dim = 512;
    bottom.encoder.block_channels = {64, 128, 256, 256, 512, 512};

    upper.scale = "upper";
    upper.sample_rate_hz = 48000;
    upper.low_rate_hz = 8000;
    upper.uses_low_res_conditioning = true;
    upper.encoder.in_rate_hz = 48000;
    upper.encoder.n_blocks = 8;
    upper.encoder.latent_dim = 512;
    upper.encoder.block_channels = {64, 128, 256, 256, 512, 512, 512, 512};
}

void load_run_config(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    require(bool(in), ErrorCategory::missing_file, "cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorCategory::bad_config, "config parse error in " + path + ": " + e.what());
    }
    walk(j, "(top level)", [&](const std::string& k, const json& v) {
        if (k == "seed") {
            require(v.is_number_unsigned() || v.is_number_integer(), ErrorCategory::bad_config,
                    "seed must be an integer");
            cfg.seed = v.get<std::uint64_t>();
        }
        else if (k == "corpus_dir") cfg.corpus_dir = as_str(v, k);
        else if (k == "checkpoint_dir") cfg.checkpoint_dir = as_str(v, k);
        else if (k == "report_dir") cfg.report_dir = as_str(v, k);
        else if (k == "generation_mode") cfg.gen_mode = parse_gen_mode(as_str(v, k));
        else if (k == "synth") merge_synth(v, cfg.synth);
        else if (k == "bottom") merge_module(v, "bottom", cfg.bottom);
        else if (k == "upper") merge_module(v, "upper", cfg.upper);
        else if (k == "train_bottom") merge_training(v, "train_bottom", cfg.train_bottom);
        else if (k == "train_upper") merge_training(v, "train_upper", cfg.train_upper);
        else return false;
        return true;
    });
    // Seeds funnel through the one top-level value.
    cfg.synth.seed = cfg.seed;
    cfg.train_bottom.seed = cfg.seed;
    cfg.train_upper.seed = cfg.seed;
}

hier::ModuleSpec parse_module_spec(const std::string& json_text) {
    hier::ModuleSpec m;
    m.encoder.block_channels.clear();
    try {
        merge_module(json::parse(json_text), "module", m);
    } catch (const json::exception& e) {
        fail(ErrorCategory::bad_config, std::string("module spec parse error: ") + e.what());
    }
    return m;
}

std::string module_spec_to_json(const hier::ModuleSpec& spec) {
    return module_json(spec).dump();
}

std::string training_config_to_json(const hier::TrainingConfig& cfg) {
    return training_json(cfg).dump();
}

hier::TrainingConfig parse_training_config(const std::string& json_text) {
    hier::TrainingConfig t;
    try {
        json j = json::parse(json_text);
        // Standalone records carry the seed; inside a run config the one
        // top-level seed is funneled in instead and the key is rejected.
        if (j.contains("seed")) {
            t.seed = j.at("seed").get<std::uint64_t>();
            j.erase("seed");
        }
        merge_training(j, "training", t);
    } catch (const json::exception& e) {
        fail(ErrorCategory::bad_config, std::string("training config parse error: ") + e.what());
    }
    return t;
}

const char* gen_mode_name(net::GenMode mode) {
    return mode == net::GenMode::argmax ? "argmax" : "sample";
}

net::GenMode parse_gen_mode(const std::string& name) {
    if (name == "argmax") return net::GenMode::argmax;
    if (name == "sample") return net::GenMode::sample;
    fail(ErrorCategory::bad_config, "generation_mode must be 'argmax' or 'sample', got '" +
                                        name + "'");
}

}  // namespace vqsvc::io
