#include "vqsvc/io/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "vqsvc/signal/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vqsvc::io {

namespace {

json load_json(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCategory::missing_file, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail(ErrorCategory::io_error, path.string() + ": " + e.what());
    }
    return j;
}

void save_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    require(out.good(), ErrorCategory::io_error, "cannot write " + path.string());
    out << j.dump(1) << "\n";
}

}  // namespace

void write_synthetic_corpus(const std::string& dir, const SynthDataParams& params, bool force) {
    require(params.n_singers >= 1 && params.n_songs >= 1, ErrorCategory::bad_config,
            "need at least one singer and one song");
    require(params.sample_rate_hz > 0, ErrorCategory::bad_config, "sample rate must be positive");
    const auto& timbres = signal::builtin_singer_timbres();
    require(params.n_singers <= static_cast<int>(timbres.size()), ErrorCategory::bad_config,
            "at most " + std::to_string(timbres.size()) + " built-in singer timbres");

    fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    require(!ec, ErrorCategory::io_error, "cannot create " + dir);
    if (!force && !fs::is_empty(root)) {
        fail(ErrorCategory::io_error, "output directory " + dir + " is not empty (use --force)");
    }

    json manifest;
    manifest["format_version"] = 1;
    manifest["sample_rate_hz"] = params.sample_rate_hz;
    json files = json::array();
    std::vector<std::string> singer_ids;
    for (int s = 0; s < params.n_singers; ++s)
        singer_ids.push_back("singer" + std::to_string(s));
    manifest["singers"] = singer_ids;

    for (int s = 0; s < params.n_singers; ++s) {
        for (int g = 0; g < params.n_songs; ++g) {
            Rng rng = derived_rng(params.seed, static_cast<std::uint64_t>(s) * 1000 + g);
            signal::SongScore score = signal::generate_song(params.song, rng);
            signal::Waveform w = signal::synth_tone(score.f0, score.envelope,
                                                    timbres[static_cast<size_t>(s)],
                                                    params.sample_rate_hz);
            const std::string stem = singer_ids[static_cast<size_t>(s)] + "_song" + std::to_string(g);
            signal::write_wav((root / (stem + ".wav")).string(), w);

            json side;
            side["singer"] = singer_ids[static_cast<size_t>(s)];
            side["f0_hop_s"] = score.f0.hop_s;
            side["f0_hz"] = score.f0.f0_hz;
            side["env_hop_s"] = score.envelope.hop_s;
            side["env_window_s"] = score.envelope.window_s;
            side["env"] = score.envelope.values;
            save_json(root / (stem + ".json"), side);

            files.push_back({{"wav", stem + ".wav"}, {"singer", singer_ids[static_cast<size_t>(s)]}});
        }
    }
    manifest["files"] = files;
    save_json(root / "manifest.json", manifest);
}

Corpus load_corpus(const std::string& dir) {
    fs::path root(dir);
    require(fs::exists(root / "manifest.json"), ErrorCategory::missing_file,
            "no manifest.json in " + dir);
    json manifest = load_json(root / "manifest.json");
    Corpus corpus;
    try {
        corpus.sample_rate_hz = manifest.at("sample_rate_hz").get<int>();
        corpus.singers = manifest.at("singers").get<std::vector<std::string>>();
        for (const auto& f : manifest.at("files")) {
            CorpusItem item;
            item.wav_name = f.at("wav").get<std::string>();
            item.singer_id = f.at("singer").get<std::string>();
            bool known = false;
            for (const auto& s : corpus.singers) known = known || s == item.singer_id;
            require(known, ErrorCategory::io_error,
                    item.wav_name + " names unregistered singer " + item.singer_id);
            item.audio = signal::read_wav((root / item.wav_name).string());
            require(item.audio.sample_rate_hz == corpus.sample_rate_hz, ErrorCategory::io_error,
                    item.wav_name + " sample rate differs from manifest");
            const fs::path side = root / (fs::path(item.wav_name).stem().string() + ".json");
            if (fs::exists(side)) {
                json sj = load_json(side);
                item.gt_f0.hop_s = sj.value("f0_hop_s", 0.005);
                item.gt_f0.f0_hz = sj.value("f0_hz", std::vector<double>{});
                item.gt_env.hop_s = sj.value("env_hop_s", 0.020);
                item.gt_env.window_s = sj.value("env_window_s", 0.040);
                item.gt_env.values = sj.value("env", std::vector<double>{});
            }
            corpus.items.push_back(std::move(item));
        }
    } catch (const json::exception& e) {
        fail(ErrorCategory::io_error, std::string("malformed manifest: ") + e.what());
    }
    require(!corpus.items.empty(), ErrorCategory::io_error, "corpus has no files");
    return corpus;
}

}  // namespace vqsvc::io
