// Command-line front end: corpus synthesis, per-scale training, conversion,
// and evaluation reports over a two-scale checkpoint pair.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vqsvc/common.hpp"
#include "vqsvc/conversion/convert.hpp"
#include "vqsvc/eval/metrics.hpp"
#include "vqsvc/eval/plots.hpp"
#include "vqsvc/eval/report.hpp"
#include "vqsvc/hier/infer.hpp"
#include "vqsvc/hier/train.hpp"
#include "vqsvc/io/checkpoint.hpp"
#include "vqsvc/io/config.hpp"
#include "vqsvc/io/corpus.hpp"
#include "vqsvc/signal/wav.hpp"

namespace fs = std::filesystem;
using namespace vqsvc;

namespace {

using Model = hier::VqModule<float>;

std::string ckpt_path(const io::RunConfig& cfg, const std::string& scale) {
    return cfg.checkpoint_dir + "/" + scale + ".ckpt";
}

// "expand:2.5" / "compress:3" / "identity"; theta is optional.
conversion::DynamicsCurveSpec parse_dynamics(const std::string& text) {
    conversion::DynamicsCurveSpec spec;
    std::string mode = text;
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        mode = text.substr(0, colon);
        const std::string theta_text = text.substr(colon + 1);
        try {
            size_t used = 0;
            spec.theta = std::stod(theta_text, &used);
            require(used == theta_text.size(), ErrorCategory::bad_args, "");
        } catch (...) {
            fail(ErrorCategory::bad_args, "bad dynamics strength: '" + theta_text + "'");
        }
    }
    if (mode == "identity") spec.mode = conversion::DynamicsCurveSpec::Mode::identity;
    else if (mode == "expand") spec.mode = conversion::DynamicsCurveSpec::Mode::expand;
    else if (mode == "compress") spec.mode = conversion::DynamicsCurveSpec::Mode::compress;
    else
        fail(ErrorCategory::bad_args,
             "dynamics must be identity, expand[:theta] or compress[:theta], got '" + text + "'");
    return spec;
}

// The singer an input WAV belongs to: explicit flag, else the sidecar JSON
// written next to synthesized corpus files.
std::string resolve_source_singer(const std::string& wav_path, const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    fs::path sidecar = fs::path(wav_path).replace_extension(".json");
    std::ifstream in(sidecar);
    if (in) {
        try {
            nlohmann::json j;
            in >> j;
            if (j.contains("singer")) return j.at("singer").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            // fall through to the error below
        }
    }
    fail(ErrorCategory::bad_args,
         "cannot determine the input's singer: pass --source-singer or provide " +
             sidecar.string());
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    require(bool(out), ErrorCategory::io_error, "cannot write " + path);
    out << body;
    require(bool(out), ErrorCategory::io_error, "failed writing " + path);
}

std::string kv(const std::string& key, const std::string& value) { return key + "\t" + value + "\n"; }
std::string kv(const std::string& key, double value) {
    std::ostringstream ss;
    ss << value;
    return kv(key, ss.str());
}

int run(int argc, char** argv) {
    CLI::App app{"two-scale vector-quantized singing-voice conversion"};
    app.require_subcommand(1);
    app.fallthrough();

    io::RunConfig cfg;
    std::string config_path;
    std::uint64_t seed_flag = 0;
    auto* config_opt = app.add_option("--config", config_path, "JSON run configuration");
    auto* seed_opt = app.add_option("--seed", seed_flag, "master seed (overrides config)");

    // ---- synth-data ----
    auto* synth = app.add_subcommand("synth-data", "generate a deterministic singing corpus");
    std::string synth_out;
    int synth_singers = -1, synth_songs = -1, synth_rate = -1;
    double synth_duration = -1.0;
    bool synth_force = false;
    synth->add_option("--out", synth_out, "output directory (default: corpus_dir)");
    synth->add_option("--singers", synth_singers, "number of singers");
    synth->add_option("--songs", synth_songs, "songs per singer");
    synth->add_option("--rate", synth_rate, "sample rate in Hz");
    synth->add_option("--duration", synth_duration, "song length in seconds");
    synth->add_flag("--force", synth_force, "allow writing into a non-empty directory");

    // ---- train ----
    auto* train = app.add_subcommand("train", "train one scale from a corpus");
    std::string train_scale, train_corpus, train_out, train_log;
    bool train_resume = false;
    int train_iters = -1, train_batch = -1, train_frame = -1;
    double train_lr = -1.0, train_beta = -1.0;
    train->add_option("scale", train_scale, "which module: bottom or upper")->required();
    train->add_option("--corpus", train_corpus, "corpus directory (default: corpus_dir)");
    train->add_option("--out", train_out, "checkpoint file (default: checkpoint_dir/<scale>.ckpt)");
    train->add_option("--log", train_log, "loss log TSV (default: <out>.log.tsv)");
    train->add_flag("--resume", train_resume, "continue from the existing checkpoint");
    train->add_option("--iterations", train_iters, "iterations to run in this invocation");
    train->add_option("--batch-size", train_batch, "sequences per step");
    train->add_option("--frame-length", train_frame, "training frame length in samples");
    train->add_option("--learning-rate", train_lr, "optimizer step size");
    train->add_option("--beta", train_beta, "commitment loss weight");

    // ---- convert ----
    auto* conv = app.add_subcommand("convert", "re-render an utterance with edits");
    std::string conv_in, conv_out, conv_bottom, conv_upper;
    std::string conv_target, conv_source, conv_dynamics = "identity", conv_mode;
    double conv_semitones = 0.0;
    conv->add_option("input", conv_in, "input WAV")->required();
    conv->add_option("--output", conv_out, "output WAV path")->required();
    conv->add_option("--bottom", conv_bottom, "bottom checkpoint (default: checkpoint_dir/bottom.ckpt)");
    conv->add_option("--upper", conv_upper, "upper checkpoint (default: checkpoint_dir/upper.ckpt)");
    conv->add_option("--target-singer", conv_target, "render with this singer's identity");
    conv->add_option("--source-singer", conv_source, "singer of the input (else read its sidecar)");
    conv->add_option("--semitones", conv_semitones, "pitch shift in semitones");
    conv->add_option("--dynamics", conv_dynamics, "identity | expand[:theta] | compress[:theta]");
    conv->add_option("--mode", conv_mode, "decoder output selection: sample or argmax");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "metrics and reports over a corpus");
    std::string eval_metric, eval_corpus, eval_bottom, eval_upper, eval_out, eval_scale = "bottom";
    std::string eval_variant = "noisy_conditioning", eval_mode;
    double eval_noise = 0.2;
    eval_cmd->add_option("--metric", eval_metric, "maer | usage | ablation")->required();
    eval_cmd->add_option("--corpus", eval_corpus, "corpus directory (default: corpus_dir)");
    eval_cmd->add_option("--bottom", eval_bottom, "bottom checkpoint");
    eval_cmd->add_option("--upper", eval_upper, "upper checkpoint");
    eval_cmd->add_option("--out", eval_out, "report directory (default: report_dir)");
    eval_cmd->add_option("--scale", eval_scale, "usage metric: which module to inspect");
    eval_cmd->add_option("--variant", eval_variant,
                         "ablation: noisy_conditioning | source_singer | no_embeddings");
    eval_cmd->add_option("--noise", eval_noise, "ablation: conditioning jitter level");
    eval_cmd->add_option("--mode", eval_mode, "decoder output selection: sample or argmax");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);  // one-line usage error (or help text) from the parser
    }

    if (config_opt->count()) io::load_run_config(config_path, cfg);
    if (seed_opt->count()) {
        cfg.seed = seed_flag;
        cfg.synth.seed = seed_flag;
        cfg.train_bottom.seed = seed_flag;
        cfg.train_upper.seed = seed_flag;
    }

    if (synth->parsed()) {
        io::SynthDataParams p = cfg.synth;
        if (synth_singers >= 0) p.n_singers = synth_singers;
        if (synth_songs >= 0) p.n_songs = synth_songs;
        if (synth_rate >= 0) p.sample_rate_hz = synth_rate;
        if (synth_duration >= 0.0) p.song.duration_s = synth_duration;
        const std::string out_dir = synth_out.empty() ? cfg.corpus_dir : synth_out;
        io::write_synthetic_corpus(out_dir, p, synth_force);
        std::cout << "wrote " << p.n_singers * p.n_songs << " files to " << out_dir << "\n";
        return 0;
    }

    if (train->parsed()) {
        require(train_scale == "bottom" || train_scale == "upper", ErrorCategory::bad_args,
                "scale must be 'bottom' or 'upper', got '" + train_scale + "'");
        const bool is_bottom = train_scale == "bottom";
        hier::ModuleSpec spec = is_bottom ? cfg.bottom : cfg.upper;
        hier::TrainingConfig tc = is_bottom ? cfg.train_bottom : cfg.train_upper;
        if (train_iters >= 0) tc.iterations = train_iters;
        if (train_batch >= 0) tc.batch_size = train_batch;
        if (train_frame >= 0) tc.frame_length = train_frame;
        if (train_lr >= 0.0) tc.learning_rate = train_lr;
        if (train_beta >= 0.0) tc.beta = train_beta;

        const std::string corpus_dir = train_corpus.empty() ? cfg.corpus_dir : train_corpus;
        io::Corpus corpus = io::load_corpus(corpus_dir);
        const std::string out = train_out.empty() ? ckpt_path(cfg, train_scale) : train_out;
        fs::create_directories(fs::path(out).parent_path().empty()
                                   ? fs::path(".")
                                   : fs::path(out).parent_path());

        Model m(spec, corpus.singers);
        nn::Adam<float> opt;
        long start_iter = 0;
        if (train_resume) {
            const io::CheckpointInfo info = io::load_checkpoint(out, m, &opt);
            require(info.scale == train_scale, ErrorCategory::bad_config,
                    "checkpoint at " + out + " holds the " + info.scale + " module");
            start_iter = info.iteration;
        }
        const std::string log_path = train_log.empty() ? out + ".log.tsv" : train_log;
        std::ofstream log(log_path, train_resume ? std::ios::app : std::ios::trunc);
        require(bool(log), ErrorCategory::io_error, "cannot write " + log_path);

        const auto history = hier::train_module(m, corpus, tc, &log, start_iter, &opt);
        const long end_iter = start_iter + tc.iterations;
        io::save_checkpoint(out, m, tc, end_iter, &opt);
        std::cout << "trained " << train_scale << " to iteration " << end_iter << "; final losses"
                  << " rec=" << history.back().rec << " codebook=" << history.back().codebook
                  << " commitment=" << history.back().commitment << "; checkpoint " << out << "\n";
        return 0;
    }

    if (conv->parsed()) {
        const std::string bpath = conv_bottom.empty() ? ckpt_path(cfg, "bottom") : conv_bottom;
        const std::string upath = conv_upper.empty() ? ckpt_path(cfg, "upper") : conv_upper;
        Model bottom = io::module_from_checkpoint<float>(bpath);
        Model upper = io::module_from_checkpoint<float>(upath);

        signal::Waveform w = signal::read_wav(conv_in);
        if (w.sample_rate_hz != upper.spec().sample_rate_hz)
            w = signal::resample(w, upper.spec().sample_rate_hz);
        const std::string source = resolve_source_singer(conv_in, conv_source);

        conversion::ConversionRequest req;
        if (!conv_target.empty()) req.target_singer = conv_target;
        req.semitone_shift = conv_semitones;
        req.dynamics = parse_dynamics(conv_dynamics);
        const net::GenMode mode =
            conv_mode.empty() ? cfg.gen_mode : io::parse_gen_mode(conv_mode);

        conversion::ConversionRecord record;
        signal::Waveform out = conversion::convert(bottom, upper, w, source, req, mode,
                                                   cfg.seed, &record);
        if (!fs::path(conv_out).parent_path().empty())
            fs::create_directories(fs::path(conv_out).parent_path());
        signal::write_wav(conv_out, out);

        nlohmann::json side{{"source_singer", source},
                            {"rendered_singer", record.singer_id},
                            {"semitones", req.semitone_shift},
                            {"pitch_ratio", record.pitch_ratio},
                            {"dynamics", conv_dynamics},
                            {"seed", cfg.seed},
                            {"mode", io::gen_mode_name(mode)}};
        if (record.compress_clamp) side["compress_clamp_threshold"] = *record.compress_clamp;
        write_text(fs::path(conv_out).replace_extension(".json").string(), side.dump(2) + "\n");
        std::cout << "wrote " << conv_out << " (" << out.samples.size() << " samples @"
                  << out.sample_rate_hz << " Hz)\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        const std::string corpus_dir = eval_corpus.empty() ? cfg.corpus_dir : eval_corpus;
        const std::string out_dir = eval_out.empty() ? cfg.report_dir : eval_out;
        const std::string bpath = eval_bottom.empty() ? ckpt_path(cfg, "bottom") : eval_bottom;
        const std::string upath = eval_upper.empty() ? ckpt_path(cfg, "upper") : eval_upper;
        const net::GenMode mode =
            eval_mode.empty() ? cfg.gen_mode : io::parse_gen_mode(eval_mode);
        fs::create_directories(out_dir);

        if (eval_metric == "usage") {
            require(eval_scale == "bottom" || eval_scale == "upper", ErrorCategory::bad_args,
                    "--scale must be 'bottom' or 'upper'");
            Model m = io::module_from_checkpoint<float>(eval_scale == "bottom" ? bpath : upath);
            io::Corpus corpus = io::load_corpus(corpus_dir);
            const eval::UsageDoc doc = eval::codebook_report(m, corpus);
            std::string body;
            body += kv("metric", "codebook_usage");
            body += kv("scale", doc.scale);
            body += kv("codebook_size", double(doc.usage.frequencies.size()));
            body += kv("used_count", double(doc.usage.used_count));
            body += kv("total_codes", double(doc.total_codes));
            for (const auto& [code, freq] : doc.sorted)
                if (freq > 0.0) body += kv("code_" + std::to_string(code), freq);
            write_text(out_dir + "/usage_" + doc.scale + ".txt", body);
            eval::write_usage_plot_svg(out_dir + "/usage_" + doc.scale + ".svg",
                                       doc.usage.frequencies, doc.usage.used_count,
                                       "codebook usage: " + doc.scale);
            std::cout << "usage(" << doc.scale << "): " << doc.usage.used_count << "/"
                      << doc.usage.frequencies.size() << " codes; report in " << out_dir << "\n";
            return 0;
        }

        if (eval_metric == "maer") {
            Model bottom = io::module_from_checkpoint<float>(bpath);
            Model upper = io::module_from_checkpoint<float>(upath);
            io::Corpus corpus = io::load_corpus(corpus_dir);
            require(!corpus.items.empty(), ErrorCategory::invalid_input, "corpus is empty");
            std::vector<signal::PitchTrack> refs, recs;
            std::string body = kv("metric", "maer");
            for (std::size_t i = 0; i < corpus.items.size(); ++i) {
                const auto& item = corpus.items[i];
                conversion::ConversionRequest req;  // pass-through resynthesis
                signal::Waveform out =
                    conversion::convert(bottom, upper, item.audio, item.singer_id, req, mode,
                                        cfg.seed + 1000 * static_cast<std::uint64_t>(i));
                refs.push_back(signal::extract_f0(item.audio));
                recs.push_back(signal::extract_f0(out));
                eval::write_f0_plot_svg(
                    out_dir + "/f0_" + fs::path(item.wav_name).stem().string() + ".svg",
                    {{"input", refs.back()}, {"resynthesis", recs.back()}},
                    "pitch: " + item.wav_name);
            }
            const eval::MetricsReport rep = eval::maer(refs, recs);
            body += kv("n_samples", double(rep.n_samples));
            body += kv("mae_hz", rep.mae_hz);
            body += kv("maer_percent", rep.maer_percent);
            for (std::size_t i = 0; i < corpus.items.size(); ++i) {
                body += kv("sample_" + std::to_string(i) + "_wav", corpus.items[i].wav_name);
                body += kv("sample_" + std::to_string(i) + "_mae_hz", rep.per_sample_mae_hz[i]);
                body += kv("sample_" + std::to_string(i) + "_maer_percent",
                           rep.per_sample_maer_percent[i]);
            }
            write_text(out_dir + "/maer.txt", body);
            std::cout << "maer: " << rep.maer_percent << "% over " << rep.n_samples
                      << " samples; report in " << out_dir << "\n";
            return 0;
        }

        if (eval_metric == "ablation") {
            Model bottom = io::module_from_checkpoint<float>(bpath);
            Model upper = io::module_from_checkpoint<float>(upath);
            io::Corpus corpus = io::load_corpus(corpus_dir);
            const eval::AblationVariant variant = eval::parse_variant(eval_variant);
            const eval::AblationResult res =
                eval::run_ablation(bottom, upper, corpus, variant, mode, cfg.seed, eval_noise);
            std::string body = kv("metric", "ablation");
            body += kv("variant", eval::variant_name(variant));
            body += kv("noise_level", res.noise_level);
            body += kv("mean_maer_pipeline", res.mean_maer_pipeline);
            body += kv("mean_maer_variant", res.mean_maer_variant);
            body += kv("mean_env_corr_pipeline", res.mean_env_corr_pipeline);
            body += kv("mean_env_corr_variant", res.mean_env_corr_variant);
            body += kv("mean_spectral_db_pipeline", res.mean_spec_db_pipeline);
            body += kv("mean_spectral_db_variant", res.mean_spec_db_variant);
            for (std::size_t i = 0; i < res.items.size(); ++i) {
                const auto& r = res.items[i];
                const std::string stem = fs::path(r.wav_name).stem().string();
                body += kv("item_" + std::to_string(i) + "_wav", r.wav_name);
                body += kv("item_" + std::to_string(i) + "_maer_pipeline", r.maer_pipeline);
                body += kv("item_" + std::to_string(i) + "_maer_variant", r.maer_variant);
                body += kv("item_" + std::to_string(i) + "_env_corr_pipeline", r.env_corr_pipeline);
                body += kv("item_" + std::to_string(i) + "_env_corr_variant", r.env_corr_variant);
                body += kv("item_" + std::to_string(i) + "_spectral_db_pipeline", r.spec_db_pipeline);
                body += kv("item_" + std::to_string(i) + "_spectral_db_variant", r.spec_db_variant);
                signal::write_wav(out_dir + "/" + stem + "_pipeline.wav", res.pipeline_out[i]);
                signal::write_wav(out_dir + "/" + stem + "_" + eval::variant_name(variant) + ".wav",
                                  res.variant_out[i]);
            }
            write_text(out_dir + "/ablation_" + std::string(eval::variant_name(variant)) + ".txt",
                       body);
            std::cout << "ablation " << eval::variant_name(variant) << ": maer "
                      << res.mean_maer_pipeline << "% (pipeline) vs " << res.mean_maer_variant
                      << "% (variant); report in " << out_dir << "\n";
            return 0;
        }

        fail(ErrorCategory::unknown_metric, "unknown metric: " + eval_metric);
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.category()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 3;
    }
}
