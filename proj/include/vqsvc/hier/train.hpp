#pragma once

#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "vqsvc/hier/module.hpp"
#include "vqsvc/io/corpus.hpp"
#include "vqsvc/nn/adam.hpp"

namespace vqsvc::hier {

struct TrainingConfig {
    long frame_length = 7680;
    int batch_size = 32;
    double beta = 0.25;
    long iterations = 20000;
    double learning_rate = 0.0002;
    std::uint64_t seed = 1234;

    void validate() const {
        require(frame_length > 0 && batch_size > 0 && iterations > 0,
                ErrorCategory::bad_config, "training sizes must be positive");
        require(beta >= 0.0, ErrorCategory::bad_config, "beta must be nonnegative");
        require(learning_rate > 0.0, ErrorCategory::bad_config, "learning rate must be positive");
    }
};

struct LossRecord {
    long iteration = 0;
    double rec = 0.0;
    double codebook = 0.0;
    double commitment = 0.0;
    double wall_s = 0.0;

    double total() const { return rec + codebook + commitment; }
};

// Cuts random fixed-length frames from a corpus at the module's rate. Files
// are resampled once up front; for an upper module the aligned low-resolution
// conditioning channel (down- then re-upsampled audio) is precomputed
// full-length and sliced with the same offsets.
template <class T>
class FrameSampler {
public:
    FrameSampler(const io::Corpus& corpus, const VqModule<T>& m, long frame_length)
        : frame_length_(frame_length), rate_(m.spec().sample_rate_hz) {
        require(!corpus.items.empty(), ErrorCategory::invalid_input, "corpus is empty");
        for (const auto& item : corpus.items) {
            Prepared p;
            p.singer_index = m.singers().index_of(item.singer_id);
            signal::Waveform w = item.audio.sample_rate_hz == rate_
                                     ? item.audio
                                     : signal::resample(item.audio, rate_);
            if (static_cast<long>(w.samples.size()) < frame_length) continue;
            if (m.spec().uses_low_res_conditioning) {
                signal::Waveform down = signal::resample(w, m.spec().low_rate_hz);
                signal::Waveform up = signal::resample(down, rate_);
                up.samples.resize(w.samples.size(), 0.0);
                p.low = std::move(up.samples);
            }
            p.samples = std::move(w.samples);
            files_.push_back(std::move(p));
        }
        require(!files_.empty(), ErrorCategory::invalid_input,
                "no corpus file is at least one frame long");
    }

    FrameBundle sample(Rng& rng) const {
        const auto& f = files_[rng() % files_.size()];
        const std::uint64_t span = f.samples.size() - static_cast<std::uint64_t>(frame_length_) + 1;
        const long o = static_cast<long>(rng() % span);
        return cut(f, o);
    }

    size_t file_count() const { return files_.size(); }

private:
    struct Prepared {
        std::vector<double> samples;
        std::vector<double> low;
        long singer_index = 0;
    };

    FrameBundle cut(const Prepared& f, long offset) const {
        FrameBundle b;
        b.singer_index = f.singer_index;
        b.samples.assign(f.samples.begin() + offset, f.samples.begin() + offset + frame_length_);
        if (!f.low.empty())
            b.low_channel.assign(f.low.begin() + offset, f.low.begin() + offset + frame_length_);
        signal::Waveform frame{b.samples, rate_};
        b.f0 = signal::extract_f0(frame).f0_hz;
        b.env = signal::extract_envelope(frame).values;
        require(!b.f0.empty() && !b.env.empty(), ErrorCategory::invalid_input,
                "frame too short for feature extraction");
        return b;
    }

    long frame_length_;
    int rate_;
    std::vector<Prepared> files_;
};

// Optimizes L_rec + codebook + commitment with gradient clipping at global
// norm 5. Appends one tab-separated record per iteration to `log` when given:
// iteration, L_rec, codebook, commitment, cumulative wall-clock seconds.
// start_iteration > 0 resumes counting without re-initializing parameters.
template <class T>
std::vector<LossRecord> train_module(VqModule<T>& m, const io::Corpus& corpus,
                                     const TrainingConfig& cfg, std::ostream* log = nullptr,
                                     long start_iteration = 0,
                                     nn::Adam<T>* optimizer = nullptr) {
    cfg.validate();
    FrameSampler<T> sampler(corpus, m, cfg.frame_length);
    if (start_iteration == 0) {
        Rng init_rng = derived_rng(cfg.seed, 0);
        m.init(init_rng);
    }
    nn::ParamSet<T> ps;
    m.collect_params(ps);
    nn::Adam<T> local_opt(typename nn::Adam<T>::Config{cfg.learning_rate, 0.9, 0.999, 1e-8});
    nn::Adam<T>* opt = optimizer ? optimizer : &local_opt;
    opt->set_lr(cfg.learning_rate);

    std::vector<LossRecord> history;
    history.reserve(static_cast<size_t>(cfg.iterations));
    const auto t0 = std::chrono::steady_clock::now();
    for (long iter = start_iteration; iter < start_iteration + cfg.iterations; ++iter) {
        // Per-iteration stream: resuming at iteration k replays the same
        // batches a straight run would have drawn.
        Rng rng = derived_rng(cfg.seed, 1000 + static_cast<std::uint64_t>(iter));
        std::vector<FrameBundle> batch;
        batch.reserve(static_cast<size_t>(cfg.batch_size));
        for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(sampler.sample(rng));

        ps.zero_grads();
        const auto losses = m.train_step_grads(batch, cfg.beta);
        nn::clip_global_norm(ps, 5.0);
        opt->update(ps);

        LossRecord rec;
        rec.iteration = iter;
        rec.rec = losses.rec;
        rec.codebook = losses.codebook;
        rec.commitment = losses.commitment;
        rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.push_back(rec);
        if (log) {
            (*log) << rec.iteration << '\t' << rec.rec << '\t' << rec.codebook << '\t'
                   << rec.commitment << '\t' << rec.wall_s << '\n';
        }
    }
    m.set_trained(true);
    return history;
}

}  // namespace vqsvc::hier
