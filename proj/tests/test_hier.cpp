#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "vqsvc/eval/metrics.hpp"
#include "vqsvc/hier/infer.hpp"
#include "vqsvc/hier/module.hpp"
#include "vqsvc/hier/train.hpp"
#include "vqsvc/io/corpus.hpp"
#include "vqsvc/signal/features.hpp"
#include "vqsvc/signal/resample.hpp"

using namespace vqsvc;

namespace {

hier::ModuleSpec mini_spec(const std::string& scale, int rate, int low_rate) {
    hier::ModuleSpec s;
    s.scale = scale;
    s.sample_rate_hz = rate;
    s.low_rate_hz = low_rate;
    s.uses_low_res_conditioning = (scale == "upper");
    s.encoder.n_blocks = 2;
    s.encoder.in_rate_hz = rate;
    s.encoder.latent_dim = 4;
    s.encoder.block_channels = {8, 8};
    s.decoder.n_layers = 4;
    s.decoder.channels = 8;
    s.decoder.dilation_cycle = {1, 2};
    s.codebook_size = 8;
    s.pitch_dim = 3;
    s.loud_dim = 3;
    s.singer_dim = 4;
    return s;
}

// One voiced file per singer, each exactly `len` samples so every sampled
// frame is the whole file.
io::Corpus tone_corpus(int rate, long len, const std::vector<std::string>& singers) {
    io::Corpus c;
    c.sample_rate_hz = rate;
    c.singers = singers;
    for (size_t k = 0; k < singers.size(); ++k) {
        io::CorpusItem item;
        item.wav_name = singers[k] + "_tone.wav";
        item.singer_id = singers[k];
        item.audio.sample_rate_hz = rate;
        item.audio.samples.resize(static_cast<size_t>(len));
        const double hz = 220.0 * (1.0 + 0.12 * static_cast<double>(k));
        for (long i = 0; i < len; ++i)
            item.audio.samples[static_cast<size_t>(i)] =
                0.5 * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / rate);
        c.items.push_back(std::move(item));
    }
    return c;
}

hier::TrainingConfig mini_cfg(long frame, long iters, std::uint64_t seed) {
    hier::TrainingConfig cfg;
    cfg.frame_length = frame;
    cfg.batch_size = 8;
    cfg.beta = 0.25;
    cfg.iterations = iters;
    cfg.learning_rate = 2e-3;
    cfg.seed = seed;
    return cfg;
}

using GradMap = std::map<std::string, std::vector<double>>;

GradMap snapshot_grads(hier::VqModule<double>& m) {
    nn::ParamSet<double> ps;
    m.collect_params(ps);
    GradMap out;
    for (const auto& r : ps.refs())
        if (r.grad) out[r.name] = std::vector<double>(r.grad, r.grad + r.size());
    return out;
}

std::vector<std::vector<double>> snapshot_params(hier::VqModule<double>& m) {
    nn::ParamSet<double> ps;
    m.collect_params(ps);
    std::vector<std::vector<double>> out;
    for (const auto& r : ps.refs()) out.emplace_back(r.value, r.value + r.size());
    return out;
}

}  // namespace

TEST_CASE("training on one repeated frame at least halves the loss") {
    auto corpus = tone_corpus(4000, 256, {"s0"});
    hier::VqModule<double> m(mini_spec("bottom", 4000, 0), corpus.singers);
    auto cfg = mini_cfg(256, 500, 7);
    cfg.batch_size = 1;  // every draw is the same frame: file length == frame length
    auto hist = hier::train_module(m, corpus, cfg);
    REQUIRE(hist.size() == 500);
    CHECK(hist.front().rec == doctest::Approx(std::log(256.0)).epsilon(0.05));
    CHECK(hist.back().total() <= 0.5 * hist.front().total());
    CHECK(m.trained());
}

TEST_CASE("beta zero removes the commitment term from losses and gradients") {
    auto corpus = tone_corpus(4000, 256, {"s0"});
    auto spec = mini_spec("bottom", 4000, 0);

    auto cfg = mini_cfg(256, 5, 3);
    cfg.beta = 0.0;
    hier::VqModule<double> m(spec, corpus.singers);
    auto hist = hier::train_module(m, corpus, cfg);
    for (const auto& rec : hist) CHECK(rec.commitment == 0.0);

    // The commitment term is the only loss component scaled by beta, and it
    // reaches parameters only through the content encoder. Same init, same
    // batch: everything but the encoder gradient must be bit-identical.
    hier::VqModule<double> a(spec, corpus.singers), b(spec, corpus.singers);
    Rng ra = derived_rng(11, 0), rb = derived_rng(11, 0);
    a.init(ra);
    b.init(rb);
    hier::FrameSampler<double> sampler(corpus, a, 256);
    Rng rs = derived_rng(11, 1);
    std::vector<hier::FrameBundle> batch{sampler.sample(rs), sampler.sample(rs)};
    nn::ParamSet<double> psa, psb;
    a.collect_params(psa);
    b.collect_params(psb);
    psa.zero_grads();
    psb.zero_grads();
    auto la = a.train_step_grads(batch, 0.25);
    auto lb = b.train_step_grads(batch, 0.0);
    CHECK(la.commitment > 0.0);
    CHECK(lb.commitment == 0.0);
    CHECK(la.rec == lb.rec);
    CHECK(la.codebook == lb.codebook);
    GradMap ga = snapshot_grads(a), gb = snapshot_grads(b);
    REQUIRE(ga.size() == gb.size());
    bool encoder_differs = false;
    for (const auto& [name, va] : ga) {
        const auto& vb = gb.at(name);
        REQUIRE(va.size() == vb.size());
        if (name.rfind("encoder.", 0) == 0) {
            for (size_t i = 0; i < va.size(); ++i)
                if (va[i] != vb[i]) encoder_differs = true;
        } else {
            bool differs = false;
            for (size_t i = 0; i < va.size(); ++i)
                if (va[i] != vb[i]) differs = true;
            CHECK_MESSAGE(!differs, name << " gradient should not depend on beta");
        }
    }
    CHECK(encoder_differs);
}

TEST_CASE("same seed gives bit-identical loss histories and parameters") {
    auto corpus = tone_corpus(4000, 256, {"s0", "s1"});
    auto spec = mini_spec("bottom", 4000, 0);
    auto cfg = mini_cfg(256, 8, 99);

    hier::VqModule<double> a(spec, corpus.singers), b(spec, corpus.singers);
    auto ha = hier::train_module(a, corpus, cfg);
    auto hb = hier::train_module(b, corpus, cfg);
    REQUIRE(ha.size() == hb.size());
    for (size_t i = 0; i < ha.size(); ++i) {
        CHECK(ha[i].iteration == hb[i].iteration);
        CHECK(ha[i].rec == hb[i].rec);
        CHECK(ha[i].codebook == hb[i].codebook);
        CHECK(ha[i].commitment == hb[i].commitment);
    }
    auto pa = snapshot_params(a), pb = snapshot_params(b);
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
}

TEST_CASE("loss components decompose the optimized total") {
    auto corpus = tone_corpus(4000, 256, {"s0"});
    hier::VqModule<double> m(mini_spec("bottom", 4000, 0), corpus.singers);
    Rng ri = derived_rng(5, 0);
    m.init(ri);
    hier::FrameSampler<double> sampler(corpus, m, 256);
    Rng rs = derived_rng(5, 1);
    std::vector<hier::FrameBundle> batch{sampler.sample(rs)};
    auto l = m.train_step_grads(batch, 0.25);
    CHECK(l.total == doctest::Approx(l.rec + l.codebook + l.commitment).epsilon(1e-6));
    // Both vector-quantization penalties measure the same squared distance,
    // one stopping gradients on each side; only the weight differs.
    CHECK(l.commitment == doctest::Approx(0.25 * l.codebook).epsilon(1e-12));
    CHECK(l.rec > 0.0);
    CHECK(l.codebook > 0.0);
}

TEST_CASE("upper training is unaffected by bottom training in the same process") {
    auto corpus = tone_corpus(4000, 512, {"s0"});
    auto upper_spec = mini_spec("upper", 4000, 2000);
    auto cfg = mini_cfg(256, 4, 42);

    hier::VqModule<double> u1(upper_spec, corpus.singers);
    auto h1 = hier::train_module(u1, corpus, cfg);

    // Interleave a full bottom training run, then train a fresh upper module
    // with the same seed: histories and parameters must not move by one bit.
    hier::VqModule<double> bmod(mini_spec("bottom", 4000, 0), corpus.singers);
    hier::train_module(bmod, corpus, mini_cfg(256, 4, 42));

    hier::VqModule<double> u2(upper_spec, corpus.singers);
    auto h2 = hier::train_module(u2, corpus, cfg);
    REQUIRE(h1.size() == h2.size());
    for (size_t i = 0; i < h1.size(); ++i) {
        CHECK(h1[i].rec == h2[i].rec);
        CHECK(h1[i].codebook == h2[i].codebook);
        CHECK(h1[i].commitment == h2[i].commitment);
    }
    CHECK(snapshot_params(u1) == snapshot_params(u2));
}

TEST_CASE("reconstruct preserves length and refuses untrained modules") {
    auto corpus = tone_corpus(4000, 256, {"s0"});
    hier::VqModule<double> m(mini_spec("bottom", 4000, 0), corpus.singers);

    Rng rg = derived_rng(1, 2);
    try {
        hier::reconstruct(m, corpus.items[0].audio, "s0", {}, net::GenMode::sample, rg);
        FAIL("expected a refusal from the untrained module");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::untrained_module);
    }

    hier::train_module(m, corpus, mini_cfg(256, 30, 21));
    Rng r1 = derived_rng(9, 0);
    auto y = hier::reconstruct(m, corpus.items[0].audio, "s0", {}, net::GenMode::sample, r1);
    CHECK(y.samples.size() == corpus.items[0].audio.samples.size());
    CHECK(y.sample_rate_hz == 4000);

    // Overriding the singer with the source's own id changes nothing.
    hier::CondOverride ov;
    ov.singer_id = "s0";
    Rng r2 = derived_rng(9, 0);
    auto y2 = hier::reconstruct(m, corpus.items[0].audio, "s0", ov, net::GenMode::sample, r2);
    CHECK(y.samples == y2.samples);
}

TEST_CASE("overfit module reconstructs its one frame with small pitch error") {
    auto corpus = tone_corpus(4000, 256, {"s0"});
    hier::VqModule<double> m(mini_spec("bottom", 4000, 0), corpus.singers);
    auto cfg = mini_cfg(256, 2000, 7);
    cfg.batch_size = 1;  // the corpus is one frame; larger batches only repeat it
    hier::train_module(m, corpus, cfg);
    Rng rg = derived_rng(17, 0);
    auto y = hier::reconstruct(m, corpus.items[0].audio, "s0", {}, net::GenMode::argmax, rg);
    auto ref = signal::extract_f0(corpus.items[0].audio);
    auto rec = signal::extract_f0(y);
    auto rep = eval::maer({ref}, {rec});
    CHECK(rep.maer_percent < 5.0);
}

TEST_CASE("chained inference output matches the input length at the upper rate") {
    auto corpus = tone_corpus(8000, 512, {"s0"});
    hier::VqModule<double> bottom(mini_spec("bottom", 4000, 0), corpus.singers);
    hier::VqModule<double> upper(mini_spec("upper", 8000, 4000), corpus.singers);
    hier::train_module(bottom, corpus, mini_cfg(256, 10, 31));
    hier::train_module(upper, corpus, mini_cfg(512, 10, 32));

    const auto& w = corpus.items[0].audio;
    hier::Manipulations manip;
    auto track = signal::extract_f0(w);
    manip.f0 = track.f0_hz;
    for (double& v : manip.f0) v *= 1.5;  // any manipulation; plumbing is what's under test
    manip.env = signal::extract_envelope(w).values;
    manip.singer_id = "s0";

    hier::ChainTrace trace;
    auto y = hier::infer_chain(bottom, upper, w, manip, net::GenMode::sample, 123, nullptr, &trace);
    CHECK(y.samples.size() == w.samples.size());
    CHECK(y.sample_rate_hz == 8000);

    // Both scales must be conditioned on the one manipulated contour.
    CHECK(trace.bottom_f0 == manip.f0);
    CHECK(trace.upper_f0 == manip.f0);
    CHECK(trace.low_output.sample_rate_hz == 4000);
    CHECK(trace.low_output.samples.size() == 256);  // 512 resampled 8000 -> 4000
}

TEST_CASE("one second in gives exactly one upper-rate second out") {
    // Structure-only check at the full-scale rate pair; parameters stay at
    // their initialization.
    std::vector<std::string> singers{"s0"};
    hier::VqModule<double> bottom(mini_spec("bottom", 8000, 0), singers);
    hier::VqModule<double> upper(mini_spec("upper", 48000, 8000), singers);
    Rng r1 = derived_rng(1, 0), r2 = derived_rng(2, 0);
    bottom.init(r1);
    upper.init(r2);
    bottom.set_trained(true);
    upper.set_trained(true);

    signal::Waveform w;
    w.sample_rate_hz = 48000;
    w.samples.resize(48000);
    for (size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = 0.4 * std::sin(2.0 * M_PI * 220.0 * static_cast<double>(i) / 48000.0);

    hier::Manipulations manip;
    manip.f0 = signal::extract_f0(w).f0_hz;
    manip.env = signal::extract_envelope(w).values;
    manip.singer_id = "s0";
    auto y = hier::infer_chain(bottom, upper, w, manip, net::GenMode::argmax, 5);
    CHECK(y.samples.size() == 48000);
    CHECK(y.sample_rate_hz == 48000);
}

TEST_CASE("chained inference rejects mismatched module rates") {
    std::vector<std::string> singers{"s0"};
    hier::VqModule<double> bottom(mini_spec("bottom", 2000, 0), singers);
    hier::VqModule<double> upper(mini_spec("upper", 4000, 3000), singers);  // expects 3 kHz low
    bottom.set_trained(true);
    upper.set_trained(true);
    signal::Waveform w;
    w.sample_rate_hz = 4000;
    w.samples.assign(512, 0.1);
    hier::Manipulations manip;
    manip.f0 = {220.0};
    manip.env = {0.1};
    manip.singer_id = "s0";
    try {
        hier::infer_chain(bottom, upper, w, manip, net::GenMode::argmax, 1);
        FAIL("expected a rate-mismatch refusal");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("rate mismatch") != std::string::npos);
    }
}

TEST_CASE("conditioning mask leaves the bundle alone at noise level zero") {
    auto spec = mini_spec("bottom", 4000, 0);
    hier::VqModule<double> m(spec, {"s0"});
    Rng ri = derived_rng(3, 0);
    m.init(ri);
    hier::ConditioningBundle<double> cond;
    cond.content = m.codebook().embeddings().leftCols(5);
    cond.f0 = {440.0, 440.0, 441.0, 0.0};
    cond.env = {0.1, 0.2, 0.3};
    cond.singer = m.singers().embeddings().col(0);
    cond.low_channel = {0.0, 0.1, -0.1};

    hier::ConditioningMask mask;  // defaults: all streams on, zero noise
    auto out = hier::apply_mask(cond, mask, m.codebook(), 77);
    CHECK((out.content - cond.content).cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.f0 == cond.f0);
    CHECK(out.env == cond.env);
    CHECK((out.singer - cond.singer).cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.low_channel == cond.low_channel);
    CHECK(out.use_pitch);
    CHECK(out.use_loudness);
}

TEST_CASE("disabled conditioning streams become zeros") {
    auto spec = mini_spec("bottom", 4000, 0);
    hier::VqModule<double> m(spec, {"s0"});
    Rng ri = derived_rng(3, 0);
    m.init(ri);
    hier::ConditioningBundle<double> cond;
    cond.content = m.codebook().embeddings().leftCols(4);
    cond.f0 = {440.0};
    cond.env = {0.1};
    cond.singer = m.singers().embeddings().col(0);
    cond.low_channel = {0.5, 0.5};

    hier::ConditioningMask mask;
    mask.use_content = false;
    mask.use_singer = false;
    mask.use_low_res = false;
    auto out = hier::apply_mask(cond, mask, m.codebook(), 1);
    CHECK(out.content.cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.singer.cwiseAbs().maxCoeff() == 0.0);
    for (double v : out.low_channel) CHECK(v == 0.0);
    CHECK(out.f0 == cond.f0);  // pitch stream still on
}

TEST_CASE("twenty percent noise keeps a 440 Hz contour within its envelope") {
    auto spec = mini_spec("bottom", 4000, 0);
    hier::VqModule<double> m(spec, {"s0"});
    Rng ri = derived_rng(3, 0);
    m.init(ri);
    const auto& emb = m.codebook().embeddings();
    hier::ConditioningBundle<double> cond;
    cond.content.resize(emb.rows(), 40);
    std::vector<long> original_codes;
    for (long t = 0; t < 40; ++t) {
        const long code = (t * 3) % 5;  // codes {0,1,2,3,4} appear; {5,6,7} never
        cond.content.col(t) = emb.col(code);
        original_codes.push_back(code);
    }
    cond.f0.assign(200, 440.0);
    cond.env.assign(200, 0.25);
    cond.singer = m.singers().embeddings().col(0);

    hier::ConditioningMask mask;
    mask.noise_level = 0.2;
    auto out = hier::apply_mask(cond, mask, m.codebook(), 2024);
    for (double v : out.f0) {
        CHECK(v >= 352.0);
        CHECK(v <= 528.0);
    }
    for (double v : out.env) {
        CHECK(v >= 0.2);
        CHECK(v <= 0.3);
    }
    // Replacement content is resampled from the bundle's own code
    // distribution: every column must be one of the originally present codes.
    bool shuffled = false;
    for (long t = 0; t < out.content.cols(); ++t) {
        const long code = m.codebook().nearest(out.content.col(t).data());
        CHECK(code <= 4);
        CHECK((out.content.col(t) - emb.col(code)).cwiseAbs().maxCoeff() == 0.0);
        if (code != original_codes[static_cast<size_t>(t)]) shuffled = true;
    }
    CHECK(shuffled);
    // Different seeds perturb differently.
    auto out2 = hier::apply_mask(cond, mask, m.codebook(), 2025);
    CHECK(out.f0 != out2.f0);
}

TEST_CASE("mask noise levels outside the unit interval are rejected") {
    hier::ConditioningMask mask;
    mask.noise_level = 1.5;
    CHECK_THROWS_AS(mask.validate(), Error);
    mask.noise_level = -0.1;
    CHECK_THROWS_AS(mask.validate(), Error);
}

TEST_CASE("training logs one tab-separated record per iteration") {
    auto corpus = tone_corpus(4000, 256, {"s0"});
    hier::VqModule<double> m(mini_spec("bottom", 4000, 0), corpus.singers);
    std::ostringstream log;
    auto hist = hier::train_module(m, corpus, mini_cfg(256, 3, 1), &log);
    std::istringstream in(log.str());
    std::string line;
    long n = 0;
    while (std::getline(in, line)) {
        CHECK(std::count(line.begin(), line.end(), '\t') == 4);
        std::istringstream ls(line);
        long it;
        double rec, cb, com, wall;
        ls >> it >> rec >> cb >> com >> wall;
        CHECK(bool(ls));
        CHECK(it == n);
        CHECK(rec == doctest::Approx(hist[static_cast<size_t>(n)].rec).epsilon(1e-5));
        CHECK(wall >= 0.0);
        ++n;
    }
    CHECK(n == 3);
}
