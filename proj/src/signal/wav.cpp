#include "vqsvc/signal/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace vqsvc::signal {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCategory::missing_file, "cannot open " + path.string());
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    require(data.size() >= 44, ErrorCategory::io_error, "file too short for RIFF header");
    require(std::memcmp(data.data(), "RIFF", 4) == 0 && std::memcmp(data.data() + 8, "WAVE", 4) == 0,
            ErrorCategory::io_error, "not a RIFF/WAVE file: " + path.string());

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* payload = nullptr;
    std::size_t payload_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= data.size()) {
        const unsigned char* chunk = data.data() + pos;
        const std::uint32_t size = read_u32(chunk + 4);
        if (std::memcmp(chunk, "fmt ", 4) == 0 && size >= 16) {
            format = read_u16(chunk + 8);
            channels = read_u16(chunk + 10);
            rate = read_u32(chunk + 12);
            bits = read_u16(chunk + 22);
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            payload = chunk + 8;
            payload_size = std::min<std::size_t>(size, data.size() - pos - 8);
        }
        pos += 8 + size + (size & 1);  // chunks are word-aligned
    }

    require(rate > 0 && payload != nullptr, ErrorCategory::io_error,
            "missing fmt or data chunk: " + path.string());
    require(channels == 1, ErrorCategory::invalid_input,
            "expected mono input, got " + std::to_string(channels) + " channels: " + path.string());

    Waveform w;
    w.sample_rate_hz = static_cast<int>(rate);
    if (format == 1 && bits == 16) {
        const std::size_t n = payload_size / 2;
        w.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = static_cast<std::int16_t>(read_u16(payload + 2 * i));
            w.samples[i] = std::clamp(v / 32768.0, -1.0, 1.0);
        }
    } else if (format == 3 && bits == 32) {
        const std::size_t n = payload_size / 4;
        w.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t u = read_u32(payload + 4 * i);
            float f;
            std::memcpy(&f, &u, 4);
            w.samples[i] = std::clamp(static_cast<double>(f), -1.0, 1.0);
        }
    } else {
        fail(ErrorCategory::invalid_input,
             "unsupported WAV encoding (format " + std::to_string(format) + ", " +
                 std::to_string(bits) + " bits): " + path.string());
    }
    require(!w.samples.empty(), ErrorCategory::io_error, "empty data chunk: " + path.string());
    return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
    require(!w.samples.empty(), ErrorCategory::invalid_input, "waveform is empty");
    require(w.sample_rate_hz > 0, ErrorCategory::invalid_input, "sample rate must be positive");

    const std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * 2);
    std::vector<unsigned char> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
    put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_size);
    for (double s : w.samples) {
        const double clamped = std::clamp(s, -1.0, 1.0);
        auto v = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(v));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorCategory::io_error, "cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    require(f.good(), ErrorCategory::io_error, "short write: " + path.string());
}

}  // namespace vqsvc::signal
