#pragma once

#include <filesystem>

#include "vqsvc/signal/waveform.hpp"

namespace vqsvc::signal {

// Reads a mono RIFF/WAVE file, PCM 16-bit or IEEE float 32-bit.
// Multi-channel files are rejected with the channel count in the message.
Waveform read_wav(const std::filesystem::path& path);

// Writes a mono PCM 16-bit RIFF/WAVE file.
void write_wav(const std::filesystem::path& path, const Waveform& w);

}  // namespace vqsvc::signal
