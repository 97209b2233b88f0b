// wav.hpp — minimal RIFF/WAVE codec for the one format the toolkit accepts:
// PCM 16-bit, mono, 16 kHz. Samples map to [-1, 1] by division by 32768;
// writing rounds x * 32768 to the nearest integer and clamps, so a file read
// and written back is payload-identical.
#pragma once

#include <string>
#include <vector>

namespace svad {

struct Waveform {
  std::vector<float> samples;
  int fs = 16000;
};

constexpr int kRequiredFs = 16000;

// Throws std::runtime_error naming the offending field on anything that is
// not PCM-16 mono 16 kHz.
Waveform read_wav(const std::string& path);

// Atomic: writes a temp file in the same directory, then renames.
void write_wav(const std::string& path, const std::vector<float>& samples,
               int fs = kRequiredFs);

// Quantization used by write_wav, exposed for tests.
int16_t encode_sample(float x);

}  // namespace svad
